#pragma once

// Dense compute kernels. Every kernel has an OpenMP-parallel version and a
// serial `_ref` version with plain loops; the reference versions exist for
// tests and benchmarks only.
//
// Parallel kernels partition work by output element, so each output is
// accumulated by exactly one thread in a fixed order. Results therefore do
// not depend on the thread count.

#include <cstddef>
#include <vector>

#include "trgan/tensor.hpp"

namespace trgan::kernels {

/// C(M x N) += A(M x K) * B(K x N), row-major with explicit leading dimensions.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc);
template <typename T>
void gemm_ref(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
              const T* b, std::size_t ldb, T* c, std::size_t ldc);

struct ConvGeometry {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;

  std::size_t out_size(std::size_t in) const {
    if (in + 2 * pad < kernel) throw ShapeError("conv2d: input smaller than kernel");
    return (in + 2 * pad - kernel) / stride + 1;
  }
  std::size_t patch_len() const { return in_channels * kernel * kernel; }
};

// Weight layout: (out_channels, in_channels, kernel, kernel). Bias may be null.
template <typename T>
void conv2d_forward(const Tensor<T>& in, const Tensor<T>& weight, const T* bias,
                    const ConvGeometry& g, Tensor<T>& out);
template <typename T>
void conv2d_forward_ref(const Tensor<T>& in, const Tensor<T>& weight, const T* bias,
                        const ConvGeometry& g, Tensor<T>& out);

/// grad_in += d(out)/d(in)^T grad_out. grad_in must already have the input shape.
template <typename T>
void conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& weight,
                           const ConvGeometry& g, Tensor<T>& grad_in);
template <typename T>
void conv2d_backward_input_ref(const Tensor<T>& grad_out, const Tensor<T>& weight,
                               const ConvGeometry& g, Tensor<T>& grad_in);

/// grad_w += ..., grad_b += ... (grad_b may be null).
template <typename T>
void conv2d_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                            const ConvGeometry& g, Tensor<T>& grad_w, T* grad_b);
template <typename T>
void conv2d_backward_params_ref(const Tensor<T>& in, const Tensor<T>& grad_out,
                                const ConvGeometry& g, Tensor<T>& grad_w, T* grad_b);

// Bilinear x2 upsampling, half-pixel centers (align_corners = false).
template <typename T>
void upsample2x_forward(const Tensor<T>& in, Tensor<T>& out);
template <typename T>
void upsample2x_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in);

// 2x2 max pooling, stride 2. `argmax` receives the flat input index per output.
template <typename T>
void maxpool2_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::size_t>& argmax);

}  // namespace trgan::kernels
