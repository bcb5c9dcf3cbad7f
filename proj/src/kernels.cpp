#include "trgan/kernels.hpp"

#include <algorithm>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace trgan::kernels {

namespace {

// Register tile: MR rows of C by NR columns, NR spanning two 256-bit vectors.
// GCC/Clang vector extensions keep the accumulators in registers.
template <typename T>
struct VecOf;
template <>
struct VecOf<float> {
  typedef float type __attribute__((vector_size(32)));
};
template <>
struct VecOf<double> {
  typedef double type __attribute__((vector_size(32)));
};
template <typename T>
using Vec = typename VecOf<T>::type;
template <typename T>
constexpr std::size_t kLanes = 32 / sizeof(T);
template <typename T>
constexpr std::size_t kNr = 2 * kLanes<T>;
constexpr std::size_t kMr = 6;

template <typename T>
inline Vec<T> load(const T* p) {
  Vec<T> v;
  __builtin_memcpy(&v, p, sizeof(v));
  return v;
}

template <typename T>
inline void store(T* p, Vec<T> v) {
  __builtin_memcpy(p, &v, sizeof(v));
}

template <typename T, std::size_t MR>
inline void tile_full(std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb, T* c,
                      std::size_t ldc) {
  constexpr std::size_t L = kLanes<T>;
  Vec<T> acc[MR][2] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const Vec<T> b0 = load(b + p * ldb);
    const Vec<T> b1 = load(b + p * ldb + L);
    for (std::size_t r = 0; r < MR; ++r) {
      const T av = a[r * lda + p];
      acc[r][0] += av * b0;
      acc[r][1] += av * b1;
    }
  }
  for (std::size_t r = 0; r < MR; ++r) {
    store(c + r * ldc, load(c + r * ldc) + acc[r][0]);
    store(c + r * ldc + L, load(c + r * ldc + L) + acc[r][1]);
  }
}

template <typename T>
inline void tile_edge(std::size_t mr, std::size_t nr, std::size_t k, const T* a, std::size_t lda,
                      const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t r = 0; r < mr; ++r) {
    for (std::size_t j = 0; j < nr; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[r * lda + p] * b[p * ldb + j];
      c[r * ldc + j] += acc;
    }
  }
}

// Columns of `col` are output pixels; rows are (channel, kh, kw) taps.
template <typename T>
void im2col(const T* in, const ConvGeometry& g, std::size_t h, std::size_t w, std::size_t oh,
            std::size_t ow, T* col) {
  const std::size_t kk = g.kernel * g.kernel;
  const std::size_t rows = g.patch_len();
#pragma omp parallel for schedule(static)
  for (std::size_t row = 0; row < rows; ++row) {
    const std::size_t c = row / kk;
    const std::size_t kh = (row % kk) / g.kernel;
    const std::size_t kw = row % g.kernel;
    const T* src = in + c * h * w;
    T* dst = col + row * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                static_cast<std::ptrdiff_t>(g.pad);
      T* drow = dst + y * ow;
      if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
        std::fill(drow, drow + ow, T(0));
        continue;
      }
      const T* srow = src + static_cast<std::size_t>(iy) * w;
      for (std::size_t x = 0; x < ow; ++x) {
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        drow[x] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) ? T(0)
                                                                    : srow[static_cast<std::size_t>(ix)];
      }
    }
  }
}

// Transposed layout: rows are output pixels, columns are taps.
template <typename T>
void im2col_t(const T* in, const ConvGeometry& g, std::size_t h, std::size_t w, std::size_t oh,
              std::size_t ow, T* colt) {
  const std::size_t kk = g.kernel * g.kernel;
  const std::size_t taps = g.patch_len();
#pragma omp parallel for schedule(static)
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      T* dst = colt + (y * ow + x) * taps;
      for (std::size_t t = 0; t < taps; ++t) {
        const std::size_t c = t / kk;
        const std::size_t kh = (t % kk) / g.kernel;
        const std::size_t kw = t % g.kernel;
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        dst[t] = (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                  ix >= static_cast<std::ptrdiff_t>(w))
                     ? T(0)
                     : in[(c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
      }
    }
  }
}

// Scatter-add of column gradients back into the image. Parallel over input
// channels: a channel's taps only ever touch that channel's plane.
template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, std::size_t h, std::size_t w,
                std::size_t oh, std::size_t ow, T* out) {
  const std::size_t kk = g.kernel * g.kernel;
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* dst = out + c * h * w;
    for (std::size_t t = 0; t < kk; ++t) {
      const std::size_t kh = t / g.kernel;
      const std::size_t kw = t % g.kernel;
      const T* src = col + (c * kk + t) * oh * ow;
      for (std::size_t y = 0; y < oh; ++y) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                  static_cast<std::ptrdiff_t>(g.pad);
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
        T* drow = dst + static_cast<std::size_t>(iy) * w;
        const T* srow = src + y * ow;
        for (std::size_t x = 0; x < ow; ++x) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                    static_cast<std::ptrdiff_t>(g.pad);
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
          drow[static_cast<std::size_t>(ix)] += srow[x];
        }
      }
    }
  }
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1 && g.pad == 0; }

void check_conv_shapes(std::size_t in_c, std::size_t w_oc, std::size_t w_ic, std::size_t kh,
                       std::size_t kw, const ConvGeometry& g) {
  if (in_c != g.in_channels || w_oc != g.out_channels || w_ic != g.in_channels ||
      kh != g.kernel || kw != g.kernel) {
    throw ShapeError("conv2d: tensor shapes do not match geometry");
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
          std::size_t ldb, T* c, std::size_t ldc) {
  constexpr std::size_t nr = kNr<T>;
  const std::size_t n_tiles = (n + nr - 1) / nr;
  const std::size_t m_tiles = (m + kMr - 1) / kMr;
  // Column-panel outer loop keeps a K x NR panel of B hot across row tiles.
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t jt = 0; jt < n_tiles; ++jt) {
    for (std::size_t it = 0; it < m_tiles; ++it) {
      const std::size_t j0 = jt * nr;
      const std::size_t i0 = it * kMr;
      const std::size_t cols = std::min(nr, n - j0);
      const std::size_t rows = std::min(kMr, m - i0);
      const T* ap = a + i0 * lda;
      const T* bp = b + j0;
      T* cp = c + i0 * ldc + j0;
      if (cols == nr) {
        switch (rows) {
          case 6: tile_full<T, 6>(k, ap, lda, bp, ldb, cp, ldc); break;
          case 5: tile_full<T, 5>(k, ap, lda, bp, ldb, cp, ldc); break;
          case 4: tile_full<T, 4>(k, ap, lda, bp, ldb, cp, ldc); break;
          case 3: tile_full<T, 3>(k, ap, lda, bp, ldb, cp, ldc); break;
          case 2: tile_full<T, 2>(k, ap, lda, bp, ldb, cp, ldc); break;
          default: tile_full<T, 1>(k, ap, lda, bp, ldb, cp, ldc); break;
        }
      } else {
        tile_edge<T>(rows, cols, k, a + i0 * lda, lda, b + j0, ldb, c + i0 * ldc + j0, ldc);
      }
    }
  }
}

template <typename T>
void gemm_ref(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
              const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * lda + p] * b[p * ldb + j];
      c[i * ldc + j] += acc;
    }
  }
}

template <typename T>
void conv2d_forward(const Tensor<T>& in, const Tensor<T>& weight, const T* bias,
                    const ConvGeometry& g, Tensor<T>& out) {
  check_conv_shapes(in.c(), weight.n(), weight.c(), weight.h(), weight.w(), g);
  const std::size_t oh = g.out_size(in.h());
  const std::size_t ow = g.out_size(in.w());
  out = Tensor<T>(in.n(), g.out_channels, oh, ow);
  const std::size_t pixels = oh * ow;
  const std::size_t taps = g.patch_len();
  std::vector<T> col(is_pointwise(g) ? 0 : taps * pixels);
  for (std::size_t s = 0; s < in.n(); ++s) {
    T* dst = out.plane(s, 0);
    if (bias != nullptr) {
#pragma omp parallel for schedule(static)
      for (std::size_t oc = 0; oc < g.out_channels; ++oc)
        std::fill(dst + oc * pixels, dst + (oc + 1) * pixels, bias[oc]);
    }
    const T* src = in.plane(s, 0);
    if (!is_pointwise(g)) {
      im2col(src, g, in.h(), in.w(), oh, ow, col.data());
      src = col.data();
    }
    gemm(g.out_channels, pixels, taps, weight.data(), taps, src, pixels, dst, pixels);
  }
}

template <typename T>
void conv2d_forward_ref(const Tensor<T>& in, const Tensor<T>& weight, const T* bias,
                        const ConvGeometry& g, Tensor<T>& out) {
  check_conv_shapes(in.c(), weight.n(), weight.c(), weight.h(), weight.w(), g);
  const std::size_t oh = g.out_size(in.h());
  const std::size_t ow = g.out_size(in.w());
  out = Tensor<T>(in.n(), g.out_channels, oh, ow);
  for (std::size_t s = 0; s < in.n(); ++s)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          T acc = 0;
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t kh = 0; kh < g.kernel; ++kh)
              for (std::size_t kw = 0; kw < g.kernel; ++kw) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in.h()) ||
                    ix >= static_cast<std::ptrdiff_t>(in.w()))
                  continue;
                acc += weight(oc, ic, kh, kw) *
                       in(s, ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
          out(s, oc, y, x) = acc + (bias ? bias[oc] : T(0));
        }
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& grad_out, const Tensor<T>& weight,
                           const ConvGeometry& g, Tensor<T>& grad_in) {
  const std::size_t oh = grad_out.h();
  const std::size_t ow = grad_out.w();
  const std::size_t pixels = oh * ow;
  const std::size_t taps = g.patch_len();
  // W^T: (taps x out_channels)
  std::vector<T> wt(taps * g.out_channels);
  for (std::size_t oc = 0; oc < g.out_channels; ++oc)
    for (std::size_t t = 0; t < taps; ++t) wt[t * g.out_channels + oc] = weight[oc * taps + t];
  std::vector<T> col(taps * pixels);
  for (std::size_t s = 0; s < grad_out.n(); ++s) {
    if (is_pointwise(g)) {
      gemm(taps, pixels, g.out_channels, wt.data(), g.out_channels, grad_out.plane(s, 0), pixels,
           grad_in.plane(s, 0), pixels);
      continue;
    }
    std::fill(col.begin(), col.end(), T(0));
    gemm(taps, pixels, g.out_channels, wt.data(), g.out_channels, grad_out.plane(s, 0), pixels,
         col.data(), pixels);
    col2im_add(col.data(), g, grad_in.h(), grad_in.w(), oh, ow, grad_in.plane(s, 0));
  }
}

template <typename T>
void conv2d_backward_input_ref(const Tensor<T>& grad_out, const Tensor<T>& weight,
                               const ConvGeometry& g, Tensor<T>& grad_in) {
  for (std::size_t s = 0; s < grad_out.n(); ++s)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t y = 0; y < grad_out.h(); ++y)
        for (std::size_t x = 0; x < grad_out.w(); ++x) {
          const T go = grad_out(s, oc, y, x);
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t kh = 0; kh < g.kernel; ++kh)
              for (std::size_t kw = 0; kw < g.kernel; ++kw) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(grad_in.h()) ||
                    ix >= static_cast<std::ptrdiff_t>(grad_in.w()))
                  continue;
                grad_in(s, ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) +=
                    weight(oc, ic, kh, kw) * go;
              }
        }
}

template <typename T>
void conv2d_backward_params(const Tensor<T>& in, const Tensor<T>& grad_out,
                            const ConvGeometry& g, Tensor<T>& grad_w, T* grad_b) {
  const std::size_t oh = grad_out.h();
  const std::size_t ow = grad_out.w();
  const std::size_t pixels = oh * ow;
  const std::size_t taps = g.patch_len();
  std::vector<T> colt(taps * pixels);
  for (std::size_t s = 0; s < in.n(); ++s) {
    if (is_pointwise(g)) {
      // colt is the transposed input plane stack.
      const T* src = in.plane(s, 0);
      for (std::size_t t = 0; t < taps; ++t)
        for (std::size_t p = 0; p < pixels; ++p) colt[p * taps + t] = src[t * pixels + p];
    } else {
      im2col_t(in.plane(s, 0), g, in.h(), in.w(), oh, ow, colt.data());
    }
    gemm(g.out_channels, taps, pixels, grad_out.plane(s, 0), pixels, colt.data(), taps,
         grad_w.data(), taps);
    if (grad_b != nullptr) {
#pragma omp parallel for schedule(static)
      for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
        const T* go = grad_out.plane(s, oc);
        T acc = 0;
        for (std::size_t p = 0; p < pixels; ++p) acc += go[p];
        grad_b[oc] += acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_params_ref(const Tensor<T>& in, const Tensor<T>& grad_out,
                                const ConvGeometry& g, Tensor<T>& grad_w, T* grad_b) {
  for (std::size_t s = 0; s < in.n(); ++s)
    for (std::size_t oc = 0; oc < g.out_channels; ++oc)
      for (std::size_t y = 0; y < grad_out.h(); ++y)
        for (std::size_t x = 0; x < grad_out.w(); ++x) {
          const T go = grad_out(s, oc, y, x);
          if (grad_b) grad_b[oc] += go;
          for (std::size_t ic = 0; ic < g.in_channels; ++ic)
            for (std::size_t kh = 0; kh < g.kernel; ++kh)
              for (std::size_t kw = 0; kw < g.kernel; ++kw) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y * g.stride + kh) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x * g.stride + kw) -
                                          static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(in.h()) ||
                    ix >= static_cast<std::ptrdiff_t>(in.w()))
                  continue;
                grad_w(oc, ic, kh, kw) +=
                    go * in(s, ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
              }
        }
}

namespace {

struct Lerp {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Lerp> upsample_taps(std::size_t in, std::size_t out) {
  std::vector<Lerp> taps(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    if (src < 0) src = 0;
    auto i0 = static_cast<std::size_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
void upsample2x_forward(const Tensor<T>& in, Tensor<T>& out) {
  const std::size_t oh = in.h() * 2;
  const std::size_t ow = in.w() * 2;
  out = Tensor<T>(in.n(), in.c(), oh, ow);
  const auto ty = upsample_taps(in.h(), oh);
  const auto tx = upsample_taps(in.w(), ow);
  const std::size_t planes = in.n() * in.c();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = in.data() + p * in.h() * in.w();
    T* dst = out.data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y) {
      const T wy = static_cast<T>(ty[y].w1);
      const T* r0 = src + ty[y].i0 * in.w();
      const T* r1 = src + ty[y].i1 * in.w();
      for (std::size_t x = 0; x < ow; ++x) {
        const T wx = static_cast<T>(tx[x].w1);
        const T top = r0[tx[x].i0] * (T(1) - wx) + r0[tx[x].i1] * wx;
        const T bot = r1[tx[x].i0] * (T(1) - wx) + r1[tx[x].i1] * wx;
        dst[y * ow + x] = top * (T(1) - wy) + bot * wy;
      }
    }
  }
}

template <typename T>
void upsample2x_backward(const Tensor<T>& grad_out, Tensor<T>& grad_in) {
  const std::size_t oh = grad_out.h();
  const std::size_t ow = grad_out.w();
  const auto ty = upsample_taps(grad_in.h(), oh);
  const auto tx = upsample_taps(grad_in.w(), ow);
  const std::size_t planes = grad_in.n() * grad_in.c();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = grad_out.data() + p * oh * ow;
    T* dst = grad_in.data() + p * grad_in.h() * grad_in.w();
    for (std::size_t y = 0; y < oh; ++y) {
      const T wy = static_cast<T>(ty[y].w1);
      T* r0 = dst + ty[y].i0 * grad_in.w();
      T* r1 = dst + ty[y].i1 * grad_in.w();
      for (std::size_t x = 0; x < ow; ++x) {
        const T wx = static_cast<T>(tx[x].w1);
        const T go = src[y * ow + x];
        r0[tx[x].i0] += go * (T(1) - wy) * (T(1) - wx);
        r0[tx[x].i1] += go * (T(1) - wy) * wx;
        r1[tx[x].i0] += go * wy * (T(1) - wx);
        r1[tx[x].i1] += go * wy * wx;
      }
    }
  }
}

template <typename T>
void maxpool2_forward(const Tensor<T>& in, Tensor<T>& out, std::vector<std::size_t>& argmax) {
  const std::size_t oh = in.h() / 2;
  const std::size_t ow = in.w() / 2;
  if (oh == 0 || ow == 0) throw ShapeError("maxpool2: input smaller than 2x2");
  out = Tensor<T>(in.n(), in.c(), oh, ow);
  argmax.assign(out.size(), 0);
  const std::size_t planes = in.n() * in.c();
#pragma omp parallel for schedule(static)
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * in.h() * in.w();
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t best = base + (2 * y) * in.w() + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * y + dy) * in.w() + 2 * x + dx;
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = p * oh * ow + y * ow + x;
        out[o] = in[best];
        argmax[o] = best;
      }
  }
}

#define TRGAN_INSTANTIATE_KERNELS(T)                                                          \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t,        \
                        const T*, std::size_t, T*, std::size_t);                             \
  template void gemm_ref<T>(std::size_t, std::size_t, std::size_t, const T*, std::size_t,    \
                            const T*, std::size_t, T*, std::size_t);                         \
  template void conv2d_forward<T>(const Tensor<T>&, const Tensor<T>&, const T*,               \
                                  const ConvGeometry&, Tensor<T>&);                           \
  template void conv2d_forward_ref<T>(const Tensor<T>&, const Tensor<T>&, const T*,           \
                                      const ConvGeometry&, Tensor<T>&);                       \
  template void conv2d_backward_input<T>(const Tensor<T>&, const Tensor<T>&,                  \
                                         const ConvGeometry&, Tensor<T>&);                    \
  template void conv2d_backward_input_ref<T>(const Tensor<T>&, const Tensor<T>&,              \
                                             const ConvGeometry&, Tensor<T>&);                \
  template void conv2d_backward_params<T>(const Tensor<T>&, const Tensor<T>&,                 \
                                          const ConvGeometry&, Tensor<T>&, T*);               \
  template void conv2d_backward_params_ref<T>(const Tensor<T>&, const Tensor<T>&,             \
                                              const ConvGeometry&, Tensor<T>&, T*);           \
  template void upsample2x_forward<T>(const Tensor<T>&, Tensor<T>&);                          \
  template void upsample2x_backward<T>(const Tensor<T>&, Tensor<T>&);                         \
  template void maxpool2_forward<T>(const Tensor<T>&, Tensor<T>&, std::vector<std::size_t>&);

TRGAN_INSTANTIATE_KERNELS(float)
TRGAN_INSTANTIATE_KERNELS(double)

}  // namespace trgan::kernels
