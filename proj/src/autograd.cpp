#include "trgan/autograd.hpp"

#include <cmath>

namespace trgan::ag {

template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::size_t stride, std::size_t pad) {
  const auto& w = weight->value;
  kernels::ConvGeometry g{w.c(), w.n(), w.h(), stride, pad};
  Tensor<T> out;
  kernels::conv2d_forward(x->value, w, bias ? bias->value.data() : nullptr, g, out);
  return Tape<T>::record(tape, std::move(out), {x, weight, bias}, [x, weight, bias, g](Node<T>& n) {
    if (x->requires_grad) kernels::conv2d_backward_input(n.grad, weight->value, g, x->grad_buffer());
    if (weight->requires_grad) {
      T* gb = (bias && bias->requires_grad) ? bias->grad_buffer().data() : nullptr;
      kernels::conv2d_backward_params(x->value, n.grad, g, weight->grad_buffer(), gb);
    } else if (bias && bias->requires_grad) {
      auto& gb = bias->grad_buffer();
      for (std::size_t s = 0; s < n.grad.n(); ++s)
        for (std::size_t c = 0; c < n.grad.c(); ++c) {
          const T* p = n.grad.plane(s, c);
          T acc = 0;
          for (std::size_t i = 0; i < n.grad.h() * n.grad.w(); ++i) acc += p[i];
          gb[c] += acc;
        }
    }
  });
}

template <typename T>
Var<T> batch_norm(Tape<T>* tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormStats<T>& stats, bool training) {
  const auto& in = x->value;
  const std::size_t channels = in.c();
  const std::size_t hw = in.h() * in.w();
  const std::size_t count = in.n() * hw;
  std::vector<T> mean(channels), inv_std(channels);
  if (training) {
    if (count < 2) throw ShapeError("batch_norm: need more than one value per channel");
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < channels; ++c) {
      double sum = 0;
      for (std::size_t s = 0; s < in.n(); ++s) {
        const T* p = in.plane(s, c);
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      const double mu = sum / static_cast<double>(count);
      double sq = 0;
      for (std::size_t s = 0; s < in.n(); ++s) {
        const T* p = in.plane(s, c);
        for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - mu) * (p[i] - mu);
      }
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(stats.eps)));
      const double unbiased = sq / static_cast<double>(count - 1);
      stats.running_mean[c] = static_cast<T>((1.0 - stats.momentum) * stats.running_mean[c] + stats.momentum * mu);
      stats.running_var[c] = static_cast<T>((1.0 - stats.momentum) * stats.running_var[c] + stats.momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = stats.running_mean[c];
      inv_std[c] = T(1) / std::sqrt(stats.running_var[c] + stats.eps);
    }
  }
  Tensor<T> xhat(in.shape());
  Tensor<T> out(in.shape());
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t s = 0; s < in.n(); ++s)
    for (std::size_t c = 0; c < channels; ++c) {
      const T* p = in.plane(s, c);
      T* xh = xhat.plane(s, c);
      T* o = out.plane(s, c);
      const T gm = gamma->value[c];
      const T bt = beta->value[c];
      for (std::size_t i = 0; i < hw; ++i) {
        xh[i] = (p[i] - mean[c]) * inv_std[c];
        o[i] = gm * xh[i] + bt;
      }
    }
  return Tape<T>::record(
      tape, std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), training, hw, count](Node<T>& n) {
        const std::size_t channels = x->value.c();
        const std::size_t batch = x->value.n();
        Tensor<T>* gx = x->requires_grad ? &x->grad_buffer() : nullptr;
        Tensor<T>* gg = gamma->requires_grad ? &gamma->grad_buffer() : nullptr;
        Tensor<T>* gbt = beta->requires_grad ? &beta->grad_buffer() : nullptr;
#pragma omp parallel for schedule(static)
        for (std::size_t c = 0; c < channels; ++c) {
          double sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t s = 0; s < batch; ++s) {
            const T* dy = n.grad.plane(s, c);
            const T* xh = xhat.plane(s, c);
            for (std::size_t i = 0; i < hw; ++i) {
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * xh[i];
            }
          }
          if (gg) (*gg)[c] += static_cast<T>(sum_dy_xhat);
          if (gbt) (*gbt)[c] += static_cast<T>(sum_dy);
          if (!gx) continue;
          const T scale = gamma->value[c] * inv_std[c];
          const T m = static_cast<T>(count);
          for (std::size_t s = 0; s < batch; ++s) {
            const T* dy = n.grad.plane(s, c);
            const T* xh = xhat.plane(s, c);
            T* dx = gx->plane(s, c);
            if (training) {
              const T a = static_cast<T>(sum_dy) / m;
              const T b = static_cast<T>(sum_dy_xhat) / m;
              for (std::size_t i = 0; i < hw; ++i) dx[i] += scale * (dy[i] - a - xh[i] * b);
            } else {
              for (std::size_t i = 0; i < hw; ++i) dx[i] += scale * dy[i];
            }
          }
        }
      });
}

namespace {

template <typename T, typename Fwd, typename Deriv>
Var<T> pointwise(Tape<T>* tape, const Var<T>& x, Fwd fwd, Deriv deriv_from_out_and_in) {
  Tensor<T> out(x->value.shape());
  const T* in = x->value.data();
  T* o = out.data();
  const std::size_t n = out.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) o[i] = fwd(in[i]);
  return Tape<T>::record(tape, std::move(out), {x}, [x, deriv_from_out_and_in](Node<T>& node) {
    auto& gx = x->grad_buffer();
    const std::size_t n = node.value.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i)
      gx[i] += node.grad[i] * deriv_from_out_and_in(node.value[i], x->value[i]);
  });
}

}  // namespace

template <typename T>
Var<T> relu(Tape<T>* tape, const Var<T>& x) {
  return pointwise(
      tape, x, [](T v) { return v < T(0) ? T(0) : v; },
      [](T, T in) { return in > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(Tape<T>* tape, const Var<T>& x, T slope) {
  return pointwise(
      tape, x, [slope](T v) { return v > T(0) ? v : slope * v; },
      [slope](T, T in) { return in > T(0) ? T(1) : slope; });
}

template <typename T>
Var<T> sigmoid(Tape<T>* tape, const Var<T>& x) {
  return pointwise(
      tape, x,
      [](T v) {
        // Split by sign so exp never overflows.
        if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](T out, T) { return out * (T(1) - out); });
}

template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor<T> out(a->value);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
  return Tape<T>::record(tape, std::move(out), {a, b}, [a, b](Node<T>& n) {
    for (const Var<T>* p : {&a, &b}) {
      if (!(*p)->requires_grad) continue;
      auto& g = (*p)->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>* tape, const Var<T>& a, const Var<T>& b) {
  const auto& av = a->value;
  const auto& bv = b->value;
  if (av.n() != bv.n() || av.h() != bv.h() || av.w() != bv.w())
    throw ShapeError("concat_channels: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
  Tensor<T> out(av.n(), av.c() + bv.c(), av.h(), av.w());
  const std::size_t hw = av.h() * av.w();
  for (std::size_t s = 0; s < av.n(); ++s) {
    std::copy(av.plane(s, 0), av.plane(s, 0) + av.c() * hw, out.plane(s, 0));
    std::copy(bv.plane(s, 0), bv.plane(s, 0) + bv.c() * hw, out.plane(s, av.c()));
  }
  return Tape<T>::record(tape, std::move(out), {a, b}, [a, b, hw](Node<T>& n) {
    const std::size_t ca = a->value.c();
    const std::size_t cb = b->value.c();
    for (std::size_t s = 0; s < n.grad.n(); ++s) {
      if (a->requires_grad) {
        T* g = a->grad_buffer().plane(s, 0);
        const T* src = n.grad.plane(s, 0);
        for (std::size_t i = 0; i < ca * hw; ++i) g[i] += src[i];
      }
      if (b->requires_grad) {
        T* g = b->grad_buffer().plane(s, 0);
        const T* src = n.grad.plane(s, ca);
        for (std::size_t i = 0; i < cb * hw; ++i) g[i] += src[i];
      }
    }
  });
}

template <typename T>
Var<T> upsample2x(Tape<T>* tape, const Var<T>& x) {
  Tensor<T> out;
  kernels::upsample2x_forward(x->value, out);
  return Tape<T>::record(tape, std::move(out), {x}, [x](Node<T>& n) {
    kernels::upsample2x_backward(n.grad, x->grad_buffer());
  });
}

template <typename T>
Var<T> max_pool2(Tape<T>* tape, const Var<T>& x) {
  Tensor<T> out;
  std::vector<std::size_t> argmax;
  kernels::maxpool2_forward(x->value, out, argmax);
  return Tape<T>::record(tape, std::move(out), {x}, [x, argmax = std::move(argmax)](Node<T>& n) {
    auto& g = x->grad_buffer();
    for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += n.grad[i];
  });
}

template <typename T>
Var<T> weighted_sum(Tape<T>* tape, const std::vector<std::pair<Var<T>, T>>& terms) {
  T total = 0;
  std::vector<Var<T>> parents;
  for (const auto& [v, w] : terms) {
    if (!v) continue;
    if (v->value.size() != 1) throw ShapeError("weighted_sum: terms must be scalars");
    total += w * v->value[0];
    parents.push_back(v);
  }
  return Tape<T>::record(tape, Tensor<T>::scalar(total), parents, [terms](Node<T>& n) {
    for (const auto& [v, w] : terms) {
      if (v && v->requires_grad) v->grad_buffer()[0] += w * n.grad[0];
    }
  });
}

#define TRGAN_INSTANTIATE_AG(T)                                                                      \
  template Var<T> conv2d<T>(Tape<T>*, const Var<T>&, const Var<T>&, const Var<T>&, std::size_t,     \
                            std::size_t);                                                            \
  template Var<T> batch_norm<T>(Tape<T>*, const Var<T>&, const Var<T>&, const Var<T>&,              \
                                BatchNormStats<T>&, bool);                                           \
  template Var<T> relu<T>(Tape<T>*, const Var<T>&);                                                  \
  template Var<T> leaky_relu<T>(Tape<T>*, const Var<T>&, T);                                         \
  template Var<T> sigmoid<T>(Tape<T>*, const Var<T>&);                                               \
  template Var<T> add<T>(Tape<T>*, const Var<T>&, const Var<T>&);                                    \
  template Var<T> concat_channels<T>(Tape<T>*, const Var<T>&, const Var<T>&);                        \
  template Var<T> upsample2x<T>(Tape<T>*, const Var<T>&);                                            \
  template Var<T> max_pool2<T>(Tape<T>*, const Var<T>&);                                             \
  template Var<T> weighted_sum<T>(Tape<T>*, const std::vector<std::pair<Var<T>, T>>&);

TRGAN_INSTANTIATE_AG(float)
TRGAN_INSTANTIATE_AG(double)

}  // namespace trgan::ag
