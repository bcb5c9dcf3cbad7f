#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "trgan/autograd.hpp"

namespace trgan::nn {

/// Named trainable tensors plus named non-trainable buffers of one network.
template <typename T>
struct ParamSet {
  std::vector<std::pair<std::string, ag::Var<T>>> params;
  std::vector<std::pair<std::string, Tensor<T>*>> buffers;

  std::size_t count() const {
    std::size_t total = 0;
    for (const auto& [name, v] : params) total += v->value.size();
    return total;
  }
  void zero_grad() {
    for (auto& [name, v] : params) v->grad = Tensor<T>();
  }
  void set_requires_grad(bool on) {
    for (auto& [name, v] : params) v->requires_grad = on;
  }
};

/// He-normal initialisation for a conv weight of the given fan-in.
template <typename T>
Tensor<T> he_normal(std::mt19937_64& rng, std::size_t out_c, std::size_t in_c, std::size_t k,
                    T gain = T(2)) {
  Tensor<T> w(out_c, in_c, k, k);
  const double fan_in = static_cast<double>(in_c * k * k);
  std::normal_distribution<double> dist(0.0, std::sqrt(static_cast<double>(gain) / fan_in));
  for (auto& v : w.vec()) v = static_cast<T>(dist(rng));
  return w;
}

template <typename T>
struct Conv2d {
  ag::Var<T> weight;
  ag::Var<T> bias;  // null when the conv is followed by batch norm
  std::size_t stride = 1;
  std::size_t pad = 0;

  Conv2d() = default;
  Conv2d(std::mt19937_64& rng, std::size_t in_c, std::size_t out_c, std::size_t k, std::size_t stride_,
         std::size_t pad_, bool with_bias, T gain = T(2))
      : weight(ag::parameter(he_normal<T>(rng, out_c, in_c, k, gain))),
        bias(with_bias ? ag::parameter(Tensor<T>(out_c, 1, 1, 1)) : nullptr),
        stride(stride_),
        pad(pad_) {}

  ag::Var<T> operator()(ag::Tape<T>* tape, const ag::Var<T>& x) const {
    return ag::conv2d(tape, x, weight, bias, stride, pad);
  }

  void collect(ParamSet<T>& ps, const std::string& prefix) const {
    ps.params.emplace_back(prefix + ".weight", weight);
    if (bias) ps.params.emplace_back(prefix + ".bias", bias);
  }
};

template <typename T>
struct BatchNorm2d {
  ag::Var<T> gamma;
  ag::Var<T> beta;
  ag::BatchNormStats<T> stats;

  BatchNorm2d() = default;
  explicit BatchNorm2d(std::size_t channels)
      : gamma(ag::parameter(Tensor<T>(channels, 1, 1, 1, T(1)))),
        beta(ag::parameter(Tensor<T>(channels, 1, 1, 1))) {
    stats.running_mean = Tensor<T>(channels, 1, 1, 1);
    stats.running_var = Tensor<T>(channels, 1, 1, 1, T(1));
  }

  ag::Var<T> operator()(ag::Tape<T>* tape, const ag::Var<T>& x, bool training) {
    return ag::batch_norm(tape, x, gamma, beta, stats, training);
  }

  void collect(ParamSet<T>& ps, const std::string& prefix) {
    ps.params.emplace_back(prefix + ".gamma", gamma);
    ps.params.emplace_back(prefix + ".beta", beta);
    ps.buffers.emplace_back(prefix + ".running_mean", &stats.running_mean);
    ps.buffers.emplace_back(prefix + ".running_var", &stats.running_var);
  }
};

/// Adam with bias correction and no weight decay.
template <typename T>
class Adam {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  Adam(const ParamSet<T>& ps, Options opt) : opt_(opt) {
    for (const auto& [name, v] : ps.params) {
      m_.emplace_back(v->value.shape());
      v_.emplace_back(v->value.shape());
    }
  }

  /// Applies one update to every parameter that received a gradient.
  void step(ParamSet<T>& ps, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < ps.params.size(); ++i) {
      auto& p = *ps.params[i].second;
      if (p.grad.empty()) continue;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        const double g = p.grad[j];
        m[j] = static_cast<T>(opt_.beta1 * m[j] + (1.0 - opt_.beta1) * g);
        v[j] = static_cast<T>(opt_.beta2 * v[j] + (1.0 - opt_.beta2) * g * g);
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        p.value[j] = static_cast<T>(p.value[j] - lr * mhat / (std::sqrt(vhat) + opt_.eps));
      }
    }
  }

  std::uint64_t steps() const { return t_; }
  void set_steps(std::uint64_t t) { t_ = t; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const Options& options() const { return opt_; }

 private:
  Options opt_{};
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

}  // namespace trgan::nn
