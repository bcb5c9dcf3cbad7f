#pragma once
// Central finite-difference check for scalar-valued tape functions in double.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "trgan/autograd.hpp"

namespace trgan::testing {

using LossFn = std::function<ag::Var<double>(ag::Tape<double>*)>;

/// Largest relative error between the analytic gradient of `loss` with respect
/// to every entry of `inputs` and a central difference with step `h`.
inline double max_grad_error(const LossFn& loss, const std::vector<ag::Var<double>>& inputs, double h = 1e-6,
                             double floor = 1e-6) {
  for (const auto& v : inputs) v->grad = Tensor<double>();
  ag::Tape<double> tape;
  auto root = loss(&tape);
  tape.backward(root);
  double worst = 0.0;
  for (const auto& v : inputs) {
    const Tensor<double> analytic = v->grad.empty() ? Tensor<double>(v->value.shape()) : v->grad;
    for (std::size_t i = 0; i < v->value.size(); ++i) {
      const double keep = v->value[i];
      v->value[i] = keep + h;
      const double up = loss(nullptr)->value[0];
      v->value[i] = keep - h;
      const double down = loss(nullptr)->value[0];
      v->value[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), floor});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
  }
  return worst;
}

/// Scalar <x, w> for a fixed weight tensor, recorded on the tape.
inline ag::Var<double> dot(ag::Tape<double>* tape, const ag::Var<double>& x, const Tensor<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += x->value[i] * w[i];
  auto xp = x;
  return ag::Tape<double>::record(tape, Tensor<double>::scalar(s), {x}, [xp, w](ag::Node<double>& n) {
    auto& g = xp->grad_buffer();
    for (std::size_t i = 0; i < w.size(); ++i) g[i] += n.grad[0] * w[i];
  });
}

inline Tensor<double> random_tensor(std::mt19937_64& rng, Tensor<double>::Shape shape, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor<double> t(shape);
  for (auto& v : t.vec()) v = d(rng);
  return t;
}

}  // namespace trgan::testing
