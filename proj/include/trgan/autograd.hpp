#pragma once

// Minimal reverse-mode differentiation over Tensor<T>.
//
// Operations append nodes to a Tape in creation order; Tape::backward walks
// the tape in reverse. Passing a null tape evaluates without recording, which
// is how inference runs. Parameters are leaf nodes owned by the modules and
// never live on a tape.

#include <functional>
#include <memory>
#include <vector>

#include "trgan/kernels.hpp"
#include "trgan/tensor.hpp"

namespace trgan::ag {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::function<void(Node&)> backward;

  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
  auto n = constant(std::move(value));
  n->requires_grad = true;
  return n;
}

/// Copy of the value with no connection to the graph.
template <typename T>
Var<T> detach(const Var<T>& v) {
  return constant(v->value);
}

template <typename T>
class Tape {
 public:
  /// Records a derived node when a tape is supplied and any parent requires grad.
  static Var<T> record(Tape* tape, Tensor<T> value, const std::vector<Var<T>>& parents,
                       std::function<void(Node<T>&)> backward) {
    auto n = constant(std::move(value));
    if (tape == nullptr) return n;
    bool any = false;
    for (const auto& p : parents) any = any || (p && p->requires_grad);
    if (!any) return n;
    n->requires_grad = true;
    n->backward = std::move(backward);
    tape->nodes_.push_back(n);
    return n;
  }

  /// Seeds d(root)/d(root) = 1 (root must be a scalar) and propagates.
  void backward(const Var<T>& root) {
    if (root->value.size() != 1) throw ShapeError("backward: root must be a scalar");
    root->grad_buffer()[0] += T(1);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node<T>& n = **it;
      if (n.backward && !n.grad.empty()) n.backward(n);
    }
  }

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Var<T>> nodes_;
};

// ---- layers --------------------------------------------------------------

template <typename T>
Var<T> conv2d(Tape<T>* tape, const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::size_t stride, std::size_t pad);

/// Batch-norm running statistics (not trained by gradient).
template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);
};

template <typename T>
Var<T> batch_norm(Tape<T>* tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormStats<T>& stats, bool training);

template <typename T>
Var<T> relu(Tape<T>* tape, const Var<T>& x);
template <typename T>
Var<T> leaky_relu(Tape<T>* tape, const Var<T>& x, T slope);
template <typename T>
Var<T> sigmoid(Tape<T>* tape, const Var<T>& x);
template <typename T>
Var<T> add(Tape<T>* tape, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> concat_channels(Tape<T>* tape, const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> upsample2x(Tape<T>* tape, const Var<T>& x);
template <typename T>
Var<T> max_pool2(Tape<T>* tape, const Var<T>& x);

/// Sum of weight_i * term_i over scalar terms. Null terms are skipped.
template <typename T>
Var<T> weighted_sum(Tape<T>* tape, const std::vector<std::pair<Var<T>, T>>& terms);

}  // namespace trgan::ag
