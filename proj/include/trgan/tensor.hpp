#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace trgan {

/// Dense 4-D tensor in NCHW layout. Value type; copies are deep.
template <typename T>
class Tensor {
 public:
  using Shape = std::array<std::size_t, 4>;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(shape), data_(shape[0] * shape[1] * shape[2] * shape[3], fill) {}
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : Tensor(Shape{n, c, h, w}, fill) {}

  static Tensor scalar(T v) { return Tensor(1, 1, 1, 1, v); }

  const Shape& shape() const { return shape_; }
  std::size_t n() const { return shape_[0]; }
  std::size_t c() const { return shape_[1]; }
  std::size_t h() const { return shape_[2]; }
  std::size_t w() const { return shape_[3]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> span() { return data_; }
  std::span<const T> span() const { return data_; }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  std::size_t index(std::size_t in, std::size_t ic, std::size_t ih, std::size_t iw) const {
    return ((in * shape_[1] + ic) * shape_[2] + ih) * shape_[3] + iw;
  }
  T& operator()(std::size_t in, std::size_t ic, std::size_t ih, std::size_t iw) {
    return data_[index(in, ic, ih, iw)];
  }
  T operator()(std::size_t in, std::size_t ic, std::size_t ih, std::size_t iw) const {
    return data_[index(in, ic, ih, iw)];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  /// Pointer to the (n, c) plane.
  T* plane(std::size_t in, std::size_t ic) { return data_.data() + index(in, ic, 0, 0); }
  const T* plane(std::size_t in, std::size_t ic) const { return data_.data() + index(in, ic, 0, 0); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return out;
  }

  std::string shape_string() const {
    std::ostringstream os;
    os << '(' << shape_[0] << ',' << shape_[1] << ',' << shape_[2] << ',' << shape_[3] << ')';
    return os.str();
  }

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<T> data_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace trgan
