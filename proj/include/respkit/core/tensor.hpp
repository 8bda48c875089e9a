#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "respkit/core/error.hpp"

namespace respkit {

/// Dense row-major N-dimensional array. The scalar type is a template
/// parameter so the same kernels run in 32-bit for training and 64-bit for
/// gradient checking.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<size_t> shape, T fill = T{}) : shape_(std::move(shape)) {
    size_t n = 1;
    for (size_t e : shape_) {
      require(e > 0, errc::shape_violation, "tensor extents must be positive");
      n *= e;
    }
    data_.assign(n, fill);
  }

  Tensor(std::initializer_list<size_t> shape, T fill = T{})
      : Tensor(std::vector<size_t>(shape), fill) {}

  static Tensor from_data(std::vector<size_t> shape, std::vector<T> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    size_t n = 1;
    for (size_t e : t.shape_) n *= e;
    require(n == data.size(), errc::shape_violation, "data size does not match shape");
    t.data_ = std::move(data);
    return t;
  }

  size_t rank() const { return shape_.size(); }
  size_t extent(size_t i) const { return shape_[i]; }
  const std::vector<size_t>& shape() const { return shape_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  T& at(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }

  T& at(size_t i, size_t j, size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(size_t i, size_t j, size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  T& at(size_t i, size_t j, size_t k, size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const T& at(size_t i, size_t j, size_t k, size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::string shape_string() const {
    std::string s = "(";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + ")";
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    std::vector<U> d(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) d[i] = static_cast<U>(data_[i]);
    return Tensor<U>::from_data(shape_, std::move(d));
  }

 private:
  std::vector<size_t> shape_;
  std::vector<T> data_;
};

}  // namespace respkit
