#pragma once

#include "camkit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace camkit {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape &shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/// Dense row-major array (last axis fastest). The shape/data size
/// relation is checked at construction; finiteness is checked by the
/// loaders, not here.
template <std::floating_point T> class BasicTensor {
public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_volume(shape_) != data_.size())
      throw ShapeError("tensor shape " + shape_string(shape_) + " holds " +
                       std::to_string(shape_volume(shape_)) +
                       " values but data has " + std::to_string(data_.size()));
  }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T> &values() const noexcept { return data_; }

  T &operator[](std::size_t i) { return data_[i]; }
  const T &operator[](std::size_t i) const { return data_[i]; }

  T &at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T &at(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  T &at(std::size_t k, std::size_t i, std::size_t j) {
    return data_[(k * shape_[1] + i) * shape_[2] + j];
  }
  const T &at(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[(k * shape_[1] + i) * shape_[2] + j];
  }

  /// Contiguous view of one leading-axis slice (e.g. channel k of a stack).
  std::span<const T> slice(std::size_t index) const {
    const std::size_t stride = data_.size() / shape_.at(0);
    return std::span<const T>(data_).subspan(index * stride, stride);
  }
  std::span<T> slice(std::size_t index) {
    const std::size_t stride = data_.size() / shape_.at(0);
    return std::span<T>(data_).subspan(index * stride, stride);
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const BasicTensor &, const BasicTensor &) = default;

private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

} // namespace camkit
