#pragma once

#include "camkit/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace camkit {

/// H x W boolean mask, row-major.
class BinaryMask {
public:
  BinaryMask() = default;
  BinaryMask(std::size_t height, std::size_t width, bool fill = false)
      : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool at(std::size_t y, std::size_t x) const { return bits_[y * width_ + x] != 0; }
  void set(std::size_t y, std::size_t x, bool v = true) { bits_[y * width_ + x] = v; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool same_dims(const BinaryMask &o) const {
    return height_ == o.height_ && width_ == o.width_;
  }

  friend bool operator==(const BinaryMask &, const BinaryMask &) = default;

private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::uint8_t> bits_;
};

} // namespace camkit
