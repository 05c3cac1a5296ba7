#pragma once

// Protocol-buffer wire-format decoding, just enough to walk ONNX messages.

#include "camkit/errors.hpp"

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace camkit::onnx::pb {

enum class WireType : std::uint8_t {
  Varint = 0,
  Fixed64 = 1,
  LengthDelimited = 2,
  Fixed32 = 5,
};

struct Field {
  std::uint32_t number = 0;
  WireType type = WireType::Varint;
  std::uint64_t varint = 0;
  std::uint64_t fixed = 0;
  std::span<const std::uint8_t> bytes;

  std::int64_t as_int64() const { return static_cast<std::int64_t>(varint); }
  float as_float() const {
    return std::bit_cast<float>(static_cast<std::uint32_t>(fixed));
  }
  double as_double() const { return std::bit_cast<double>(fixed); }
  std::string as_string() const {
    return std::string(reinterpret_cast<const char *>(bytes.data()),
                       bytes.size());
  }
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  bool at_end() const { return pos_ >= data_.size(); }

  /// Decodes the next field; returns false at end of message.
  bool next(Field &f) {
    if (at_end())
      return false;
    const std::uint64_t key = read_varint();
    f = Field{};
    f.number = static_cast<std::uint32_t>(key >> 3);
    const auto wire = static_cast<std::uint8_t>(key & 7);
    if (f.number == 0)
      throw ModelLoadError("protobuf: field number 0");
    switch (wire) {
    case 0:
      f.type = WireType::Varint;
      f.varint = read_varint();
      break;
    case 1:
      f.type = WireType::Fixed64;
      f.fixed = read_fixed(8);
      break;
    case 2: {
      f.type = WireType::LengthDelimited;
      const std::uint64_t len = read_varint();
      if (len > data_.size() - pos_)
        throw ModelLoadError("protobuf: length-delimited field overruns buffer");
      f.bytes = data_.subspan(pos_, static_cast<std::size_t>(len));
      pos_ += static_cast<std::size_t>(len);
      break;
    }
    case 5:
      f.type = WireType::Fixed32;
      f.fixed = read_fixed(4);
      break;
    default:
      throw ModelLoadError("protobuf: unsupported wire type " +
                           std::to_string(wire));
    }
    return true;
  }

  std::uint64_t read_varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (at_end())
        throw ModelLoadError("protobuf: truncated varint");
      const std::uint8_t b = data_[pos_++];
      v |= std::uint64_t(b & 0x7F) << shift;
      if (!(b & 0x80))
        return v;
    }
    throw ModelLoadError("protobuf: varint longer than 10 bytes");
  }

private:
  std::uint64_t read_fixed(std::size_t n) {
    if (n > data_.size() - pos_)
      throw ModelLoadError("protobuf: truncated fixed-width field");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

/// Appends a repeated int64 field that may be packed or unpacked.
inline void append_int64s(const Field &f, std::vector<std::int64_t> &out) {
  if (f.type == WireType::Varint) {
    out.push_back(f.as_int64());
    return;
  }
  Reader packed(f.bytes);
  while (!packed.at_end())
    out.push_back(static_cast<std::int64_t>(packed.read_varint()));
}

/// Appends a repeated float field that may be packed or unpacked.
inline void append_floats(const Field &f, std::vector<float> &out) {
  if (f.type == WireType::Fixed32) {
    out.push_back(f.as_float());
    return;
  }
  if (f.bytes.size() % 4 != 0)
    throw ModelLoadError("protobuf: packed float field has ragged length");
  for (std::size_t i = 0; i < f.bytes.size(); i += 4) {
    const std::uint32_t bits =
        std::uint32_t(f.bytes[i]) | (std::uint32_t(f.bytes[i + 1]) << 8) |
        (std::uint32_t(f.bytes[i + 2]) << 16) |
        (std::uint32_t(f.bytes[i + 3]) << 24);
    out.push_back(std::bit_cast<float>(bits));
  }
}

inline void append_doubles(const Field &f, std::vector<float> &out) {
  if (f.type == WireType::Fixed64) {
    out.push_back(static_cast<float>(f.as_double()));
    return;
  }
  if (f.bytes.size() % 8 != 0)
    throw ModelLoadError("protobuf: packed double field has ragged length");
  for (std::size_t i = 0; i < f.bytes.size(); i += 8) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b)
      bits |= std::uint64_t(f.bytes[i + b]) << (8 * b);
    out.push_back(static_cast<float>(std::bit_cast<double>(bits)));
  }
}

} // namespace camkit::onnx::pb
