#pragma once

// NPY v1.0 reader/writer restricted to little-endian float32, C order.

#include "camkit/errors.hpp"
#include "camkit/tensor.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace camkit::npy {

inline constexpr std::string_view kMagic{"\x93NUMPY", 6};
inline constexpr std::size_t kAlignment = 64;

namespace detail {

inline std::uint32_t load_le32(const unsigned char *p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

/// Minimal scanner over the Python dict literal that forms the header.
class HeaderParser {
public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  struct Fields {
    std::optional<std::string> descr;
    std::optional<bool> fortran_order;
    std::optional<Shape> shape;
  };

  Fields parse() {
    Fields out;
    expect('{');
    skip_ws();
    while (peek() != '}') {
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        out.descr = parse_string();
      } else if (key == "fortran_order") {
        out.fortran_order = parse_bool();
      } else if (key == "shape") {
        out.shape = parse_tuple();
      } else {
        fail("unexpected header key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        skip_ws();
      } else if (peek() != '}') {
        fail("expected ',' or '}'");
      }
    }
    ++pos_;
    skip_ws();
    if (pos_ != text_.size())
      fail("trailing characters after header dict");
    return out;
  }

private:
  [[noreturn]] void fail(const std::string &what) const {
    throw FormatError("NPY header: " + what + " at offset " +
                      std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  char peek() {
    skip_ws();
    if (pos_ >= text_.size())
      fail("unexpected end of header");
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c)
      fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    const char quote = peek();
    if (quote != '\'' && quote != '"')
      fail("expected string literal");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos)
      fail("unterminated string literal");
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  bool parse_bool() {
    skip_ws();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    fail("expected True or False");
  }

  Shape parse_tuple() {
    expect('(');
    Shape shape;
    while (peek() != ')') {
      if (!std::isdigit(static_cast<unsigned char>(text_[pos_])))
        fail("expected dimension");
      std::size_t v = 0;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        v = v * 10 + std::size_t(text_[pos_] - '0');
        ++pos_;
      }
      shape.push_back(v);
      if (peek() == ',')
        ++pos_;
      else if (peek() != ')')
        fail("expected ',' or ')' in shape");
    }
    ++pos_;
    return shape;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

} // namespace detail

/// Header text exactly as numpy writes it for a float32 C-order array,
/// padded with spaces and terminated by '\n' so that the preamble plus
/// header is a multiple of 64 bytes.
inline std::string format_header(const Shape &shape) {
  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i)
      dict += ", ";
    dict += std::to_string(shape[i]);
  }
  if (shape.size() == 1)
    dict += ',';
  dict += "), }";
  const std::size_t preamble = kMagic.size() + 2 + 2;
  const std::size_t unpadded = preamble + dict.size() + 1;
  const std::size_t padded = (unpadded + kAlignment - 1) / kAlignment * kAlignment;
  dict.append(padded - unpadded, ' ');
  dict += '\n';
  if (dict.size() > 0xFFFF)
    throw FormatError("NPY v1.0 header too long for shape " +
                      shape_string(shape));
  return dict;
}

inline std::vector<unsigned char> encode(const Tensor &tensor) {
  const std::string header = format_header(tensor.shape());
  std::vector<unsigned char> out;
  out.reserve(10 + header.size() + tensor.size() * 4);
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  out.push_back(1);
  out.push_back(0);
  out.push_back(static_cast<unsigned char>(header.size() & 0xFF));
  out.push_back(static_cast<unsigned char>(header.size() >> 8));
  out.insert(out.end(), header.begin(), header.end());
  for (float v : tensor.data()) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b)
      out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFF));
  }
  return out;
}

/// Parses an NPY buffer. Accepts header versions 1.0 and 2.0 (they differ
/// only in the width of the header-length field); the array itself must be
/// '<f4' in C order.
inline Tensor decode(std::span<const unsigned char> bytes,
                     const std::string &origin = "<buffer>") {
  auto fail = [&](const std::string &what) -> FormatError {
    return FormatError(origin + ": " + what);
  };
  if (bytes.size() < 10 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0)
    throw fail("not an NPY file (bad magic)");
  const unsigned major = bytes[6];
  std::size_t header_len = 0;
  std::size_t offset = 0;
  if (major == 1) {
    header_len = std::size_t(bytes[8]) | (std::size_t(bytes[9]) << 8);
    offset = 10;
  } else if (major == 2) {
    if (bytes.size() < 12)
      throw fail("truncated NPY v2 preamble");
    header_len = detail::load_le32(bytes.data() + 8);
    offset = 12;
  } else {
    throw fail("unsupported NPY version " + std::to_string(major));
  }
  if (bytes.size() < offset + header_len)
    throw fail("truncated NPY header");
  const std::string_view header(
      reinterpret_cast<const char *>(bytes.data() + offset), header_len);
  const auto fields = detail::HeaderParser(header).parse();
  if (!fields.descr || !fields.fortran_order || !fields.shape)
    throw fail("NPY header missing descr/fortran_order/shape");
  if (*fields.descr != "<f4")
    throw fail("unsupported dtype '" + *fields.descr +
               "' (only little-endian float32 '<f4')");
  if (*fields.fortran_order)
    throw fail("Fortran-order arrays are not supported");

  const Shape shape = *fields.shape;
  const std::size_t count = shape_volume(shape);
  const std::size_t body = offset + header_len;
  if (bytes.size() - body != count * 4)
    throw fail("payload holds " + std::to_string(bytes.size() - body) +
               " bytes, expected " + std::to_string(count * 4));
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i)
    data[i] = std::bit_cast<float>(detail::load_le32(bytes.data() + body + 4 * i));
  return Tensor(shape, std::move(data));
}

inline Tensor read(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw MissingComponent("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode(bytes, path.string());
}

inline void write(const std::filesystem::path &path, const Tensor &tensor) {
  const auto bytes = encode(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("short write to " + path.string());
}

} // namespace camkit::npy
