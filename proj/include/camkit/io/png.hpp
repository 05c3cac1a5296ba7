#pragma once

// Thin libpng wrapper: 8-bit index/gray reads (segmentation masks) and
// 8-bit RGB / indexed writes with optional tEXt metadata.

#include "camkit/errors.hpp"

#include <png.h>

#include <array>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace camkit::png {

/// One byte per pixel: palette index for palette images, gray level for
/// grayscale images.
struct IndexedImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
  bool paletted = false;

  std::uint8_t at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
};

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels; // r, g, b interleaved

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  std::uint8_t *px(std::size_t y, std::size_t x) { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t *px(std::size_t y, std::size_t x) const {
    return &pixels[(y * width + x) * 3];
  }
};

using TextChunks = std::map<std::string, std::string>;

namespace detail {

struct Session {
  std::FILE *fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  bool reading = true;
  std::string error;
  std::vector<png_bytep> rows;
  std::vector<png_text> text;

  ~Session() {
    if (png)
      reading ? png_destroy_read_struct(&png, &info, nullptr)
              : png_destroy_write_struct(&png, &info);
    if (fp)
      std::fclose(fp);
  }
};

inline void on_error(png_structp png, png_const_charp msg) {
  auto *s = static_cast<Session *>(png_get_error_ptr(png));
  s->error = msg ? msg : "libpng error";
  longjmp(png_jmpbuf(png), 1);
}

inline void on_warning(png_structp, png_const_charp) {}

} // namespace detail

inline IndexedImage read_indexed(const std::filesystem::path &path) {
  auto s = std::make_unique<detail::Session>();
  auto img = std::make_unique<IndexedImage>();
  s->fp = std::fopen(path.c_str(), "rb");
  if (!s->fp)
    throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, s->fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError(path.string() + " is not a PNG file");
  s->png = png_create_read_struct(PNG_LIBPNG_VER_STRING, s.get(), detail::on_error,
                                  detail::on_warning);
  s->info = s->png ? png_create_info_struct(s->png) : nullptr;
  if (!s->png || !s->info)
    throw IoError("libpng initialisation failed");
  if (setjmp(png_jmpbuf(s->png)))
    throw FormatError(path.string() + ": " + s->error);
  png_init_io(s->png, s->fp);
  png_set_sig_bytes(s->png, 8);
  png_read_info(s->png, s->info);
  const int color = png_get_color_type(s->png, s->info);
  const int depth = png_get_bit_depth(s->png, s->info);
  if (color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY)
    throw FormatError(path.string() + ": expected an indexed or grayscale PNG");
  if (depth > 8)
    throw FormatError(path.string() + ": 16-bit PNG masks are not supported");
  if (depth < 8)
    png_set_packing(s->png);
  png_read_update_info(s->png, s->info);
  img->width = png_get_image_width(s->png, s->info);
  img->height = png_get_image_height(s->png, s->info);
  img->paletted = color == PNG_COLOR_TYPE_PALETTE;
  img->pixels.resize(img->width * img->height);
  s->rows.resize(img->height);
  for (std::size_t y = 0; y < img->height; ++y)
    s->rows[y] = img->pixels.data() + y * img->width;
  png_read_image(s->png, s->rows.data());
  png_read_end(s->png, nullptr);
  return std::move(*img);
}

namespace detail {

inline void write_png(const std::filesystem::path &path, std::size_t width,
                      std::size_t height, int color_type, const std::uint8_t *pixels,
                      std::size_t bytes_per_pixel,
                      const std::vector<std::array<std::uint8_t, 3>> *palette,
                      const TextChunks &text) {
  auto s = std::make_unique<Session>();
  s->reading = false;
  s->fp = std::fopen(path.c_str(), "wb");
  if (!s->fp)
    throw IoError("cannot write " + path.string());
  s->png = png_create_write_struct(PNG_LIBPNG_VER_STRING, s.get(), on_error, on_warning);
  s->info = s->png ? png_create_info_struct(s->png) : nullptr;
  if (!s->png || !s->info)
    throw IoError("libpng initialisation failed");
  std::vector<png_color> plte;
  if (palette)
    for (const auto &c : *palette)
      plte.push_back(png_color{c[0], c[1], c[2]});
  for (const auto &[key, value] : text) {
    png_text t{};
    t.compression = PNG_TEXT_COMPRESSION_NONE;
    t.key = const_cast<char *>(key.c_str());
    t.text = const_cast<char *>(value.c_str());
    t.text_length = value.size();
    s->text.push_back(t);
  }
  s->rows.resize(height);
  for (std::size_t y = 0; y < height; ++y)
    s->rows[y] = const_cast<png_bytep>(pixels + y * width * bytes_per_pixel);
  if (setjmp(png_jmpbuf(s->png)))
    throw IoError(path.string() + ": " + s->error);
  png_init_io(s->png, s->fp);
  png_set_IHDR(s->png, s->info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!plte.empty())
    png_set_PLTE(s->png, s->info, plte.data(), static_cast<int>(plte.size()));
  if (!s->text.empty())
    png_set_text(s->png, s->info, s->text.data(), static_cast<int>(s->text.size()));
  png_write_info(s->png, s->info);
  png_write_image(s->png, s->rows.data());
  png_write_end(s->png, nullptr);
}

} // namespace detail

inline void write_rgb(const std::filesystem::path &path, const RgbImage &img,
                      const TextChunks &text = {}) {
  detail::write_png(path, img.width, img.height, PNG_COLOR_TYPE_RGB, img.pixels.data(),
                    3, nullptr, text);
}

/// Writes an 8-bit palette PNG; the palette gets one gray entry per index.
inline void write_indexed(const std::filesystem::path &path, const IndexedImage &img) {
  std::vector<std::array<std::uint8_t, 3>> palette(256);
  for (int i = 0; i < 256; ++i)
    palette[static_cast<std::size_t>(i)] = {std::uint8_t(i), std::uint8_t(i), std::uint8_t(i)};
  detail::write_png(path, img.width, img.height, PNG_COLOR_TYPE_PALETTE, img.pixels.data(),
                    1, &palette, {});
}

} // namespace camkit::png
