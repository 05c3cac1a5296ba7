#pragma once

// Raster output: heatmap overlays and insertion/deletion curve plots.

#include "camkit/io/bundle.hpp"
#include "camkit/io/png.hpp"
#include "camkit/metrics/curves.hpp"
#include "camkit/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace camkit::render {

using Rgb = std::array<std::uint8_t, 3>;

/// Viridis sampled at 33 evenly spaced points; intermediate values are
/// linearly interpolated.
inline constexpr std::array<Rgb, 33> kViridis = {{
    {68, 1, 84},    {71, 13, 96},   {72, 24, 106},  {72, 35, 116},  {71, 45, 123},
    {69, 55, 129},  {66, 64, 134},  {62, 73, 137},  {59, 82, 139},  {55, 91, 141},
    {51, 99, 141},  {47, 107, 142}, {44, 114, 142}, {41, 122, 142}, {38, 130, 142},
    {35, 137, 142}, {33, 145, 140}, {31, 152, 139}, {31, 160, 136}, {34, 167, 133},
    {40, 174, 128}, {50, 182, 122}, {63, 188, 115}, {78, 195, 107}, {94, 201, 98},
    {112, 207, 87}, {132, 212, 75}, {152, 216, 62}, {173, 220, 48}, {194, 223, 35},
    {216, 226, 25}, {236, 229, 27}, {253, 231, 37},
}};

inline constexpr const char *kColormapName = "viridis";

inline std::array<double, 3> viridis(double t) {
  t = std::clamp(t, 0.0, 1.0) * double(kViridis.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), kViridis.size() - 2);
  const double a = t - double(i);
  std::array<double, 3> c{};
  for (std::size_t k = 0; k < 3; ++k)
    c[k] = (1.0 - a) * kViridis[i][k] + a * kViridis[i + 1][k];
  return c;
}

/// Undoes the bundle's mean/std normalisation and quantises to 8 bits.
inline png::RgbImage denormalize(const Tensor &image, const Preprocessing &prep) {
  const std::size_t h = image.dim(1), w = image.dim(2);
  png::RgbImage out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = image.at(c, y, x) * prep.std[c] + prep.mean[c];
        out.px(y, x)[c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  return out;
}

inline png::RgbImage overlay(const png::RgbImage &base, const SaliencyMap &saliency,
                             double alpha) {
  if (base.height != saliency.height() || base.width != saliency.width())
    throw ShapeError("overlay: saliency and image sizes differ");
  png::RgbImage out = base;
  for (std::size_t y = 0; y < base.height; ++y)
    for (std::size_t x = 0; x < base.width; ++x) {
      const auto heat = viridis(saliency.values.at(y, x));
      auto *p = out.px(y, x);
      for (std::size_t c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(
            std::lround((1.0 - alpha) * base.px(y, x)[c] + alpha * heat[c]));
    }
  return out;
}

// 5x7 bitmap glyphs, one byte per row, bit 4 = leftmost column.
struct Glyph {
  char ch;
  std::array<std::uint8_t, 7> rows;
};

inline constexpr std::array<Glyph, 40> kFont = {{
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
}};

class Canvas {
public:
  Canvas(std::size_t w, std::size_t h, Rgb bg = {255, 255, 255}) : img_(w, h) {
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        put(static_cast<long>(x), static_cast<long>(y), bg);
  }

  const png::RgbImage &image() const { return img_; }

  void put(long x, long y, Rgb c) {
    if (x < 0 || y < 0 || x >= static_cast<long>(img_.width) ||
        y >= static_cast<long>(img_.height))
      return;
    auto *p = img_.px(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }

  void fill_rect(long x0, long y0, long x1, long y1, Rgb c) {
    for (long y = y0; y <= y1; ++y)
      for (long x = x0; x <= x1; ++x)
        put(x, y, c);
  }

  /// Bresenham line, drawn `thickness` pixels wide.
  void line(long x0, long y0, long x1, long y1, Rgb c, int thickness = 1) {
    const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    const long r = thickness / 2;
    for (;;) {
      fill_rect(x0 - r, y0 - r, x0 - r + thickness - 1, y0 - r + thickness - 1, c);
      if (x0 == x1 && y0 == y1)
        break;
      const long e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  /// Upper-case text; characters without a glyph render as blanks.
  void text(long x, long y, std::string_view s, Rgb c, int scale = 1) {
    for (char ch : s) {
      const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      for (const auto &g : kFont) {
        if (g.ch != up)
          continue;
        for (long row = 0; row < 7; ++row)
          for (long col = 0; col < 5; ++col)
            if (g.rows[static_cast<std::size_t>(row)] & (0x10 >> col))
              fill_rect(x + col * scale, y + row * scale, x + col * scale + scale - 1,
                        y + row * scale + scale - 1, c);
        break;
      }
      x += 6 * scale;
    }
  }

private:
  png::RgbImage img_;
};

inline std::string auc_label(std::string_view name, double auc) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s AUC=%.4f", std::string(name).c_str(), auc);
  return buf;
}

inline constexpr Rgb kInsertionColor = {31, 119, 180};
inline constexpr Rgb kDeletionColor = {214, 39, 40};

/// Both curves on a unit square, AUC values in the legend.
inline png::RgbImage plot_curves(const Curve &insertion, const Curve &deletion,
                                 std::string_view title) {
  constexpr long W = 480, H = 360, left = 50, right = 20, top = 40, bottom = 50;
  Canvas cv(W, H);
  const Rgb black{0, 0, 0}, grid{220, 220, 220};
  const long pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double f) { return left + std::lround(f * double(pw)); };
  auto py = [&](double s) { return top + ph - std::lround(std::clamp(s, 0.0, 1.0) * double(ph)); };
  for (int t = 1; t < 4; ++t) {
    cv.line(px(t / 4.0), top, px(t / 4.0), top + ph, grid);
    cv.line(left, py(t / 4.0), left + pw, py(t / 4.0), grid);
  }
  cv.line(left, top, left, top + ph, black);
  cv.line(left, top + ph, left + pw, top + ph, black);
  cv.line(left + pw, top, left + pw, top + ph, black);
  cv.line(left, top, left + pw, top, black);
  cv.text(left - 8, top + ph + 6, "0", black);
  cv.text(left + pw - 4, top + ph + 6, "1", black);
  cv.text(left - 14, top - 3, "1", black);
  cv.text(left + pw / 2 - 24, top + ph + 20, "FRACTION", black);
  cv.text(left, 12, title, black, 2);

  auto draw = [&](const Curve &c, Rgb color) {
    for (std::size_t i = 1; i < c.fractions.size(); ++i)
      cv.line(px(c.fractions[i - 1]), py(c.scores[i - 1]), px(c.fractions[i]),
              py(c.scores[i]), color, 2);
  };
  draw(insertion, kInsertionColor);
  draw(deletion, kDeletionColor);

  const long lx = left + pw - 190, ly = top + 10;
  cv.fill_rect(lx - 6, ly - 6, lx + 180, ly + 30, {250, 250, 250});
  cv.fill_rect(lx, ly, lx + 10, ly + 6, kInsertionColor);
  cv.text(lx + 16, ly, auc_label("INSERTION", insertion.auc), black);
  cv.fill_rect(lx, ly + 14, lx + 10, ly + 20, kDeletionColor);
  cv.text(lx + 16, ly + 14, auc_label("DELETION", deletion.auc), black);
  return cv.image();
}

} // namespace camkit::render
