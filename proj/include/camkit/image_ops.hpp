#pragma once

// Small separable-filter and resampling kernels on row-major planes.

#include "camkit/errors.hpp"
#include "camkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace camkit::image {

/// Symmetric reflection (edge sample repeated: ... b a | a b c ... ),
/// valid for any offset and any n >= 1.
inline std::size_t reflect_index(std::int64_t i, std::size_t n) {
  const auto period = static_cast<std::int64_t>(2 * n);
  std::int64_t m = i % period;
  if (m < 0)
    m += period;
  return static_cast<std::size_t>(m < static_cast<std::int64_t>(n)
                                      ? m
                                      : period - 1 - m);
}

/// Sampled Gaussian of the given odd length, normalised to unit sum.
inline std::vector<double> gaussian_kernel(double sigma, int size) {
  if (size < 1 || size % 2 == 0)
    throw ConfigError("Gaussian kernel size must be odd and >= 1, got " +
                      std::to_string(size));
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError("Gaussian sigma must be finite and >= 0");
  std::vector<double> k(static_cast<std::size_t>(size), 0.0);
  const int r = size / 2;
  if (sigma == 0.0) {
    k[static_cast<std::size_t>(r)] = 1.0;
    return k;
  }
  double sum = 0.0;
  for (int x = -r; x <= r; ++x) {
    const double v = std::exp(-(x * x) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(x + r)] = v;
    sum += v;
  }
  for (auto &v : k)
    v /= sum;
  return k;
}

/// Kernel length covering +-3 sigma.
inline int kernel_size_for(double sigma) {
  return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
}

/// Separable convolution of one h x w plane with reflective borders.
template <std::floating_point T>
void convolve_plane(std::span<T> plane, std::size_t h, std::size_t w,
                    const std::vector<double> &kernel) {
  const auto r = static_cast<std::int64_t>(kernel.size() / 2);
  std::vector<double> tmp(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      double acc = 0.0;
      for (std::int64_t d = -r; d <= r; ++d)
        acc += kernel[static_cast<std::size_t>(d + r)] *
               plane[i * w + reflect_index(static_cast<std::int64_t>(j) + d, w)];
      tmp[i * w + j] = acc;
    }
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      double acc = 0.0;
      for (std::int64_t d = -r; d <= r; ++d)
        acc += kernel[static_cast<std::size_t>(d + r)] *
               tmp[reflect_index(static_cast<std::int64_t>(i) + d, h) * w + j];
      plane[i * w + j] = static_cast<T>(acc);
    }
}

/// Gaussian smoothing of a 2-D map, or of every channel of a C x H x W
/// tensor. sigma == 0 returns the input unchanged.
template <std::floating_point T>
BasicTensor<T> gaussian_smooth(BasicTensor<T> t, double sigma, int size) {
  const auto kernel = gaussian_kernel(sigma, size);
  if (sigma == 0.0 || size == 1)
    return t;
  if (t.rank() == 2) {
    convolve_plane(t.data(), t.dim(0), t.dim(1), kernel);
  } else if (t.rank() == 3) {
    for (std::size_t c = 0; c < t.dim(0); ++c)
      convolve_plane(t.slice(c), t.dim(1), t.dim(2), kernel);
  } else {
    throw ShapeError("gaussian_smooth expects a 2-D or 3-D tensor, got " +
                     shape_string(t.shape()));
  }
  return t;
}

/// Min-max rescale to [0, 1]. An identically-zero map is returned as is;
/// any other constant map becomes all ones so the peak is always 1.
template <std::floating_point T>
BasicTensor<T> min_max_normalize(BasicTensor<T> t) {
  if (t.empty())
    return t;
  const auto [lo_it, hi_it] = std::minmax_element(t.data().begin(), t.data().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    std::fill(t.data().begin(), t.data().end(), hi == 0.0 ? T{0} : T{1});
    return t;
  }
  const double range = hi - lo;
  for (auto &v : t.data())
    v = static_cast<T>(std::clamp((v - lo) / range, 0.0, 1.0));
  return t;
}

/// Bilinear resampling of an h x w map with the align-corners convention:
/// output corners sample input corners exactly, and output (y, x) maps to
/// input (y * (h-1)/(H-1), x * (w-1)/(W-1)).
template <std::floating_point T>
BasicTensor<T> resize_bilinear(const BasicTensor<T> &src, std::size_t out_h,
                               std::size_t out_w) {
  if (src.rank() != 2 || src.empty())
    throw ShapeError("resize_bilinear expects a non-empty 2-D map, got " +
                     shape_string(src.shape()));
  if (out_h == 0 || out_w == 0)
    throw ConfigError("resize target must be non-empty");
  const std::size_t h = src.dim(0), w = src.dim(1);
  const double sy = out_h > 1 ? double(h - 1) / double(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? double(w - 1) / double(out_w - 1) : 0.0;
  BasicTensor<T> out(Shape{out_h, out_w});
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = y * sy;
    const auto y0 = std::min(static_cast<std::size_t>(fy), h - 1);
    const auto y1 = std::min(y0 + 1, h - 1);
    const double ay = fy - double(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = x * sx;
      const auto x0 = std::min(static_cast<std::size_t>(fx), w - 1);
      const auto x1 = std::min(x0 + 1, w - 1);
      const double ax = fx - double(x0);
      const double top = (1.0 - ax) * src.at(y0, x0) + ax * src.at(y0, x1);
      const double bottom = (1.0 - ax) * src.at(y1, x0) + ax * src.at(y1, x1);
      out.at(y, x) = static_cast<T>((1.0 - ay) * top + ay * bottom);
    }
  }
  return out;
}

} // namespace camkit::image
