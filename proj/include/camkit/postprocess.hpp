#pragma once

#include "camkit/cam.hpp"
#include "camkit/errors.hpp"
#include "camkit/image_ops.hpp"
#include "camkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace camkit {

enum class Interpolation { Bilinear };

struct PostprocessConfig {
  double smoothing_sigma = 1.0; // feature-map pixels; 0 disables smoothing
  int smoothing_kernel = 5;
  std::size_t target_height = 0;
  std::size_t target_width = 0;
  Interpolation interpolation = Interpolation::Bilinear;
};

/// Input-resolution saliency in [0, 1] with peak 1 (or identically zero).
struct SaliencyMap {
  Tensor values; // H x W
  SaliencySource source = SaliencySource::GuidedCam;

  std::size_t height() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
};

inline void validate(const PostprocessConfig &cfg, std::size_t feature_h,
                     std::size_t feature_w) {
  if (!(cfg.smoothing_sigma >= 0.0) || !std::isfinite(cfg.smoothing_sigma))
    throw ConfigError("smoothing sigma must be finite and >= 0");
  if (cfg.smoothing_kernel < 1 || cfg.smoothing_kernel % 2 == 0)
    throw ConfigError("smoothing kernel must be odd and >= 1, got " +
                      std::to_string(cfg.smoothing_kernel));
  if (cfg.target_height < feature_h || cfg.target_width < feature_w ||
      cfg.target_height == 0 || cfg.target_width == 0)
    throw ConfigError("target size " + std::to_string(cfg.target_height) + "x" +
                      std::to_string(cfg.target_width) +
                      " is smaller than the feature map " +
                      std::to_string(feature_h) + "x" +
                      std::to_string(feature_w));
}

/// Smooth at feature resolution, min-max normalise, then upsample
/// (align-corners bilinear) to the target size. When the upsampling grid
/// does not land on the source peak the result is rescaled so its maximum
/// is exactly 1 again; this is a no-op for aligned grids.
inline SaliencyMap postprocess(const RawSaliency &raw,
                               const PostprocessConfig &cfg) {
  if (raw.values.rank() != 2 || raw.values.empty())
    throw ShapeError("raw saliency must be a non-empty h x w map, got " +
                     shape_string(raw.values.shape()));
  validate(cfg, raw.values.dim(0), raw.values.dim(1));

  Tensor map = image::gaussian_smooth(raw.values, cfg.smoothing_sigma,
                                      cfg.smoothing_kernel);
  map = image::min_max_normalize(std::move(map));
  map = image::resize_bilinear(map, cfg.target_height, cfg.target_width);

  const float peak = *std::max_element(map.data().begin(), map.data().end());
  if (peak > 0.0f && peak != 1.0f)
    for (auto &v : map.data())
      v = std::min(1.0f, v / peak);
  return {std::move(map), raw.source};
}

} // namespace camkit
