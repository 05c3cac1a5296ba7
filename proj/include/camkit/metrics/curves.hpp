#pragma once

// Insertion and deletion curves. Pixels are ranked by descending saliency
// (ties by row-major index). Deletion starts from the image and replaces
// the top-ranked pixels with the deletion baseline; insertion starts from
// the insertion baseline and restores the top-ranked pixels. The class
// probability is recorded at steps+1 evenly spaced fractions and the area
// under the curve is the trapezoidal integral over the fraction axis.

#include "camkit/errors.hpp"
#include "camkit/image_ops.hpp"
#include "camkit/inference/scorer.hpp"
#include "camkit/postprocess.hpp"
#include "camkit/tensor.hpp"

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string_view>
#include <vector>

namespace camkit {

enum class CurveMode { Insertion, Deletion };

struct Baseline {
  enum class Kind { Zero, Blur } kind = Kind::Zero;
  double blur_sigma = 10.0; // input pixels, Blur only
};

struct CurveConfig {
  int steps = 100;
  Baseline deletion{Baseline::Kind::Zero, 0.0};
  Baseline insertion{Baseline::Kind::Blur, 10.0};
};

struct Curve {
  std::vector<double> fractions;
  std::vector<double> scores;
  double auc = 0.0;
};

inline std::string_view to_string(CurveMode m) {
  return m == CurveMode::Insertion ? "insertion" : "deletion";
}

inline Tensor make_baseline(const Tensor &image, const Baseline &b) {
  if (b.kind == Baseline::Kind::Zero)
    return Tensor(image.shape(), 0.0f);
  if (!(b.blur_sigma > 0.0))
    throw ConfigError("blur baseline needs sigma > 0");
  return image::gaussian_smooth(image, b.blur_sigma, image::kernel_size_for(b.blur_sigma));
}

/// Pixel indices sorted by descending saliency, ties by ascending index.
inline std::vector<std::size_t> rank_pixels(const Tensor &saliency) {
  std::vector<std::size_t> order(saliency.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return saliency[a] > saliency[b];
  });
  return order;
}

/// Number of ranked pixels switched at step k of `steps` (nearest integer
/// to k * N / steps, halves rounded up).
inline std::size_t pixels_at_step(std::size_t k, std::size_t steps, std::size_t n) {
  return (2 * k * n + steps) / (2 * steps);
}

inline double trapezoid(const std::vector<double> &x, const std::vector<double> &y) {
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i)
    area += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2.0;
  return area;
}

inline Curve insertion_deletion(const Tensor &image, const SaliencyMap &saliency,
                                Scorer &scorer, int target_class, CurveMode mode,
                                const CurveConfig &cfg = {}) {
  if (cfg.steps < 2)
    throw ConfigError("curve needs at least 2 steps");
  if (image.rank() != 3 || saliency.values.rank() != 2 ||
      image.dim(1) != saliency.values.dim(0) || image.dim(2) != saliency.values.dim(1))
    throw ShapeError("saliency " + shape_string(saliency.values.shape()) +
                     " does not match image " + shape_string(image.shape()));
  const auto cls = static_cast<std::size_t>(target_class);

  const Tensor baseline = make_baseline(
      image, mode == CurveMode::Deletion ? cfg.deletion : cfg.insertion);
  // `source` supplies the pixels written into `current` as the curve advances.
  Tensor current = mode == CurveMode::Deletion ? image : baseline;
  const Tensor &source = mode == CurveMode::Deletion ? baseline : image;

  const std::size_t channels = image.dim(0);
  const std::size_t plane = image.dim(1) * image.dim(2);
  const auto order = rank_pixels(saliency.values);
  const auto steps = static_cast<std::size_t>(cfg.steps);

  Curve curve;
  std::size_t switched = 0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const std::size_t target = pixels_at_step(k, steps, plane);
    for (; switched < target; ++switched) {
      const std::size_t p = order[switched];
      for (std::size_t c = 0; c < channels; ++c)
        current[c * plane + p] = source[c * plane + p];
    }
    curve.fractions.push_back(double(k) / double(steps));
    curve.scores.push_back(scorer.score(current).probability(cls));
  }
  curve.auc = trapezoid(curve.fractions, curve.scores);
  return curve;
}

} // namespace camkit
