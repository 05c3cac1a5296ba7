#pragma once

// Salient/context zone extraction and the drop/increase measures computed
// from the class probability before and after masking.

#include "camkit/errors.hpp"
#include "camkit/postprocess.hpp"
#include "camkit/tensor.hpp"

#include <cmath>
#include <span>
#include <string>

namespace camkit {

enum class Zone { Salient, Context };

/// Soft (multiplicative) masking: Salient keeps image * S, Context keeps
/// image * (1 - S), with S broadcast over the channels.
inline Tensor soft_mask(const Tensor &image, const SaliencyMap &saliency, Zone zone) {
  if (image.rank() != 3 || saliency.values.rank() != 2 ||
      image.dim(1) != saliency.values.dim(0) || image.dim(2) != saliency.values.dim(1))
    throw ShapeError("saliency " + shape_string(saliency.values.shape()) +
                     " does not match image " + shape_string(image.shape()));
  Tensor out = image;
  const std::size_t plane = image.dim(1) * image.dim(2);
  const auto s = saliency.values.data();
  for (std::size_t c = 0; c < image.dim(0); ++c) {
    auto channel = out.slice(c);
    for (std::size_t p = 0; p < plane; ++p) {
      const float w = zone == Zone::Salient ? s[p] : 1.0f - s[p];
      channel[p] *= w;
    }
  }
  return out;
}

namespace detail {

inline void check_probability(double p, const char *what) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0)
    throw RangeError(std::string(what) + " probability " + std::to_string(p) +
                     " outside [0, 1]");
}

} // namespace detail

/// Relative fall of the class probability, clamped at 0; 0 when the
/// original probability is 0.
inline double drop_fraction(double orig_prob, double masked_prob) {
  detail::check_probability(orig_prob, "original");
  detail::check_probability(masked_prob, "masked");
  if (orig_prob == 0.0)
    return 0.0;
  return std::max(0.0, orig_prob - masked_prob) / orig_prob;
}

/// 1 iff masking strictly raised the class probability.
inline int increase_indicator(double orig_prob, double masked_prob) {
  detail::check_probability(orig_prob, "original");
  detail::check_probability(masked_prob, "masked");
  return masked_prob > orig_prob ? 1 : 0;
}

/// Fraction of images with an increase.
inline double increase_rate(std::span<const int> indicators) {
  if (indicators.empty())
    return 0.0;
  double hits = 0;
  for (int v : indicators)
    hits += v;
  return hits / static_cast<double>(indicators.size());
}

} // namespace camkit
