#pragma once

#include "camkit/datasets/annotation.hpp"
#include "camkit/errors.hpp"
#include "camkit/mask.hpp"
#include "camkit/postprocess.hpp"

#include <algorithm>
#include <cstddef>
#include <tuple>
#include <utility>
#include <span>
#include <string>

namespace camkit {

/// Pseudo segmentation: mask[i][j] = saliency[i][j] >= tau.
inline BinaryMask binarize(const SaliencyMap &saliency, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw ConfigError("binarization threshold must lie in (0, 1), got " +
                      std::to_string(tau));
  const auto &v = saliency.values;
  BinaryMask m(v.dim(0), v.dim(1));
  for (std::size_t i = 0; i < v.size(); ++i)
    m.set(i, v[i] >= tau);
  return m;
}

namespace detail {

struct Overlap {
  std::size_t a = 0, b = 0, both = 0;
};

inline Overlap overlap(const BinaryMask &pred, const BinaryMask &gt) {
  if (!pred.same_dims(gt))
    throw ShapeError("mask dims differ: " + std::to_string(pred.height()) + "x" +
                     std::to_string(pred.width()) + " vs " + std::to_string(gt.height()) +
                     "x" + std::to_string(gt.width()));
  Overlap o;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    o.a += pred[i];
    o.b += gt[i];
    o.both += pred[i] && gt[i];
  }
  return o;
}

} // namespace detail

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
inline double dice(const BinaryMask &pred, const BinaryMask &gt) {
  const auto o = detail::overlap(pred, gt);
  if (o.a + o.b == 0)
    return 1.0;
  return 2.0 * double(o.both) / double(o.a + o.b);
}

/// |A n B| / |A u B|; 1 when both masks are empty.
inline double iou(const BinaryMask &pred, const BinaryMask &gt) {
  const auto o = detail::overlap(pred, gt);
  const std::size_t uni = o.a + o.b - o.both;
  if (uni == 0)
    return 1.0;
  return double(o.both) / double(uni);
}

struct PointingResult {
  bool hit = false;
  bool degenerate = false; // identically-zero saliency, scored as a miss
  std::size_t y = 0;
  std::size_t x = 0;
};

/// Location of the maximum; the first in row-major order on ties.
inline std::pair<std::size_t, std::size_t> argmax_pixel(const Tensor &map) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.size(); ++i)
    if (map[i] > map[best])
      best = i;
  return {best / map.dim(1), best % map.dim(1)};
}

inline PointingResult pointing_game(const SaliencyMap &saliency,
                                    const Annotation &annotation, int target_class) {
  if (!annotation.contains_class(target_class))
    throw AnnotationError("annotation does not contain target class " +
                          std::to_string(target_class));
  const auto &v = saliency.values;
  if (annotation.kind == AnnotationKind::SegMask &&
      (annotation.height != v.dim(0) || annotation.width != v.dim(1)))
    throw ShapeError("saliency " + shape_string(v.shape()) +
                     " does not match the annotation mask");
  PointingResult r;
  const bool all_zero = std::all_of(v.data().begin(), v.data().end(),
                                    [](float s) { return s == 0.0f; });
  if (all_zero) {
    r.degenerate = true;
    return r;
  }
  std::tie(r.y, r.x) = argmax_pixel(v);
  r.hit = annotation.covers(r.y, r.x, target_class);
  return r;
}

/// Hits / (Hits + Misses); 0 for an empty list.
inline double pointing_accuracy(std::span<const PointingResult> results) {
  if (results.empty())
    return 0.0;
  std::size_t hits = 0;
  for (const auto &r : results)
    hits += r.hit;
  return double(hits) / double(results.size());
}

} // namespace camkit
