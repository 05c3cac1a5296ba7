#pragma once

// Ground-truth annotations: VOC-style indexed segmentation masks
// (pixel value = class index, 255 = ignore) and JSON box sidecars
//   [{"class": 12, "box": [x0, y0, x1, y1]}, ...]
// Boxes are half-open pixel rectangles: pixel (x, y) lies inside iff
// x0 <= x < x1 and y0 <= y < y1, with 0 <= x0 < x1 <= W (likewise y).

#include "camkit/errors.hpp"
#include "camkit/io/bundle.hpp"
#include "camkit/io/png.hpp"
#include "camkit/mask.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace camkit {

enum class AnnotationKind { SegMask, BBoxes };

inline constexpr std::uint8_t kIgnoreLabel = 255;

struct Box {
  int class_index = 0;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(std::size_t y, std::size_t x) const {
    const double px = static_cast<double>(x), py = static_cast<double>(y);
    return px >= x0 && px < x1 && py >= y0 && py < y1;
  }
};

struct Annotation {
  AnnotationKind kind = AnnotationKind::SegMask;
  std::size_t height = 0; // mask dims (SegMask only)
  std::size_t width = 0;
  std::vector<std::uint8_t> mask;
  std::vector<Box> boxes;

  bool contains_class(int cls) const {
    if (kind == AnnotationKind::SegMask)
      return cls >= 0 && cls < kIgnoreLabel &&
             std::find(mask.begin(), mask.end(), static_cast<std::uint8_t>(cls)) !=
                 mask.end();
    return std::any_of(boxes.begin(), boxes.end(),
                       [cls](const Box &b) { return b.class_index == cls; });
  }

  /// True when pixel (y, x) belongs to the annotated region of `cls`.
  bool covers(std::size_t y, std::size_t x, int cls) const {
    if (kind == AnnotationKind::SegMask)
      return y < height && x < width && mask[y * width + x] == cls;
    return std::any_of(boxes.begin(), boxes.end(), [&](const Box &b) {
      return b.class_index == cls && b.contains(y, x);
    });
  }

  /// Ground-truth region of `cls` rasterised at height x width.
  BinaryMask region(int cls, std::size_t h, std::size_t w) const {
    if (kind == AnnotationKind::SegMask && (h != height || w != width))
      throw ShapeError("segmentation mask is " + std::to_string(height) + "x" +
                       std::to_string(width) + ", requested " + std::to_string(h) +
                       "x" + std::to_string(w));
    BinaryMask m(h, w);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        if (covers(y, x, cls))
          m.set(y, x);
    return m;
  }
};

/// Bounds used to validate an annotation against the image it describes.
/// Unset members are not checked.
struct AnnotationLimits {
  std::optional<std::size_t> height;
  std::optional<std::size_t> width;
  std::optional<int> num_classes;
};

namespace detail {

inline void check_class(int cls, const AnnotationLimits &limits,
                        const std::filesystem::path &path) {
  if (cls < 0 || (limits.num_classes && cls >= *limits.num_classes))
    throw AnnotationError(path.string() + ": unknown class index " + std::to_string(cls));
}

inline Annotation load_mask(const std::filesystem::path &path,
                            const AnnotationLimits &limits) {
  png::IndexedImage img;
  try {
    img = png::read_indexed(path);
  } catch (const Error &e) {
    throw AnnotationError(e.what());
  }
  if ((limits.height && img.height != *limits.height) ||
      (limits.width && img.width != *limits.width))
    throw AnnotationError(path.string() + ": mask is " + std::to_string(img.height) +
                          "x" + std::to_string(img.width) +
                          " but the image is " +
                          std::to_string(limits.height.value_or(img.height)) + "x" +
                          std::to_string(limits.width.value_or(img.width)));
  std::vector<bool> seen(256, false);
  for (auto v : img.pixels)
    seen[v] = true;
  for (int v = 0; v < 255; ++v)
    if (seen[static_cast<std::size_t>(v)])
      check_class(v, limits, path);
  Annotation a;
  a.kind = AnnotationKind::SegMask;
  a.height = img.height;
  a.width = img.width;
  a.mask = std::move(img.pixels);
  return a;
}

inline Annotation load_boxes(const std::filesystem::path &path,
                             const AnnotationLimits &limits) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const Error &e) {
    throw AnnotationError(e.what());
  }
  if (!j.is_array())
    throw AnnotationError(path.string() + ": expected a JSON array of boxes");
  Annotation a;
  a.kind = AnnotationKind::BBoxes;
  for (const auto &entry : j) {
    Box b;
    try {
      b.class_index = entry.at("class").get<int>();
      const auto coords = entry.at("box").get<std::vector<double>>();
      if (coords.size() != 4)
        throw AnnotationError(path.string() + ": box must have 4 coordinates");
      b.x0 = coords[0];
      b.y0 = coords[1];
      b.x1 = coords[2];
      b.y1 = coords[3];
    } catch (const nlohmann::json::exception &e) {
      throw AnnotationError(path.string() + ": " + e.what());
    }
    check_class(b.class_index, limits, path);
    if (!(b.x0 < b.x1) || !(b.y0 < b.y1))
      throw AnnotationError(path.string() + ": degenerate box, need x0 < x1 and y0 < y1");
    if (b.x0 < 0 || b.y0 < 0 ||
        (limits.width && b.x1 > static_cast<double>(*limits.width)) ||
        (limits.height && b.y1 > static_cast<double>(*limits.height)))
      throw AnnotationError(path.string() + ": box outside the image bounds");
    a.boxes.push_back(b);
  }
  return a;
}

} // namespace detail

inline Annotation load_annotation(const std::filesystem::path &path, AnnotationKind kind,
                                  const AnnotationLimits &limits = {}) {
  if (!std::filesystem::exists(path))
    throw AnnotationError("annotation not found: " + path.string());
  return kind == AnnotationKind::SegMask ? detail::load_mask(path, limits)
                                         : detail::load_boxes(path, limits);
}

} // namespace camkit
