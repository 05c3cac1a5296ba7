#pragma once

// Collection layout:
//   root/<stem>.bundle/      extraction bundle directory
//   root/<stem>.mask.png     optional indexed segmentation mask
//   root/<stem>.boxes.json   optional box sidecar

#include "camkit/datasets/annotation.hpp"
#include "camkit/errors.hpp"
#include "camkit/io/bundle.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace camkit {

inline constexpr const char *kBundleSuffix = ".bundle";
inline constexpr const char *kMaskSuffix = ".mask.png";
inline constexpr const char *kBoxesSuffix = ".boxes.json";

struct EvalItem {
  std::string stem;
  std::filesystem::path bundle_path;
  int target_class = 0;
  std::optional<Annotation> mask;
  std::optional<Annotation> boxes;

  bool annotated() const { return mask.has_value() || boxes.has_value(); }

  /// Annotation used for the pointing game: boxes when present, else mask.
  const Annotation *pointing_annotation() const {
    return boxes ? &*boxes : mask ? &*mask : nullptr;
  }
  /// Annotation used for Dice/IoU: mask when present, else boxes.
  const Annotation *region_annotation() const {
    return mask ? &*mask : boxes ? &*boxes : nullptr;
  }
};

struct ScanWarning {
  std::string stem;
  std::string message;
};

struct ScanOptions {
  std::optional<std::size_t> subsample;
  std::uint64_t seed = 0;
  /// Skip (with a warning) bundles that have neither mask nor boxes.
  bool require_annotation = true;
};

struct ScanResult {
  std::vector<EvalItem> items;
  std::vector<ScanWarning> warnings;
};

/// Picks `n` of `count` indices with a seeded partial Fisher-Yates shuffle
/// driven by raw mt19937_64 output (fully specified by the standard, so the
/// selection is identical on every platform). Returned sorted.
inline std::vector<std::size_t> seeded_subset(std::size_t count, std::size_t n,
                                              std::uint64_t seed) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  n = std::min(n, count);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (count - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline ScanResult scan_collection(const std::filesystem::path &root,
                                  const ScanOptions &options = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root))
    throw MissingComponent("collection root not found: " + root.string());

  std::vector<std::string> stems;
  for (const auto &entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    const std::string suffix = kBundleSuffix;
    if (entry.is_directory() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
      stems.push_back(name.substr(0, name.size() - suffix.size()));
  }
  std::sort(stems.begin(), stems.end());

  ScanResult result;
  for (const auto &stem : stems) {
    EvalItem item;
    item.stem = stem;
    item.bundle_path = root / (stem + kBundleSuffix);
    AnnotationLimits limits;
    try {
      const auto manifest = read_manifest(item.bundle_path);
      item.target_class = manifest.class_index;
      const auto image_shape = manifest.tensors.at("image").at("shape").get<Shape>();
      const auto score_shape = manifest.tensors.at("class_scores").at("shape").get<Shape>();
      if (image_shape.size() != 3 || score_shape.size() != 1)
        throw ShapeError("manifest declares malformed image/class_scores shapes");
      limits.height = image_shape[1];
      limits.width = image_shape[2];
      limits.num_classes = static_cast<int>(score_shape[0]);
    } catch (const std::exception &e) {
      result.warnings.push_back({stem, std::string("unreadable bundle: ") + e.what()});
      continue;
    }

    try {
      const auto mask_path = root / (stem + kMaskSuffix);
      const auto boxes_path = root / (stem + kBoxesSuffix);
      if (fs::exists(mask_path))
        item.mask = load_annotation(mask_path, AnnotationKind::SegMask, limits);
      if (fs::exists(boxes_path))
        item.boxes = load_annotation(boxes_path, AnnotationKind::BBoxes, limits);
    } catch (const Error &e) {
      result.warnings.push_back({stem, std::string("invalid annotation: ") + e.what()});
      continue;
    }

    if (!item.annotated()) {
      if (options.require_annotation) {
        result.warnings.push_back({stem, "orphan bundle without annotation; skipped"});
        continue;
      }
    } else if ((item.mask && !item.mask->contains_class(item.target_class)) ||
               (item.boxes && !item.boxes->contains_class(item.target_class))) {
      result.warnings.push_back(
          {stem, "annotation does not contain target class " +
                     std::to_string(item.target_class) + "; skipped"});
      continue;
    }
    result.items.push_back(std::move(item));
  }

  if (options.subsample && *options.subsample < result.items.size()) {
    std::vector<EvalItem> chosen;
    for (auto i : seeded_subset(result.items.size(), *options.subsample, options.seed))
      chosen.push_back(std::move(result.items[i]));
    result.items = std::move(chosen);
  }
  return result;
}

} // namespace camkit
