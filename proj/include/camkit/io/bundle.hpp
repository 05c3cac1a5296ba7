#pragma once

#include "camkit/errors.hpp"
#include "camkit/io/npy.hpp"
#include "camkit/tensor.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <string>

namespace camkit {

struct Preprocessing {
  std::array<int, 2> resize{0, 0};
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};

  friend bool operator==(const Preprocessing &, const Preprocessing &) = default;
};

/// Everything the numeric core needs for one image: the network input,
/// the feature and gradient stacks at the chosen layer, and the logits.
struct ExtractionBundle {
  Tensor image;        // 3 x H x W, preprocessed
  Tensor features;     // K x h x w
  Tensor gradients;    // K x h x w, d(logit[class_index]) / d(features)
  Tensor class_scores; // C, pre-softmax
  int class_index = 0;
  std::string layer_name;
  std::string model_id;
  Preprocessing preprocessing;
  /// Manifest keys this library does not interpret, carried through
  /// save/load unchanged.
  nlohmann::json extra = nlohmann::json::object();

  std::size_t channels() const { return features.dim(0); }
  std::size_t feature_height() const { return features.dim(1); }
  std::size_t feature_width() const { return features.dim(2); }
  std::size_t image_height() const { return image.dim(1); }
  std::size_t image_width() const { return image.dim(2); }

  friend bool operator==(const ExtractionBundle &,
                         const ExtractionBundle &) = default;
};

inline constexpr int kManifestVersion = 1;
inline constexpr const char *kManifestName = "manifest.json";

namespace detail {

inline void require_finite(const Tensor &t, const char *name) {
  if (!t.all_finite())
    throw NonFiniteData(std::string(name) + " contains NaN or Inf");
}

} // namespace detail

/// Throws the specific error for the first violated bundle invariant.
inline void validate_bundle(const ExtractionBundle &b) {
  if (b.image.rank() != 3 || b.image.dim(0) != 3)
    throw ShapeError("image must be 3 x H x W, got " +
                     shape_string(b.image.shape()));
  if (b.features.rank() != 3)
    throw ShapeError("features must be K x h x w, got " +
                     shape_string(b.features.shape()));
  if (b.features.empty())
    throw ShapeError("feature stack is empty " +
                     shape_string(b.features.shape()));
  if (b.gradients.shape() != b.features.shape())
    throw ShapeError("gradients " + shape_string(b.gradients.shape()) +
                     " do not match features " +
                     shape_string(b.features.shape()));
  if (b.class_scores.rank() != 1 || b.class_scores.empty())
    throw ShapeError("class_scores must be a non-empty vector, got " +
                     shape_string(b.class_scores.shape()));
  if (b.class_index < 0 ||
      static_cast<std::size_t>(b.class_index) >= b.class_scores.size())
    throw ShapeError("class_index " + std::to_string(b.class_index) +
                     " out of range for " +
                     std::to_string(b.class_scores.size()) + " classes");
  if (b.image.dim(1) < b.features.dim(1) || b.image.dim(2) < b.features.dim(2))
    throw ShapeError("image " + shape_string(b.image.shape()) +
                     " is smaller than feature map " +
                     shape_string(b.features.shape()));
  detail::require_finite(b.image, "image");
  detail::require_finite(b.features, "features");
  detail::require_finite(b.gradients, "gradients");
  detail::require_finite(b.class_scores, "class_scores");
}

inline void to_json(nlohmann::json &j, const Preprocessing &p) {
  j = nlohmann::json{{"resize", p.resize}, {"mean", p.mean}, {"std", p.std}};
}

inline void from_json(const nlohmann::json &j, Preprocessing &p) {
  j.at("resize").get_to(p.resize);
  j.at("mean").get_to(p.mean);
  j.at("std").get_to(p.std);
}

inline nlohmann::json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw MissingComponent("missing " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

struct BundleManifest {
  std::string model_id;
  std::string layer_name;
  int class_index = 0;
  Preprocessing preprocessing;
  nlohmann::json tensors;
  nlohmann::json extra = nlohmann::json::object();
};

/// Reads and checks only manifest.json; used by collection scanning where
/// loading every tensor would be wasteful.
inline BundleManifest read_manifest(const std::filesystem::path &dir) {
  const auto j = read_json_file(dir / kManifestName);
  BundleManifest m;
  try {
    if (j.at("version").get<int>() != kManifestVersion)
      throw FormatError(dir.string() + ": unsupported manifest version " +
                        j.at("version").dump());
    m.model_id = j.at("model_id").get<std::string>();
    m.layer_name = j.at("layer_name").get<std::string>();
    m.class_index = j.at("class_index").get<int>();
    m.preprocessing = j.at("preprocessing").get<Preprocessing>();
    m.tensors = j.at("tensors");
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(dir.string() + "/manifest.json: " + e.what());
  }
  for (const auto &[key, value] : j.items()) {
    if (key != "version" && key != "model_id" && key != "layer_name" &&
        key != "class_index" && key != "preprocessing" && key != "tensors")
      m.extra[key] = value;
  }
  return m;
}

inline ExtractionBundle load_bundle(const std::filesystem::path &dir) {
  if (!std::filesystem::is_directory(dir))
    throw MissingComponent("bundle directory not found: " + dir.string());
  const BundleManifest m = read_manifest(dir);

  auto load_tensor = [&](const char *name) {
    if (!m.tensors.contains(name))
      throw MissingComponent(dir.string() + ": manifest lists no tensor '" +
                             name + "'");
    Shape declared;
    std::string file;
    try {
      const auto &entry = m.tensors.at(name);
      file = entry.at("file").get<std::string>();
      declared = entry.at("shape").get<Shape>();
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(dir.string() + ": tensor entry '" + name +
                        "': " + e.what());
    }
    const auto path = dir / file;
    if (!std::filesystem::exists(path))
      throw MissingComponent("missing tensor file " + path.string());
    Tensor t = npy::read(path);
    if (t.shape() != declared)
      throw ShapeError(path.string() + " has shape " + shape_string(t.shape()) +
                       " but manifest declares " + shape_string(declared));
    return t;
  };

  ExtractionBundle b;
  b.image = load_tensor("image");
  b.features = load_tensor("features");
  b.gradients = load_tensor("gradients");
  b.class_scores = load_tensor("class_scores");
  b.class_index = m.class_index;
  b.layer_name = m.layer_name;
  b.model_id = m.model_id;
  b.preprocessing = m.preprocessing;
  b.extra = m.extra;
  validate_bundle(b);
  return b;
}

inline void save_bundle(const ExtractionBundle &b,
                        const std::filesystem::path &dir) {
  validate_bundle(b);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create bundle directory " + dir.string());

  nlohmann::json manifest = b.extra;
  manifest["version"] = kManifestVersion;
  manifest["model_id"] = b.model_id;
  manifest["layer_name"] = b.layer_name;
  manifest["class_index"] = b.class_index;
  manifest["preprocessing"] = b.preprocessing;
  auto &tensors = manifest["tensors"] = nlohmann::json::object();
  const std::pair<const char *, const Tensor *> entries[] = {
      {"image", &b.image},
      {"features", &b.features},
      {"gradients", &b.gradients},
      {"class_scores", &b.class_scores}};
  for (const auto &[name, tensor] : entries) {
    const std::string file = std::string(name) + ".npy";
    npy::write(dir / file, *tensor);
    tensors[name] = {{"file", file}, {"shape", tensor->shape()}};
  }
  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + (dir / kManifestName).string());
  out << manifest.dump(2) << '\n';
}

} // namespace camkit
