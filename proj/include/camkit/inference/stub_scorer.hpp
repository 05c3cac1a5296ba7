#pragma once

// Lookup-table scorer for hermetic tests. The table is keyed by
// image_hash() of the exact input tensor; images not in the table fall back
// to the "default" logits when present.
//
//   {
//     "input_shape": [3, H, W],          optional
//     "default": [l0, l1, ...],          optional
//     "table": { "<16 hex digits>": [l0, l1, ...], ... }
//   }

#include "camkit/errors.hpp"
#include "camkit/inference/scorer.hpp"
#include "camkit/io/bundle.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace camkit {

/// FNV-1a (64-bit) over the shape (as little-endian uint64) followed by the
/// little-endian float32 bit patterns, rendered as 16 lowercase hex digits.
inline std::string image_hash(const Tensor &image) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t word, int bytes) {
    for (int b = 0; b < bytes; ++b) {
      h ^= (word >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  };
  for (auto d : image.shape())
    mix(static_cast<std::uint64_t>(d), 8);
  for (float v : image.data())
    mix(std::bit_cast<std::uint32_t>(v), 4);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class StubScorer final : public Scorer {
public:
  StubScorer(InputSpec spec, std::map<std::string, std::vector<float>> table,
             std::optional<std::vector<float>> fallback)
      : Scorer(std::move(spec)), table_(std::move(table)),
        fallback_(std::move(fallback)) {
    std::optional<std::size_t> classes;
    auto check = [&](const std::vector<float> &v) {
      if (v.empty())
        throw ModelLoadError("stub scorer: empty logits vector");
      if (classes && *classes != v.size())
        throw ModelLoadError("stub scorer: logits vectors differ in length");
      classes = v.size();
    };
    if (fallback_)
      check(*fallback_);
    for (const auto &[key, v] : table_)
      check(v);
    if (!classes)
      throw ModelLoadError("stub scorer: no logits defined");
    num_classes_ = *classes;
  }

  /// Every image scores the same.
  static StubScorer constant(std::vector<float> logits, InputSpec spec = {}) {
    return StubScorer(std::move(spec), {}, std::move(logits));
  }

  std::size_t num_classes() const override { return num_classes_; }

  bool contains(const Tensor &image) const {
    return table_.count(image_hash(image)) != 0;
  }

protected:
  std::vector<float> forward(const Tensor &image) override {
    const auto key = image_hash(image);
    if (auto it = table_.find(key); it != table_.end())
      return it->second;
    if (fallback_)
      return *fallback_;
    throw ScorerError("stub scorer has no entry for image " + key);
  }

private:
  std::map<std::string, std::vector<float>> table_;
  std::optional<std::vector<float>> fallback_;
  std::size_t num_classes_ = 0;
};

/// Parses a stub file. A declared input_shape must agree with `spec`
/// wherever `spec` pins a dimension.
inline std::unique_ptr<StubScorer>
load_stub_scorer(const std::filesystem::path &path, InputSpec spec = {}) {
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const Error &e) {
    throw ModelLoadError(std::string("stub scorer: ") + e.what());
  }
  try {
    if (j.contains("input_shape")) {
      const auto shape = j.at("input_shape").get<std::vector<std::size_t>>();
      if (shape.size() != 3)
        throw ModelLoadError("stub scorer: input_shape must be [C, H, W]");
      const bool mismatch =
          shape[0] != spec.channels ||
          (spec.height && shape[1] != spec.height) ||
          (spec.width && shape[2] != spec.width);
      if (mismatch)
        throw ModelLoadError("stub scorer input shape does not match the "
                             "requested input spec");
      spec.height = shape[1];
      spec.width = shape[2];
    }
    std::optional<std::vector<float>> fallback;
    if (j.contains("default"))
      fallback = j.at("default").get<std::vector<float>>();
    std::map<std::string, std::vector<float>> table;
    if (j.contains("table"))
      table = j.at("table").get<std::map<std::string, std::vector<float>>>();
    return std::make_unique<StubScorer>(std::move(spec), std::move(table),
                                        std::move(fallback));
  } catch (const nlohmann::json::exception &e) {
    throw ModelLoadError(path.string() + ": " + e.what());
  }
}

inline void save_stub_scorer(const std::filesystem::path &path,
                             const std::map<std::string, std::vector<float>> &table,
                             const std::optional<std::vector<float>> &fallback,
                             const std::optional<Shape> &input_shape = {}) {
  nlohmann::json j;
  if (input_shape)
    j["input_shape"] = *input_shape;
  if (fallback)
    j["default"] = *fallback;
  j["table"] = table;
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

} // namespace camkit
