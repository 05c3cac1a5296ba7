#pragma once

#include "camkit/errors.hpp"
#include "camkit/inference/onnx/model.hpp"
#include "camkit/inference/onnx/runtime.hpp"
#include "camkit/inference/scorer.hpp"
#include "camkit/inference/stub_scorer.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace camkit {

inline constexpr const char *kGraphInputName = "input";
inline constexpr const char *kGraphOutputName = "logits";
inline constexpr std::int64_t kMinOpset = 11;

/// Scorer backed by an exported classifier graph with one input named
/// "input" (N x 3 x H x W) and one output named "logits" (N x C).
class OnnxScorer final : public Scorer {
public:
  OnnxScorer(onnx::Model model, InputSpec spec)
      : Scorer(std::move(spec)), interpreter_(validate(model, spec_)) {
    num_classes_ = static_cast<std::size_t>(
        *find(interpreter_.model().graph.outputs, kGraphOutputName)->dims.back().value);
  }

  std::size_t num_classes() const override { return num_classes_; }

protected:
  std::vector<float> forward(const Tensor &image) override {
    onnx::Value input;
    input.shape = {1, static_cast<std::int64_t>(image.dim(0)),
                   static_cast<std::int64_t>(image.dim(1)),
                   static_cast<std::int64_t>(image.dim(2))};
    input.floats = image.values();
    onnx::Value out = interpreter_.run(kGraphInputName, input, kGraphOutputName);
    if (out.integer || out.count() != num_classes_)
      throw ScorerError("graph output 'logits' has shape " +
                        onnx::ops::shape_str(out.shape) + ", expected " +
                        std::to_string(num_classes_) + " float logits");
    return out.floats;
  }

private:
  static const onnx::ValueInfo *find(const std::vector<onnx::ValueInfo> &infos,
                                     const std::string &name) {
    for (const auto &vi : infos)
      if (vi.name == name)
        return &vi;
    return nullptr;
  }

  /// Checks the graph's declared interface against the requested spec and
  /// fills unpinned spec dimensions from the graph.
  static onnx::Model validate(onnx::Model &model, InputSpec &spec) {
    if (model.default_opset() < kMinOpset)
      throw ModelLoadError("model opset " + std::to_string(model.default_opset()) +
                           " is below the required " + std::to_string(kMinOpset));
    const auto &g = model.graph;
    std::vector<const onnx::ValueInfo *> runtime_inputs;
    for (const auto &vi : g.inputs)
      if (!g.initializers.count(vi.name))
        runtime_inputs.push_back(&vi);
    if (runtime_inputs.size() != 1 || runtime_inputs[0]->name != kGraphInputName)
      throw ModelLoadError("graph must have exactly one runtime input named 'input'");
    const auto *out = find(g.outputs, kGraphOutputName);
    if (g.outputs.size() != 1 || !out)
      throw ModelLoadError("graph must have exactly one output named 'logits'");

    const auto &in_dims = runtime_inputs[0]->dims;
    if (in_dims.size() != 4)
      throw ModelLoadError("graph input must be N x C x H x W");
    auto pinned = [](const onnx::Dimension &d, std::size_t want, const char *what) {
      if (d.value && want && static_cast<std::size_t>(*d.value) != want)
        throw ModelLoadError(std::string("graph input ") + what + " is " +
                             std::to_string(*d.value) + " but the input spec requires " +
                             std::to_string(want));
    };
    pinned(in_dims[1], spec.channels, "channel count");
    pinned(in_dims[2], spec.height, "height");
    pinned(in_dims[3], spec.width, "width");
    if (!spec.height && in_dims[2].value)
      spec.height = static_cast<std::size_t>(*in_dims[2].value);
    if (!spec.width && in_dims[3].value)
      spec.width = static_cast<std::size_t>(*in_dims[3].value);
    if (out->dims.empty() || !out->dims.back().value || *out->dims.back().value < 1)
      throw ModelLoadError("graph output 'logits' must declare a fixed class count");
    return std::move(model);
  }

  onnx::Interpreter interpreter_;
  std::size_t num_classes_ = 0;
};

inline std::unique_ptr<OnnxScorer> load_onnx_scorer(const std::filesystem::path &path,
                                                    InputSpec spec) {
  return std::make_unique<OnnxScorer>(onnx::load_model(path), std::move(spec));
}

/// Chooses the backend by extension: ".onnx" graph or ".json" stub table.
inline std::unique_ptr<Scorer> load_scorer(const std::filesystem::path &path,
                                           InputSpec spec) {
  if (!std::filesystem::exists(path))
    throw ModelLoadError("model not found: " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".onnx")
    return load_onnx_scorer(path, std::move(spec));
  if (ext == ".json")
    return load_stub_scorer(path, std::move(spec));
  throw ModelLoadError("unrecognised model format '" + ext + "' for " + path.string());
}

} // namespace camkit
