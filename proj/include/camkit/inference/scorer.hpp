#pragma once

#include "camkit/errors.hpp"
#include "camkit/io/bundle.hpp"
#include "camkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace camkit {

/// Expected network input. A zero height/width accepts any spatial size.
struct InputSpec {
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;
  Preprocessing preprocessing;
};

/// Numerically stable softmax in double precision.
inline std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty())
    return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(double(logits[i]) - mx);
    sum += p[i];
  }
  for (auto &v : p)
    v /= sum;
  return p;
}

struct ClassScore {
  std::vector<float> logits;
  std::vector<double> probabilities;

  static ClassScore from_logits(std::vector<float> logits) {
    ClassScore s;
    s.probabilities = softmax(logits);
    s.logits = std::move(logits);
    return s;
  }

  double probability(std::size_t cls) const { return probabilities.at(cls); }
};

/// Forward-only model: preprocessed 3 x H x W image in, class logits out.
/// Instances need not be thread-safe; use one per worker.
class Scorer {
public:
  virtual ~Scorer() = default;

  const InputSpec &input_spec() const { return spec_; }
  virtual std::size_t num_classes() const = 0;

  ClassScore score(const Tensor &image) {
    check_input(image);
    auto logits = forward(image);
    if (logits.size() != num_classes())
      throw ScorerError("scorer produced " + std::to_string(logits.size()) +
                        " logits, expected " + std::to_string(num_classes()));
    return ClassScore::from_logits(std::move(logits));
  }

protected:
  explicit Scorer(InputSpec spec) : spec_(std::move(spec)) {}

  virtual std::vector<float> forward(const Tensor &image) = 0;

  void check_input(const Tensor &image) const {
    const bool ok = image.rank() == 3 && image.dim(0) == spec_.channels &&
                    (spec_.height == 0 || image.dim(1) == spec_.height) &&
                    (spec_.width == 0 || image.dim(2) == spec_.width);
    if (!ok)
      throw ShapeError("scorer expects " + std::to_string(spec_.channels) + "x" +
                       (spec_.height ? std::to_string(spec_.height) : "H") + "x" +
                       (spec_.width ? std::to_string(spec_.width) : "W") +
                       " input, got " + shape_string(image.shape()));
  }

  InputSpec spec_;
};

using ScorerFactory = std::function<std::unique_ptr<Scorer>()>;

} // namespace camkit
