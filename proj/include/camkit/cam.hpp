#pragma once

// Class activation map construction from a layer's feature stack M
// (K x h x w) and the gradient stack dY/dM of the target-class logit.
//
//   plain aggregate   A = sum_k M_k
//   channel weight    lambda_k = mean(grad_k)
//   GradCAM           S = ReLU(sum_k lambda_k * M_k)
//   guidance map      G = ReLU(sum_k grad_k (.) M_k)
//   guided CAM        S = ReLU(sum_k lambda_k * (G (.) M_k))
//
// ReLU is applied once, after the channel sum. G is 2-D and is broadcast
// over every channel.

#include "camkit/errors.hpp"
#include "camkit/tensor.hpp"

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace camkit {

enum class SaliencySource { PlainAggregate, GradCam, GuidedCam };

inline std::string_view to_string(SaliencySource s) {
  switch (s) {
  case SaliencySource::PlainAggregate:
    return "aggregate";
  case SaliencySource::GradCam:
    return "gradcam";
  case SaliencySource::GuidedCam:
    return "guided";
  }
  return "unknown";
}

template <std::floating_point T> struct BasicChannelWeights {
  std::vector<T> values;
};

template <std::floating_point T> struct BasicGuidanceMap {
  BasicTensor<T> values; // h x w, >= 0
};

/// Feature-resolution map before post-processing. Non-negative except for
/// the PlainAggregate source, which is left unclamped.
template <std::floating_point T> struct BasicRawSaliency {
  BasicTensor<T> values;
  SaliencySource source = SaliencySource::GuidedCam;
};

using ChannelWeights = BasicChannelWeights<float>;
using GuidanceMap = BasicGuidanceMap<float>;
using RawSaliency = BasicRawSaliency<float>;

namespace detail {

template <std::floating_point T>
void require_stack(const BasicTensor<T> &stack, const char *what) {
  if (stack.rank() != 3)
    throw ShapeError(std::string(what) + " must be K x h x w, got " +
                     shape_string(stack.shape()));
  if (stack.empty())
    throw ShapeError(std::string(what) + " is empty " +
                     shape_string(stack.shape()));
}

template <std::floating_point T>
void require_same_shape(const BasicTensor<T> &features,
                        const BasicTensor<T> &gradients) {
  require_stack(features, "feature stack");
  require_stack(gradients, "gradient stack");
  if (features.shape() != gradients.shape())
    throw ShapeError("feature stack " + shape_string(features.shape()) +
                     " and gradient stack " + shape_string(gradients.shape()) +
                     " differ");
}

template <std::floating_point T>
BasicTensor<T> map_like(const BasicTensor<T> &stack) {
  return BasicTensor<T>(Shape{stack.dim(1), stack.dim(2)});
}

template <std::floating_point T> T relu(double v) {
  return v > 0.0 ? static_cast<T>(v) : T{0};
}

} // namespace detail

template <std::floating_point T>
BasicRawSaliency<T> aggregate_features(const BasicTensor<T> &features) {
  detail::require_stack(features, "feature stack");
  const std::size_t plane = features.dim(1) * features.dim(2);
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < features.dim(0); ++k) {
    const auto channel = features.slice(k);
    for (std::size_t p = 0; p < plane; ++p)
      acc[p] += channel[p];
  }
  auto out = detail::map_like(features);
  std::transform(acc.begin(), acc.end(), out.data().begin(),
                 [](double v) { return static_cast<T>(v); });
  return {std::move(out), SaliencySource::PlainAggregate};
}

template <std::floating_point T>
BasicChannelWeights<T> channel_weights(const BasicTensor<T> &gradients) {
  detail::require_stack(gradients, "gradient stack");
  const std::size_t plane = gradients.dim(1) * gradients.dim(2);
  BasicChannelWeights<T> w;
  w.values.reserve(gradients.dim(0));
  for (std::size_t k = 0; k < gradients.dim(0); ++k) {
    double sum = 0.0;
    for (T g : gradients.slice(k))
      sum += g;
    w.values.push_back(static_cast<T>(sum / static_cast<double>(plane)));
  }
  return w;
}

template <std::floating_point T>
BasicRawSaliency<T> gradcam(const BasicTensor<T> &features,
                            const BasicChannelWeights<T> &weights) {
  detail::require_stack(features, "feature stack");
  if (weights.values.size() != features.dim(0))
    throw ShapeError(std::to_string(weights.values.size()) +
                     " channel weights for " +
                     std::to_string(features.dim(0)) + " feature channels");
  const std::size_t plane = features.dim(1) * features.dim(2);
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < features.dim(0); ++k) {
    const double lambda = weights.values[k];
    const auto channel = features.slice(k);
    for (std::size_t p = 0; p < plane; ++p)
      acc[p] += lambda * channel[p];
  }
  auto out = detail::map_like(features);
  std::transform(acc.begin(), acc.end(), out.data().begin(),
                 detail::relu<T>);
  return {std::move(out), SaliencySource::GradCam};
}

template <std::floating_point T>
BasicGuidanceMap<T> guidance_map(const BasicTensor<T> &features,
                                 const BasicTensor<T> &gradients) {
  detail::require_same_shape(features, gradients);
  const std::size_t plane = features.dim(1) * features.dim(2);
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < features.dim(0); ++k) {
    const auto m = features.slice(k);
    const auto g = gradients.slice(k);
    for (std::size_t p = 0; p < plane; ++p)
      acc[p] += static_cast<double>(g[p]) * m[p];
  }
  auto out = detail::map_like(features);
  std::transform(acc.begin(), acc.end(), out.data().begin(),
                 detail::relu<T>);
  return {std::move(out)};
}

/// Guided saliency given precomputed weights and guidance; exposed so
/// callers can inspect or substitute the intermediate maps.
template <std::floating_point T>
BasicRawSaliency<T> guided_cam(const BasicTensor<T> &features,
                               const BasicChannelWeights<T> &weights,
                               const BasicGuidanceMap<T> &guidance) {
  detail::require_stack(features, "feature stack");
  if (weights.values.size() != features.dim(0))
    throw ShapeError(std::to_string(weights.values.size()) +
                     " channel weights for " +
                     std::to_string(features.dim(0)) + " feature channels");
  if (guidance.values.shape() != Shape{features.dim(1), features.dim(2)})
    throw ShapeError("guidance map " + shape_string(guidance.values.shape()) +
                     " does not match feature plane of " +
                     shape_string(features.shape()));
  const std::size_t plane = features.dim(1) * features.dim(2);
  const auto g = guidance.values.data();
  std::vector<double> acc(plane, 0.0);
  for (std::size_t k = 0; k < features.dim(0); ++k) {
    const double lambda = weights.values[k];
    const auto m = features.slice(k);
    for (std::size_t p = 0; p < plane; ++p)
      acc[p] += lambda * (static_cast<double>(g[p]) * m[p]);
  }
  auto out = detail::map_like(features);
  std::transform(acc.begin(), acc.end(), out.data().begin(),
                 detail::relu<T>);
  return {std::move(out), SaliencySource::GuidedCam};
}

template <std::floating_point T>
BasicRawSaliency<T> guided_cam(const BasicTensor<T> &features,
                               const BasicTensor<T> &gradients) {
  detail::require_same_shape(features, gradients);
  return guided_cam(features, channel_weights(gradients),
                    guidance_map(features, gradients));
}

/// Raw map for any source from a feature/gradient pair.
template <std::floating_point T>
BasicRawSaliency<T> compute_raw(SaliencySource source,
                                const BasicTensor<T> &features,
                                const BasicTensor<T> &gradients) {
  switch (source) {
  case SaliencySource::PlainAggregate:
    return aggregate_features(features);
  case SaliencySource::GradCam:
    detail::require_same_shape(features, gradients);
    return gradcam(features, channel_weights(gradients));
  case SaliencySource::GuidedCam:
    return guided_cam(features, gradients);
  }
  throw ConfigError("unknown saliency source");
}

} // namespace camkit
