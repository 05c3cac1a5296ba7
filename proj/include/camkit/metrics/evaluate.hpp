#pragma once

#include "camkit/cam.hpp"
#include "camkit/datasets/collection.hpp"
#include "camkit/errors.hpp"
#include "camkit/inference/scorer.hpp"
#include "camkit/io/bundle.hpp"
#include "camkit/metrics/curves.hpp"
#include "camkit/metrics/report.hpp"
#include "camkit/metrics/segmentation.hpp"
#include "camkit/metrics/zones.hpp"
#include "camkit/postprocess.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace camkit {

struct EvaluationConfig {
  /// Smoothing settings; the target size is taken from each image.
  PostprocessConfig postprocess;
  double tau = 0.5;
  bool compute_curves = true;
  CurveConfig curves;
  std::size_t workers = 1;
};

inline std::string describe(const Baseline &b) {
  if (b.kind == Baseline::Kind::Zero)
    return "zero";
  char buf[48];
  std::snprintf(buf, sizeof buf, "blur(sigma=%g)", b.blur_sigma);
  return buf;
}

inline SaliencyMap saliency_for(const ExtractionBundle &bundle, SaliencySource method,
                                PostprocessConfig cfg) {
  cfg.target_height = bundle.image_height();
  cfg.target_width = bundle.image_width();
  return postprocess(compute_raw(method, bundle.features, bundle.gradients), cfg);
}

/// Every applicable metric for one bundle. Zone drop and increase share a
/// single masked forward pass per zone.
inline ImageRecord evaluate_bundle(const ExtractionBundle &bundle, const std::string &name,
                                   const Annotation *pointing_gt,
                                   const Annotation *region_gt, SaliencySource method,
                                   const EvaluationConfig &cfg, Scorer &scorer) {
  const auto cls = static_cast<std::size_t>(bundle.class_index);
  const SaliencyMap sal = saliency_for(bundle, method, cfg.postprocess);

  ImageRecord rec;
  rec.image = name;
  rec.original_probability = scorer.score(bundle.image).probability(cls);
  rec.salient_probability =
      scorer.score(soft_mask(bundle.image, sal, Zone::Salient)).probability(cls);
  rec.context_probability =
      scorer.score(soft_mask(bundle.image, sal, Zone::Context)).probability(cls);
  auto &v = rec.values;
  v.drop_salience = drop_fraction(rec.original_probability, rec.salient_probability);
  v.increase_salience = increase_indicator(rec.original_probability, rec.salient_probability);
  v.drop_context = drop_fraction(rec.original_probability, rec.context_probability);
  v.increase_context = increase_indicator(rec.original_probability, rec.context_probability);

  if (pointing_gt) {
    const auto p = pointing_game(sal, *pointing_gt, bundle.class_index);
    v.pointing_hit = p.hit ? 1.0 : 0.0;
    rec.degenerate_saliency = p.degenerate;
  } else {
    rec.degenerate_saliency = std::all_of(sal.values.data().begin(), sal.values.data().end(),
                                          [](float s) { return s == 0.0f; });
  }
  if (region_gt) {
    const BinaryMask pred = binarize(sal, cfg.tau);
    const BinaryMask gt = region_gt->region(bundle.class_index, sal.height(), sal.width());
    v.dice = dice(pred, gt);
    v.iou = iou(pred, gt);
  }
  if (cfg.compute_curves) {
    v.insertion_auc = insertion_deletion(bundle.image, sal, scorer, bundle.class_index,
                                         CurveMode::Insertion, cfg.curves)
                          .auc;
    v.deletion_auc = insertion_deletion(bundle.image, sal, scorer, bundle.class_index,
                                        CurveMode::Deletion, cfg.curves)
                         .auc;
  }
  return rec;
}

/// Evaluates every item with `workers` threads, each owning a scorer built
/// by `make_scorer`. Per-item failures are recorded and excluded from the
/// aggregate. Results do not depend on scheduling: records keep item order
/// and the aggregate is a sequential reduction.
inline MetricReport evaluate_collection(const std::vector<EvalItem> &items,
                                        SaliencySource method, const EvaluationConfig &cfg,
                                        const ScorerFactory &make_scorer) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0))
    throw ConfigError("tau must lie in (0, 1)");
  if (cfg.compute_curves && cfg.curves.steps < 2)
    throw ConfigError("curve steps must be >= 2");

  using Outcome = std::variant<std::monostate, ImageRecord, ItemFailure>;
  std::vector<Outcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    std::unique_ptr<Scorer> scorer;
    try {
      scorer = make_scorer();
    } catch (...) {
      std::lock_guard lock(fatal_mutex);
      if (!fatal)
        fatal = std::current_exception();
      return;
    }
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const auto &item = items[i];
      try {
        const ExtractionBundle bundle = load_bundle(item.bundle_path);
        if (bundle.class_index != item.target_class)
          throw ConfigError("bundle class index changed since the collection scan");
        outcomes[i] = evaluate_bundle(bundle, item.stem, item.pointing_annotation(),
                                      item.region_annotation(), method, cfg, *scorer);
      } catch (const std::exception &e) {
        outcomes[i] = ItemFailure{item.stem, e.what()};
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(cfg.workers, std::max<std::size_t>(items.size(), 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w)
      pool.emplace_back(worker);
  }
  if (fatal)
    std::rethrow_exception(fatal);

  MetricReport report;
  report.method = method;
  report.settings.tau = cfg.tau;
  report.settings.steps = cfg.curves.steps;
  report.settings.curves = cfg.compute_curves;
  report.settings.deletion_baseline = describe(cfg.curves.deletion);
  report.settings.insertion_baseline = describe(cfg.curves.insertion);
  report.settings.smoothing_sigma = cfg.postprocess.smoothing_sigma;
  report.settings.smoothing_kernel = cfg.postprocess.smoothing_kernel;
  for (auto &o : outcomes) {
    if (auto *rec = std::get_if<ImageRecord>(&o))
      report.records.push_back(std::move(*rec));
    else if (auto *fail = std::get_if<ItemFailure>(&o))
      report.failures.push_back(std::move(*fail));
  }
  aggregate_report(report);
  return report;
}

} // namespace camkit
