#pragma once

#include "camkit/cam.hpp"
#include "camkit/errors.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace camkit {

/// Metric columns in report order.
inline constexpr std::array<const char *, 9> kMetricFields = {
    "drop_salience", "increase_salience", "drop_context",
    "increase_context", "pointing_hit", "dice",
    "iou", "insertion_auc", "deletion_auc"};

/// One value per metric; unset when the metric does not apply (no
/// annotation, curves disabled).
struct MetricValues {
  std::optional<double> drop_salience;
  std::optional<double> increase_salience;
  std::optional<double> drop_context;
  std::optional<double> increase_context;
  std::optional<double> pointing_hit;
  std::optional<double> dice;
  std::optional<double> iou;
  std::optional<double> insertion_auc;
  std::optional<double> deletion_auc;

  std::array<std::optional<double> *, 9> fields() {
    return {&drop_salience, &increase_salience, &drop_context, &increase_context,
            &pointing_hit,  &dice,              &iou,          &insertion_auc,
            &deletion_auc};
  }
  std::array<const std::optional<double> *, 9> fields() const {
    return {&drop_salience, &increase_salience, &drop_context, &increase_context,
            &pointing_hit,  &dice,              &iou,          &insertion_auc,
            &deletion_auc};
  }
};

struct ImageRecord {
  std::string image;
  MetricValues values;
  double original_probability = 0.0;
  double salient_probability = 0.0;
  double context_probability = 0.0;
  bool degenerate_saliency = false; // identically-zero map
};

struct ItemFailure {
  std::string image;
  std::string error;
};

struct ReportSettings {
  double tau = 0.5;
  int steps = 100;
  std::string deletion_baseline;
  std::string insertion_baseline;
  double smoothing_sigma = 1.0;
  int smoothing_kernel = 5;
  bool curves = true;
};

struct MetricReport {
  SaliencySource method = SaliencySource::GuidedCam;
  ReportSettings settings;
  std::vector<ImageRecord> records;
  std::vector<ItemFailure> failures;
  /// Arithmetic mean over records that carry each metric; empty when there
  /// are no records. The pointing mean is the hit fraction.
  std::optional<MetricValues> aggregate;
  std::array<std::size_t, 9> aggregate_counts{};

  std::size_t image_count() const { return records.size(); }
  std::size_t failure_count() const { return failures.size(); }
};

/// Sequential reduction in record order.
inline void aggregate_report(MetricReport &report) {
  report.aggregate.reset();
  report.aggregate_counts.fill(0);
  if (report.records.empty())
    return;
  MetricValues mean;
  auto out = mean.fields();
  for (std::size_t f = 0; f < kMetricFields.size(); ++f) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto &r : report.records) {
      if (const auto &v = *r.values.fields()[f]) {
        sum += *v;
        ++n;
      }
    }
    report.aggregate_counts[f] = n;
    if (n)
      *out[f] = sum / double(n);
  }
  report.aggregate = mean;
}

inline std::string format_metric(const std::optional<double> &v) {
  if (!v)
    return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

/// One row per image plus one aggregate row per report.
inline void write_csv(std::ostream &os, const std::vector<MetricReport> &reports) {
  os << "method,image";
  for (const char *f : kMetricFields)
    os << ',' << f;
  os << '\n';
  auto row = [&os](std::string_view method, const std::string &image,
                   const MetricValues &v) {
    os << method << ',' << image;
    for (const auto *field : v.fields())
      os << ',' << format_metric(*field);
    os << '\n';
  };
  for (const auto &r : reports) {
    for (const auto &rec : r.records)
      row(to_string(r.method), rec.image, rec.values);
    if (r.aggregate)
      row(to_string(r.method), "aggregate", *r.aggregate);
  }
}

inline nlohmann::json metric_json(const MetricValues &v) {
  nlohmann::json j = nlohmann::json::object();
  const auto fields = v.fields();
  for (std::size_t f = 0; f < kMetricFields.size(); ++f)
    j[kMetricFields[f]] = *fields[f] ? nlohmann::json(**fields[f]) : nlohmann::json();
  return j;
}

inline nlohmann::json to_json(const MetricReport &r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["settings"] = {{"tau", r.settings.tau},
                   {"steps", r.settings.steps},
                   {"curves", r.settings.curves},
                   {"deletion_baseline", r.settings.deletion_baseline},
                   {"insertion_baseline", r.settings.insertion_baseline},
                   {"smoothing_sigma", r.settings.smoothing_sigma},
                   {"smoothing_kernel", r.settings.smoothing_kernel},
                   {"zone_masking", "soft"},
                   {"increase_definition", "count fraction of images"}};
  j["counts"] = {{"images", r.image_count()}, {"failed", r.failure_count()}};
  auto &records = j["records"] = nlohmann::json::array();
  for (const auto &rec : r.records) {
    nlohmann::json e = metric_json(rec.values);
    e["image"] = rec.image;
    e["original_probability"] = rec.original_probability;
    e["salient_probability"] = rec.salient_probability;
    e["context_probability"] = rec.context_probability;
    e["degenerate_saliency"] = rec.degenerate_saliency;
    records.push_back(std::move(e));
  }
  if (r.aggregate) {
    j["aggregate"] = metric_json(*r.aggregate);
    auto &counts = j["aggregate_counts"] = nlohmann::json::object();
    for (std::size_t f = 0; f < kMetricFields.size(); ++f)
      counts[kMetricFields[f]] = r.aggregate_counts[f];
  } else {
    j["aggregate"] = nullptr;
  }
  auto &failures = j["failures"] = nlohmann::json::array();
  for (const auto &f : r.failures)
    failures.push_back({{"image", f.image}, {"error", f.error}});
  return j;
}

inline nlohmann::json to_json(const std::vector<MetricReport> &reports) {
  nlohmann::json j;
  auto &arr = j["reports"] = nlohmann::json::array();
  for (const auto &r : reports)
    arr.push_back(to_json(r));
  return j;
}

/// Side-by-side aggregate table: one row per metric, one column per method
/// and a delta column (last method minus first).
inline void write_comparison_csv(std::ostream &os, const std::vector<MetricReport> &reports) {
  os << "metric";
  for (const auto &r : reports)
    os << ',' << to_string(r.method);
  if (reports.size() >= 2)
    os << ",delta_" << to_string(reports.back().method) << "_minus_"
       << to_string(reports.front().method);
  os << '\n';
  for (std::size_t f = 0; f < kMetricFields.size(); ++f) {
    os << kMetricFields[f];
    std::vector<std::optional<double>> vals;
    for (const auto &r : reports) {
      std::optional<double> v;
      if (r.aggregate)
        v = *r.aggregate->fields()[f];
      vals.push_back(v);
      os << ',' << format_metric(v);
    }
    if (reports.size() >= 2) {
      std::optional<double> delta;
      if (vals.front() && vals.back())
        delta = *vals.back() - *vals.front();
      os << ',' << format_metric(delta);
    }
    os << '\n';
  }
}

} // namespace camkit
