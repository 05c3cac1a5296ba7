// camkit command-line front end.
//
//   camkit explain  <bundle> [--method guided|gradcam] [--out DIR] [--alpha A]
//   camkit evaluate <config.json> [--method M]... [--tau T] [--steps N]
//                   [--seed S] [--subsample N] [--workers N] [--out DIR]
//   camkit curves   <bundle> --scorer MODEL [--method M] [--steps N] [--out DIR]
//
// Exit status: 0 success, 2 usage/config/input error, 1 runtime failure.

#include "camkit/camkit.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace camkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

SaliencySource parse_method(const std::string &name) {
  if (name == "gradcam")
    return SaliencySource::GradCam;
  if (name == "guided")
    return SaliencySource::GuidedCam;
  throw ConfigError("unknown method '" + name + "' (expected gradcam or guided)");
}

std::string stem_of(const fs::path &bundle) {
  std::string name = fs::path(bundle).lexically_normal().filename().string();
  if (name.empty())
    name = fs::path(bundle).lexically_normal().parent_path().filename().string();
  const std::string suffix = kBundleSuffix;
  if (name.size() > suffix.size() &&
      name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
    name.resize(name.size() - suffix.size());
  return name;
}

/// `<stem>` for guided output, `<stem>.gradcam` otherwise.
std::string output_prefix(const std::string &stem, SaliencySource method) {
  return method == SaliencySource::GuidedCam ? stem : stem + ".gradcam";
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

void write_file(const fs::path &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << content))
    throw IoError("cannot write " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct SmoothingOptions {
  double sigma = 1.0;
  int kernel = 5;
};

PostprocessConfig postprocess_config(const SmoothingOptions &s) {
  PostprocessConfig cfg;
  cfg.smoothing_sigma = s.sigma;
  cfg.smoothing_kernel = s.kernel;
  return cfg;
}

// ---------------------------------------------------------------- explain

struct ExplainArgs {
  std::string bundle;
  std::string method = "guided";
  std::string out = ".";
  double alpha = 0.5;
  SmoothingOptions smoothing;
};

int cmd_explain(const ExplainArgs &a) {
  const auto method = parse_method(a.method);
  if (!(a.alpha >= 0.0 && a.alpha <= 1.0))
    throw ConfigError("--alpha must lie in [0, 1]");
  const ExtractionBundle bundle = load_bundle(a.bundle);
  const SaliencyMap sal = saliency_for(bundle, method, postprocess_config(a.smoothing));

  const fs::path out = a.out;
  ensure_dir(out);
  const std::string prefix = output_prefix(stem_of(a.bundle), method);
  npy::write(out / (prefix + ".saliency.npy"), sal.values);
  const auto image = render::overlay(render::denormalize(bundle.image, bundle.preprocessing),
                                     sal, a.alpha);
  char alpha[16];
  std::snprintf(alpha, sizeof alpha, "%g", a.alpha);
  png::write_rgb(out / (prefix + ".overlay.png"), image,
                 {{"Software", "camkit"},
                  {"colormap", render::kColormapName},
                  {"alpha", alpha},
                  {"method", std::string(to_string(method))},
                  {"class_index", std::to_string(bundle.class_index)}});
  std::cout << (out / (prefix + ".saliency.npy")).string() << '\n'
            << (out / (prefix + ".overlay.png")).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string config;
  std::vector<std::string> methods;
  std::optional<double> tau;
  std::optional<int> steps;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subsample;
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
};

/// Every setting of an evaluation run; defaults live here.
struct RunConfig {
  std::vector<SaliencySource> methods{SaliencySource::GradCam, SaliencySource::GuidedCam};
  fs::path collection;
  fs::path scorer;
  fs::path output;
  std::uint64_t seed = 0;
  std::optional<std::size_t> subsample;
  EvaluationConfig eval;
};

void reject_unknown_keys(const nlohmann::json &j, const std::set<std::string> &known,
                         const std::string &where) {
  for (const auto &[key, value] : j.items())
    if (!known.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
}

Baseline parse_baseline(const std::string &kind, double sigma) {
  if (kind == "zero")
    return {Baseline::Kind::Zero, 0.0};
  if (kind == "blur")
    return {Baseline::Kind::Blur, sigma};
  throw ConfigError("baseline must be 'zero' or 'blur', got '" + kind + "'");
}

RunConfig load_run_config(const EvaluateArgs &a) {
  const fs::path path = a.config;
  nlohmann::json j;
  try {
    j = read_json_file(path);
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object())
    throw ConfigError(path.string() + ": expected a JSON object");
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string &p) {
    const fs::path q = p;
    return q.is_absolute() ? q : base / q;
  };

  RunConfig rc;
  try {
    reject_unknown_keys(j, {"methods", "collection", "scorer", "output", "seed", "subsample",
                            "workers", "postprocess", "metrics"},
                        path.string());
    if (j.contains("methods")) {
      rc.methods.clear();
      const auto &m = j.at("methods");
      if (m.is_string())
        rc.methods.push_back(parse_method(m.get<std::string>()));
      else
        for (const auto &name : m.get<std::vector<std::string>>())
          rc.methods.push_back(parse_method(name));
    }
    rc.collection = resolve(j.at("collection").get<std::string>());
    rc.scorer = resolve(j.at("scorer").get<std::string>());
    if (j.contains("output"))
      rc.output = resolve(j.at("output").get<std::string>());
    rc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("subsample") && !j.at("subsample").is_null())
      rc.subsample = j.at("subsample").get<std::size_t>();
    rc.eval.workers = j.value("workers", std::size_t{1});

    if (j.contains("postprocess")) {
      const auto &p = j.at("postprocess");
      reject_unknown_keys(p, {"smoothing_sigma", "smoothing_kernel"}, "postprocess");
      rc.eval.postprocess.smoothing_sigma = p.value("smoothing_sigma", 1.0);
      rc.eval.postprocess.smoothing_kernel = p.value("smoothing_kernel", 5);
    }
    if (j.contains("metrics")) {
      const auto &m = j.at("metrics");
      reject_unknown_keys(m, {"tau", "steps", "curves", "deletion_baseline",
                              "deletion_blur_sigma", "insertion_baseline",
                              "insertion_blur_sigma"},
                          "metrics");
      rc.eval.tau = m.value("tau", 0.5);
      rc.eval.curves.steps = m.value("steps", 100);
      rc.eval.compute_curves = m.value("curves", true);
      rc.eval.curves.deletion = parse_baseline(m.value("deletion_baseline", "zero"),
                                               m.value("deletion_blur_sigma", 10.0));
      rc.eval.curves.insertion = parse_baseline(m.value("insertion_baseline", "blur"),
                                                m.value("insertion_blur_sigma", 10.0));
    }
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path.string() + ": " + e.what());
  }

  if (!a.methods.empty()) {
    rc.methods.clear();
    for (const auto &m : a.methods)
      rc.methods.push_back(parse_method(m));
  }
  if (a.tau)
    rc.eval.tau = *a.tau;
  if (a.steps)
    rc.eval.curves.steps = *a.steps;
  if (a.seed)
    rc.seed = *a.seed;
  if (a.subsample)
    rc.subsample = *a.subsample;
  if (a.workers)
    rc.eval.workers = *a.workers;
  if (a.out)
    rc.output = *a.out;

  if (rc.methods.empty())
    throw ConfigError("at least one method must be selected");
  for (std::size_t i = 0; i < rc.methods.size(); ++i)
    for (std::size_t k = 0; k < i; ++k)
      if (rc.methods[i] == rc.methods[k])
        throw ConfigError("method '" + std::string(to_string(rc.methods[i])) +
                          "' listed twice");
  if (rc.output.empty())
    throw ConfigError("no output directory: set \"output\" in the config or pass --out");
  if (!(rc.eval.tau > 0.0 && rc.eval.tau < 1.0))
    throw ConfigError("tau must lie in (0, 1)");
  if (rc.eval.curves.steps < 2)
    throw ConfigError("steps must be >= 2");
  if (rc.eval.workers < 1)
    throw ConfigError("workers must be >= 1");
  if (rc.subsample && *rc.subsample < 1)
    throw ConfigError("subsample must be >= 1");
  validate(PostprocessConfig{rc.eval.postprocess.smoothing_sigma,
                             rc.eval.postprocess.smoothing_kernel, 1, 1,
                             Interpolation::Bilinear},
           1, 1);
  return rc;
}

int cmd_evaluate(const EvaluateArgs &a) {
  const RunConfig rc = load_run_config(a);

  ScanOptions scan_opts;
  scan_opts.seed = rc.seed;
  scan_opts.subsample = rc.subsample;
  const ScanResult scan = scan_collection(rc.collection, scan_opts);
  for (const auto &w : scan.warnings)
    std::cerr << "warning: " << w.stem << ": " << w.message << '\n';

  // Fail fast on an unusable scorer before spawning workers.
  const fs::path scorer_path = rc.scorer;
  load_scorer(scorer_path, InputSpec{});
  const ScorerFactory factory = [scorer_path] { return load_scorer(scorer_path, InputSpec{}); };

  std::vector<MetricReport> reports;
  for (const auto method : rc.methods) {
    reports.push_back(evaluate_collection(scan.items, method, rc.eval, factory));
    for (const auto &f : reports.back().failures)
      std::cerr << "error: " << to_string(method) << ": " << f.image << ": " << f.error << '\n';
  }

  ensure_dir(rc.output);
  std::ostringstream csv;
  write_csv(csv, reports);
  write_file(rc.output / "report.csv", csv.str());

  nlohmann::json j = to_json(reports);
  j["collection"] = {{"items", scan.items.size()},
                     {"seed", rc.seed},
                     {"subsample", rc.subsample ? nlohmann::json(*rc.subsample) : nlohmann::json()}};
  auto &warnings = j["collection"]["warnings"] = nlohmann::json::array();
  for (const auto &w : scan.warnings)
    warnings.push_back({{"image", w.stem}, {"message", w.message}});
  write_file(rc.output / "report.json", j.dump(2) + "\n");

  if (reports.size() >= 2) {
    std::ostringstream cmp;
    write_comparison_csv(cmp, reports);
    write_file(rc.output / "comparison.csv", cmp.str());
  }

  std::ostringstream summary;
  write_comparison_csv(summary, reports);
  std::cout << summary.str();

  for (const auto &r : reports)
    if (r.records.empty() && !r.failures.empty())
      return kExitRuntime;
  return kExitOk;
}

// ---------------------------------------------------------------- curves

struct CurvesArgs {
  std::string bundle;
  std::string scorer;
  std::string method = "guided";
  int steps = 100;
  double blur_sigma = 10.0;
  std::string out = ".";
  SmoothingOptions smoothing;
};

int cmd_curves(const CurvesArgs &a) {
  const auto method = parse_method(a.method);
  if (a.steps < 2)
    throw ConfigError("--steps must be >= 2");
  if (!(a.blur_sigma > 0.0))
    throw ConfigError("--blur-sigma must be > 0");
  const ExtractionBundle bundle = load_bundle(a.bundle);
  auto scorer = load_scorer(a.scorer, InputSpec{});
  const SaliencyMap sal = saliency_for(bundle, method, postprocess_config(a.smoothing));

  CurveConfig cfg;
  cfg.steps = a.steps;
  cfg.insertion = {Baseline::Kind::Blur, a.blur_sigma};
  const Curve ins = insertion_deletion(bundle.image, sal, *scorer, bundle.class_index,
                                       CurveMode::Insertion, cfg);
  const Curve del = insertion_deletion(bundle.image, sal, *scorer, bundle.class_index,
                                       CurveMode::Deletion, cfg);

  const fs::path out = a.out;
  ensure_dir(out);
  const std::string prefix = output_prefix(stem_of(a.bundle), method);
  std::ostringstream csv;
  csv << "fraction,insertion_score,deletion_score\n";
  for (std::size_t k = 0; k < ins.fractions.size(); ++k)
    csv << format_double(ins.fractions[k]) << ',' << format_double(ins.scores[k]) << ','
        << format_double(del.scores[k]) << '\n';
  write_file(out / (prefix + ".curves.csv"), csv.str());

  std::string title = std::string(to_string(method)) + " " + stem_of(a.bundle);
  for (auto &c : title)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  png::write_rgb(out / (prefix + ".curves.png"), render::plot_curves(ins, del, title),
                 {{"Software", "camkit"},
                  {"insertion_auc", format_double(ins.auc)},
                  {"deletion_auc", format_double(del.auc)}});
  std::cout << "insertion_auc," << format_double(ins.auc) << '\n'
            << "deletion_auc," << format_double(del.auc) << '\n';
  return kExitOk;
}

void add_smoothing(CLI::App *cmd, SmoothingOptions &s) {
  cmd->add_option("--sigma", s.sigma, "Gaussian smoothing sigma at feature resolution (0 disables)")
      ->capture_default_str();
  cmd->add_option("--kernel", s.kernel, "Gaussian smoothing kernel size (odd)")
      ->capture_default_str();
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"camkit: class activation maps and saliency metrics"};
  app.require_subcommand(1);
  const auto methods = CLI::IsMember({"gradcam", "guided"});

  ExplainArgs ex;
  auto *explain = app.add_subcommand("explain", "Write a saliency map and heatmap overlay for one bundle");
  explain->add_option("bundle", ex.bundle, "Extraction bundle directory")->required();
  explain->add_option("--method", ex.method, "Saliency method")->check(methods)->capture_default_str();
  explain->add_option("--out", ex.out, "Output directory")->capture_default_str();
  explain->add_option("--alpha", ex.alpha, "Overlay opacity in [0, 1]")->capture_default_str();
  add_smoothing(explain, ex.smoothing);

  EvaluateArgs ev;
  auto *evaluate = app.add_subcommand("evaluate", "Run the metric suite over a collection");
  evaluate->add_option("config", ev.config, "Run configuration (JSON)")->required();
  evaluate->add_option("--method", ev.methods, "Method(s) to evaluate; overrides the config")
      ->check(methods);
  evaluate->add_option("--tau", ev.tau, "Binarisation threshold in (0, 1)");
  evaluate->add_option("--steps", ev.steps, "Insertion/deletion steps");
  evaluate->add_option("--seed", ev.seed, "Subsampling seed");
  evaluate->add_option("--subsample", ev.subsample, "Evaluate a seeded subset of N items");
  evaluate->add_option("--workers", ev.workers, "Worker threads");
  evaluate->add_option("--out", ev.out, "Output directory; overrides the config");

  CurvesArgs cu;
  auto *curves = app.add_subcommand("curves", "Insertion and deletion curves for one bundle");
  curves->add_option("bundle", cu.bundle, "Extraction bundle directory")->required();
  curves->add_option("--scorer", cu.scorer, "Model graph (.onnx) or stub table (.json)")->required();
  curves->add_option("--method", cu.method, "Saliency method")->check(methods)->capture_default_str();
  curves->add_option("--steps", cu.steps, "Number of steps")->capture_default_str();
  curves->add_option("--blur-sigma", cu.blur_sigma, "Insertion baseline blur sigma")
      ->capture_default_str();
  curves->add_option("--out", cu.out, "Output directory")->capture_default_str();
  add_smoothing(curves, cu.smoothing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*explain)
      return cmd_explain(ex);
    if (*evaluate)
      return cmd_evaluate(ev);
    return cmd_curves(cu);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError &e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const ScorerError &e) {
    std::cerr << "inference error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error &e) {
    // Bundle, annotation and model-loading problems: bad input.
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return kExitRuntime;
  }
}
