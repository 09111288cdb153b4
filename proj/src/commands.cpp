#include "vesselsynth/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vesselsynth/diffusion.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/mask_fitting.hpp"
#include "vesselsynth/mask_synthesis.hpp"
#include "vesselsynth/parallel.hpp"
#include "vesselsynth/raster.hpp"
#include "vesselsynth/rng.hpp"
#include "vesselsynth/serialization.hpp"
#include "vesselsynth/vessel_metrics.hpp"

#ifndef VESSELSYNTH_VERSION
#define VESSELSYNTH_VERSION "0.0.0"
#endif

namespace vsynth::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"synth", "fit", "eval", "bench-order", "diffuse-check"};

/// Data problem that maps to exit code 3.
struct MismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string config_value(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned() || v.is_number_float()) return v.dump();
  if (v.is_array()) {
    std::string joined;
    for (const auto& e : v) {
      if (!joined.empty()) joined += ',';
      joined += config_value(e, key);
    }
    return joined;
  }
  throw ParseError("config key '" + key + "' must be a string, number or array");
}

/// Splices the keys of a --config JSON object in front of the explicit flags,
/// so explicit flags win under last-value-wins parsing.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config requires a path");
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config_path.empty()) return rest;

  json cfg;
  try {
    cfg = json::parse(read_file(config_path));
  } catch (const json::parse_error& e) {
    throw ParseError(config_path + ": " + e.what());
  }
  if (!cfg.is_object()) throw ParseError(config_path + ": config must be a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : cfg.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back("--" + key);
      continue;
    }
    injected.push_back("--" + key);
    injected.push_back(config_value(value, key));
  }
  auto pos = std::find_if(rest.begin(), rest.end(), [](const std::string& a) {
    return std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end();
  });
  if (pos == rest.end()) throw CLI::ArgumentMismatch("--config needs a subcommand");
  rest.insert(pos + 1, injected.begin(), injected.end());
  return rest;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// Output locations are left out so that a run reproduces byte for byte in
// another directory.
void write_run_manifest(const fs::path& dir, const std::string& command, const json& config) {
  json m;
  m["tool"] = "vesselsynth";
  m["version"] = VESSELSYNTH_VERSION;
  m["command"] = command;
  m["config"] = config;
  write_json(dir / "run_manifest.json", m);
}

fs::path parent_or_cwd(const fs::path& file) {
  const fs::path p = file.parent_path();
  return p.empty() ? fs::path(".") : p;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu", i);
  return buf;
}

// ---- synth

struct SynthOptions {
  int count = 1;
  std::uint64_t seed = 0;
  int size = 512;
  int depth = 5;
  int branches = 2;
  int order = 3;
  double threshold = 0.95;
  int max_curves = 2000;
  int workers = 1;
  std::string out;
};

SkeletonParams skeleton_params_for(int size, int depth, int branches, std::uint64_t seed) {
  SkeletonParams sp = SkeletonParams::for_canvas(size, size);
  sp.omega = depth;
  sp.theta_branches = branches;
  sp.seed = seed;
  return sp;
}

SynthesisParams synthesis_params_for(int order, double threshold, int max_curves, std::uint64_t seed) {
  SynthesisParams p;
  p.curve_order = order;
  p.coverage_threshold = threshold;
  p.max_curves = max_curves;
  p.seed = seed;
  return p;
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const fs::path dir = o.out;
  // validate once up front so bad parameters never leave a partial tree
  skeleton_params_for(o.size, o.depth, o.branches, o.seed).validate();
  synthesis_params_for(o.order, o.threshold, o.max_curves, o.seed).validate();
  ensure_dir(dir);

  const auto n = static_cast<std::size_t>(o.count);
  std::vector<json> entries(n);
  parallel_for(n, o.workers, [&](std::size_t i) {
    const std::uint64_t s = o.seed + i;
    const SynthesisResult r = generate_sample(skeleton_params_for(o.size, o.depth, o.branches, s),
                                              synthesis_params_for(o.order, o.threshold, o.max_curves, s));
    const std::string id = sample_id(i);
    save_pgm(r.mask, dir / (id + "_mask.pgm"));
    json manifest = r.manifest;
    manifest["id"] = id;
    write_json(dir / (id + "_manifest.json"), manifest);
    entries[i] = {{"id", id},
                  {"seed", s},
                  {"mask", id + "_mask.pgm"},
                  {"manifest", id + "_manifest.json"},
                  {"coverage", r.coverage},
                  {"coverage_warning", r.coverage_warning},
                  {"curves", r.curves.size()}};
  });

  std::size_t warnings = 0;
  for (const auto& e : entries) warnings += e["coverage_warning"].get<bool>() ? 1 : 0;
  json index;
  index["count"] = n;
  index["samples"] = json::array();
  for (auto& e : entries) index["samples"].push_back(std::move(e));
  write_json(dir / "index.json", index);

  write_run_manifest(dir, "synth",
                     {{"count", o.count},
                      {"seed", o.seed},
                      {"size", o.size},
                      {"depth", o.depth},
                      {"branches", o.branches},
                      {"order", o.order},
                      {"threshold", o.threshold},
                      {"max_curves", o.max_curves},
                      {"skeleton_params", to_json(skeleton_params_for(o.size, o.depth, o.branches, o.seed))},
                      {"synthesis_params", to_json(synthesis_params_for(o.order, o.threshold, o.max_curves, o.seed))}});
  out << "wrote " << n << " samples to " << dir.string() << " (" << warnings << " below coverage threshold)\n";
  return kOk;
}

// ---- fit

struct FitOptions {
  std::string target;
  int order = 3;
  int budget = 2000;
  double coverage = 0.99;
  std::uint64_t seed = 0;
  int hop_min = 8;
  int hop_max = 16;
  std::string out;
  std::string rendered;
};

int cmd_fit(const FitOptions& o, std::ostream& out) {
  FitParams p;
  p.curve_order = o.order;
  p.budget = o.budget;
  p.coverage_target = o.coverage;
  p.seed = o.seed;
  p.hop_min = o.hop_min;
  p.hop_max = o.hop_max;
  p.validate();

  const RasterMask target = load_pgm(o.target);
  const FitReport report = fit(target, p);

  const fs::path report_path = o.out;
  fs::path rendered_path = o.rendered;
  if (rendered_path.empty()) rendered_path = fs::path(report_path).replace_extension(".pgm");
  ensure_dir(parent_or_cwd(report_path));
  ensure_dir(parent_or_cwd(rendered_path));

  json j = to_json(report);
  j["target"] = o.target;
  j["params"] = to_json(p);
  write_json(report_path, j);
  save_pgm(report.rendered, rendered_path);
  write_run_manifest(parent_or_cwd(report_path), "fit",
                     {{"target", o.target}, {"fit_params", to_json(p)}});
  out << "iou " << fixed6(report.iou) << " ssim " << fixed6(report.ssim) << " mse " << fixed6(report.mse)
      << " curves " << report.curves.size() << " evaluations " << report.iterations_used << "\n";
  return kOk;
}

// ---- eval

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string out;
  int workers = 1;
};

std::set<std::string> pgm_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") names.insert(e.path().filename().string());
  }
  return names;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  const auto pred = pgm_names(o.pred);
  const auto gt = pgm_names(o.gt);
  std::vector<std::string> common;
  bool unmatched = false;
  for (const auto& n : pred) {
    if (gt.count(n)) {
      common.push_back(n);
    } else {
      err << "unmatched: " << n << " (pred only)\n";
      unmatched = true;
    }
  }
  for (const auto& n : gt) {
    if (!pred.count(n)) {
      err << "unmatched: " << n << " (gt only)\n";
      unmatched = true;
    }
  }
  if (common.empty()) throw MismatchError("no matching mask files between pred and gt");
  if (unmatched) throw MismatchError("pred and gt file lists differ");

  std::vector<MetricSet> rows(common.size());
  parallel_for(common.size(), o.workers, [&](std::size_t i) {
    const RasterMask a = load_pgm(fs::path(o.pred) / common[i]);
    const RasterMask b = load_pgm(fs::path(o.gt) / common[i]);
    if (a.width() != b.width() || a.height() != b.height()) {
      throw MismatchError(common[i] + ": pred and gt sizes differ");
    }
    rows[i] = evaluate_pair(a, b);
  });

  std::string csv = metric_csv_header() + "\n";
  MetricSet mean;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += metric_csv_row(fs::path(common[i]).stem().string(), rows[i]) + "\n";
    mean.iou += rows[i].iou;
    mean.ssim += rows[i].ssim;
    mean.mse += rows[i].mse;
    mean.cr_literal += rows[i].cr_literal;
    mean.cr_connected += rows[i].cr_connected;
    mean.s_smooth += rows[i].s_smooth;
  }
  const double n = double(rows.size());
  mean.iou /= n;
  mean.ssim /= n;
  mean.mse /= n;
  mean.cr_literal /= n;
  mean.cr_connected /= n;
  mean.s_smooth /= n;
  csv += metric_csv_row("mean", mean) + "\n";

  const fs::path out_path = o.out;
  ensure_dir(parent_or_cwd(out_path));
  write_file_atomic(out_path, csv);
  write_run_manifest(parent_or_cwd(out_path), "eval", {{"pred", o.pred}, {"gt", o.gt}});
  out << "evaluated " << rows.size() << " pairs, mean iou " << fixed6(mean.iou) << "\n";
  return kOk;
}

// ---- bench-order

struct BenchOptions {
  std::vector<int> orders{3, 4, 5};
  int count = 20;
  std::uint64_t seed = 0;
  int size = 512;
  int depth = 5;
  int branches = 2;
  int budget = 2000;
  int workers = 1;
  std::string out;
};

int cmd_bench_order(const BenchOptions& o, std::ostream& out) {
  if (o.orders.empty()) throw DomainError("--orders must list at least one order");
  std::set<int> seen;
  for (int order : o.orders) {
    if (order < 3 || order > 5) throw DomainError("unsupported curve order " + std::to_string(order));
    if (!seen.insert(order).second) throw DomainError("order " + std::to_string(order) + " listed twice");
  }
  FitParams fp;
  fp.budget = o.budget;
  fp.seed = o.seed;
  fp.validate();
  skeleton_params_for(o.size, o.depth, o.branches, o.seed).validate();

  const auto n = static_cast<std::size_t>(o.count);
  if (n == 0) throw DomainError("--count must be positive");
  std::vector<RasterMask> targets(n);
  parallel_for(n, o.workers, [&](std::size_t i) {
    const std::uint64_t s = o.seed + i;
    targets[i] = generate_sample(skeleton_params_for(o.size, o.depth, o.branches, s),
                                 synthesis_params_for(3, 0.95, 2000, s))
                     .mask;
  });
  const auto rows = compare_orders(targets, o.orders, fp, o.workers);
  const std::string csv = order_table_csv(rows);

  const fs::path out_path = o.out;
  ensure_dir(parent_or_cwd(out_path));
  write_file_atomic(out_path, csv);
  write_run_manifest(parent_or_cwd(out_path), "bench-order",
                     {{"orders", o.orders},
                      {"count", o.count},
                      {"seed", o.seed},
                      {"size", o.size},
                      {"depth", o.depth},
                      {"branches", o.branches},
                      {"fit_params", to_json(fp)}});
  out << csv;
  return kOk;
}

// ---- diffuse-check

struct DiffuseOptions {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::string sigma = "sqrt_beta";
  int samples = 1000;
  int size = 8;
  std::uint64_t seed = 0;
  std::string out;
};

std::string schedule_csv(const diffusion::NoiseSchedule& s) {
  std::string csv = "t,beta,alpha_bar,sigma,signal_plus_noise\n";
  for (int t = 1; t <= s.steps(); ++t) {
    const double ab = s.alpha_bar(t);
    const double unity = std::pow(std::sqrt(ab), 2) + std::pow(std::sqrt(1.0 - ab), 2);
    csv += std::to_string(t) + "," + fixed6(s.beta(t)) + "," + fixed6(ab) + "," + fixed6(s.sigma(t)) + "," +
           fixed6(unity) + "\n";
  }
  return csv;
}

/// Iterates the one-step forward process from unit-variance inputs and
/// reports the pooled sample variance at a handful of steps.
std::string variance_csv(const diffusion::NoiseSchedule& s, int samples, int size, std::uint64_t seed) {
  using diffusion::Tensor2D;
  std::set<int> checkpoints{1, s.steps()};
  for (int k = 1; k < 10; ++k) checkpoints.insert(std::max(1, s.steps() * k / 10));
  std::map<int, std::pair<double, double>> sums;  // t -> (sum, sum of squares)

  KeyedRng root(seed);
  for (int d = 0; d < samples; ++d) {
    KeyedRng rng = root.child(std::uint64_t(d));
    Tensor2D x(size, size);
    for (double& v : x.values()) v = rng.normal();
    Tensor2D eps(size, size);
    for (int t = 1; t <= s.steps(); ++t) {
      for (double& v : eps.values()) v = rng.normal();
      x = diffusion::forward_step(x, t, eps, s);
      if (checkpoints.count(t)) {
        auto& [sum, sq] = sums[t];
        for (double v : x.values()) {
          sum += v;
          sq += v * v;
        }
      }
    }
  }
  const double count = double(samples) * size * size;
  std::string csv = "t,mean,variance,expected_variance,relative_error\n";
  for (int t : checkpoints) {
    const auto [sum, sq] = sums[t];
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    csv += std::to_string(t) + "," + fixed6(mean) + "," + fixed6(var) + "," + fixed6(1.0) + "," +
           fixed6(std::abs(var - 1.0)) + "\n";
  }
  return csv;
}

int cmd_diffuse_check(const DiffuseOptions& o, std::ostream& out) {
  diffusion::SigmaKind kind;
  if (o.sigma == "sqrt_beta") {
    kind = diffusion::SigmaKind::sqrt_beta;
  } else if (o.sigma == "posterior") {
    kind = diffusion::SigmaKind::posterior;
  } else {
    throw DomainError("--sigma must be sqrt_beta or posterior");
  }
  if (o.samples < 1 || o.size < 1) throw DomainError("--samples and --size must be positive");
  const auto schedule = diffusion::make_schedule(o.steps, o.beta_start, o.beta_end, kind);
  const std::string sched = schedule_csv(schedule);
  const std::string var = variance_csv(schedule, o.samples, o.size, o.seed);
  if (o.out.empty()) {
    out << sched << "\n" << var;
    return kOk;
  }
  const fs::path dir = o.out;
  ensure_dir(dir);
  write_file_atomic(dir / "schedule.csv", sched);
  write_file_atomic(dir / "variance.csv", var);
  write_run_manifest(dir, "diffuse-check",
                     {{"steps", o.steps},
                      {"beta_start", o.beta_start},
                      {"beta_end", o.beta_end},
                      {"sigma", o.sigma},
                      {"samples", o.samples},
                      {"size", o.size},
                      {"seed", o.seed}});
  out << var;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Procedural vessel masks: synthesis, fitting and scoring", "vesselsynth"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", VESSELSYNTH_VERSION);
  app.require_subcommand(1);
  // handled before parsing; declared here so it shows up in --help
  std::string config_unused;
  app.add_option("--config", config_unused, "JSON object of flag values; explicit flags win");

  std::function<int()> action;

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Generate masks, manifests and an index");
  synth->add_option("--count", so.count, "number of samples")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", so.seed, "base seed; sample i uses seed+i");
  synth->add_option("--size", so.size, "canvas side in pixels")->check(CLI::Range(16, 8192));
  synth->add_option("--depth", so.depth, "maximum tree depth")->check(CLI::Range(0, 10));
  synth->add_option("--branches", so.branches, "children per bifurcation")->check(CLI::Range(1, 8));
  synth->add_option("--order", so.order, "Bezier order")->check(CLI::IsMember({3, 4, 5}));
  synth->add_option("--threshold", so.threshold, "skeleton coverage target");
  synth->add_option("--max-curves", so.max_curves, "curve cap per sample");
  synth->add_option("--workers", so.workers, "parallel samples")->check(CLI::PositiveNumber);
  synth->add_option("--out", so.out, "output directory")->required();
  synth->callback([&] { action = [&] { return cmd_synth(so, out); }; });

  FitOptions fo;
  auto* fitc = app.add_subcommand("fit", "Fit Bezier strokes to a target mask");
  fitc->add_option("--target", fo.target, "target mask (PGM)")->required();
  fitc->add_option("--order", fo.order, "Bezier order")->check(CLI::IsMember({3, 4, 5}));
  fitc->add_option("--budget", fo.budget, "IOU evaluations during refinement")->check(CLI::PositiveNumber);
  fitc->add_option("--coverage", fo.coverage, "skeleton coverage target for placement");
  fitc->add_option("--seed", fo.seed);
  fitc->add_option("--hop-min", fo.hop_min, "shortest curve in skeleton pixels");
  fitc->add_option("--hop-max", fo.hop_max, "longest curve in skeleton pixels");
  fitc->add_option("--out", fo.out, "report JSON")->required();
  fitc->add_option("--rendered", fo.rendered, "rendered mask PGM (default: report path with .pgm)");
  fitc->callback([&] { action = [&] { return cmd_fit(fo, out); }; });

  EvalOptions eo;
  auto* evalc = app.add_subcommand("eval", "Score predicted masks against ground truth");
  evalc->add_option("--pred", eo.pred, "directory of predicted PGMs")->required();
  evalc->add_option("--gt", eo.gt, "directory of ground-truth PGMs")->required();
  evalc->add_option("--out", eo.out, "metrics CSV")->required();
  evalc->add_option("--workers", eo.workers)->check(CLI::PositiveNumber);
  evalc->callback([&] { action = [&] { return cmd_eval(eo, out, err); }; });

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench-order", "Fit self-generated order-3 targets with several orders");
  bench->add_option("--orders", bo.orders, "comma-separated orders from {3,4,5}")->delimiter(',');
  bench->add_option("--count", bo.count, "number of targets")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bo.seed);
  bench->add_option("--size", bo.size)->check(CLI::Range(16, 8192));
  bench->add_option("--depth", bo.depth)->check(CLI::Range(0, 10));
  bench->add_option("--branches", bo.branches)->check(CLI::Range(1, 8));
  bench->add_option("--budget", bo.budget)->check(CLI::PositiveNumber);
  bench->add_option("--workers", bo.workers)->check(CLI::PositiveNumber);
  bench->add_option("--out", bo.out, "table CSV")->required();
  bench->callback([&] { action = [&] { return cmd_bench_order(bo, out); }; });

  DiffuseOptions dopt;
  auto* diff = app.add_subcommand("diffuse-check", "Print the noise schedule and a forward variance check");
  diff->add_option("--steps", dopt.steps)->check(CLI::PositiveNumber);
  diff->add_option("--beta-start", dopt.beta_start);
  diff->add_option("--beta-end", dopt.beta_end);
  diff->add_option("--sigma", dopt.sigma, "sqrt_beta or posterior");
  diff->add_option("--samples", dopt.samples, "Monte Carlo draws");
  diff->add_option("--size", dopt.size, "draw side length");
  diff->add_option("--seed", dopt.seed);
  diff->add_option("--out", dopt.out, "directory for schedule.csv and variance.csv (default: stdout)");
  diff->callback([&] { action = [&] { return cmd_diffuse_check(dopt, out); }; });

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }

  try {
    return action ? action() : kOk;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const MismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kMismatch;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kMismatch;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace vsynth::cli
