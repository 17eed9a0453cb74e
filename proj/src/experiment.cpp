#include "radvote/experiment.hpp"

#include "radvote/error.hpp"
#include "radvote/metrics.hpp"
#include "radvote/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace radvote {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorKind::Config, message); }

void reject_unknown_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

json section(const json& root, const char* key) {
  if (!root.contains(key)) return json::object();
  return root.at(key);
}

void check(bool ok, const std::string& message) {
  if (!ok) config_error(message);
}

std::string_view to_string(KeypointScheme scheme) {
  return scheme == KeypointScheme::Fps ? "fps" : "bbox";
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  CsvWriter& cell(const std::string& s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  CsvWriter& cell(double v) { return cell(format_real(v)); }
  CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
  CsvWriter& cell(std::uint64_t v, int) { return cell(std::to_string(v)); }
  CsvWriter& cell(bool v) { return cell(std::string(v ? "1" : "0")); }
  void end_row() {
    out_ << '\n';
    first_ = true;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    f << out_.str();
    if (!f) throw Error(ErrorKind::Io, "failed writing " + path.string());
  }

 private:
  std::ostringstream out_;
  bool first_ = true;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

double uniform01(SplitMix64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Scene-level columns shared by both pose experiments.
const std::vector<std::string> kSceneColumns = {
    "scene_id", "architecture", "votes",  "status", "add",    "add_s", "add_score", "decision",
    "vcs",      "miou",         "voters", "false_positives", "max_keypoint_error"};

struct RowOutcome {
  SceneRow row;
  std::string status = "ok";
};

void append_scene_row(CsvWriter& csv, const RowOutcome& o) {
  const PipelineReport& r = o.row.report;
  const double max_err =
      r.keypoint_errors.empty() ? 0.0 : *std::max_element(r.keypoint_errors.begin(), r.keypoint_errors.end());
  csv.cell(o.row.seed, 0)
      .cell(std::string(to_string(o.row.architecture)))
      .cell(o.row.votes)
      .cell(o.status)
      .cell(r.add)
      .cell(r.add_s)
      .cell(r.add_score)
      .cell(r.success)
      .cell(r.vcs.score)
      .cell(r.miou)
      .cell(r.voters)
      .cell(r.false_positives)
      .cell(max_err);
  csv.end_row();
}

RowOutcome run_row(const ExperimentConfig& config, const ExperimentAssets& assets, const Scene& scene,
                   std::uint64_t seed, Architecture arch, std::size_t votes) {
  RowOutcome out;
  try {
    out.row = evaluate_seed(config, assets, scene, seed, arch, votes);
  } catch (const Error& e) {
    // A pipeline that cannot produce a pose counts as a failed estimate.
    if (e.kind() != ErrorKind::Pipeline && e.kind() != ErrorKind::DegenerateInput &&
        e.kind() != ErrorKind::EmptyAccumulator) {
      throw;
    }
    out.row.seed = seed;
    out.row.architecture = arch;
    out.row.votes = votes;
    const double inf = std::numeric_limits<double>::infinity();
    out.row.report.architecture = arch;
    out.row.report.add = out.row.report.add_s = out.row.report.add_score = inf;
    out.status = std::string(to_string(e.kind()));
  }
  return out;
}

json group_summary(const std::vector<const RowOutcome*>& rows, double auc_threshold) {
  std::vector<double> scores, vcs_values, finite_scores;
  std::size_t successes = 0, failures = 0;
  for (const RowOutcome* o : rows) {
    const PipelineReport& r = o->row.report;
    scores.push_back(r.add_score);
    vcs_values.push_back(r.vcs.score);
    if (std::isfinite(r.add_score)) finite_scores.push_back(r.add_score);
    successes += r.success ? 1 : 0;
    failures += o->status == "ok" ? 0 : 1;
  }
  const double n = static_cast<double>(rows.size());
  return {{"scenes", rows.size()},
          {"success_rate", rows.empty() ? 0.0 : static_cast<double>(successes) / n},
          {"successes", successes},
          {"pipeline_failures", failures},
          {"mean_vcs", mean_of(vcs_values)},
          {"mean_add_score", mean_of(finite_scores)},
          {"auc", rows.empty() ? 0.0 : auc(scores, auc_threshold)}};
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

ExperimentResult run_pose_experiment(const ExperimentConfig& config) {
  const ExperimentAssets assets = build_assets(config);
  const double auc_threshold = config.auc_max_fraction * assets.keypoints.diameter;
  std::vector<std::size_t> grid = config.votes;
  if (config.kind == ExperimentKind::CascadeVsParallel) grid = {config.pipeline.vote_budget};

  // outcomes[g][a][s], filled seed by seed so each scene is synthesized once.
  const std::size_t G = grid.size(), A = config.architectures.size(), S = config.seeds.size();
  std::vector<RowOutcome> outcomes(G * A * S);
  for (std::size_t s = 0; s < S; ++s) {
    const std::uint64_t seed = config.seeds[s];
    const Scene scene = scene_for_seed(config, assets, seed);
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t a = 0; a < A; ++a) {
        outcomes[(g * A + a) * S + s] = run_row(config, assets, scene, seed, config.architectures[a], grid[g]);
      }
    }
  }

  CsvWriter csv(kSceneColumns);
  for (const auto& o : outcomes) append_scene_row(csv, o);

  json summary = {{"kind", std::string(to_string(config.kind))},
                  {"seeds", S},
                  {"diameter", assets.keypoints.diameter},
                  {"auc_threshold", auc_threshold}};
  std::vector<PlotSeries> series;
  if (config.kind == ExperimentKind::CascadeVsParallel) {
    json per_arch = json::object();
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<const RowOutcome*> rows;
      for (std::size_t s = 0; s < S; ++s) rows.push_back(&outcomes[a * S + s]);
      per_arch[std::string(to_string(config.architectures[a]))] = group_summary(rows, auc_threshold);

      PlotSeries curve{std::string(to_string(config.architectures[a])), {}, {}};
      for (int t = 0; t <= 50; ++t) {
        const double frac = config.auc_max_fraction * t / 50.0;
        std::size_t below = 0;
        for (const auto* r : rows) below += r->row.report.add_score <= frac * assets.keypoints.diameter ? 1 : 0;
        curve.x.push_back(frac);
        curve.y.push_back(static_cast<double>(below) / static_cast<double>(S));
      }
      series.push_back(std::move(curve));
    }
    summary["architectures"] = per_arch;

    std::size_t vcs_ge = 0, cascade_only = 0, parallel_only = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const PipelineReport& c = outcomes[s].row.report;
      const PipelineReport& p = outcomes[S + s].row.report;
      vcs_ge += c.vcs.score >= p.vcs.score ? 1 : 0;
      cascade_only += (c.success && !p.success) ? 1 : 0;
      parallel_only += (p.success && !c.success) ? 1 : 0;
    }
    summary["paired"] = {
        {"success_margin", per_arch["cascade"]["success_rate"].get<double>() -
                               per_arch["parallel"]["success_rate"].get<double>()},
        {"vcs_cascade_ge_parallel_fraction", static_cast<double>(vcs_ge) / static_cast<double>(S)},
        {"cascade_only_successes", cascade_only},
        {"parallel_only_successes", parallel_only}};
  } else {
    json curve = json::array();
    json trend = json::object();
    for (std::size_t a = 0; a < A; ++a) {
      PlotSeries line{std::string(to_string(config.architectures[a])), {}, {}};
      bool non_decreasing = true;
      double previous = -1.0;
      for (std::size_t g = 0; g < G; ++g) {
        std::vector<const RowOutcome*> rows;
        for (std::size_t s = 0; s < S; ++s) rows.push_back(&outcomes[(g * A + a) * S + s]);
        json entry = group_summary(rows, auc_threshold);
        const double rate = entry["success_rate"].get<double>();
        non_decreasing = non_decreasing && rate >= previous;
        previous = rate;
        entry["votes"] = grid[g];
        entry["architecture"] = std::string(to_string(config.architectures[a]));
        curve.push_back(entry);
        line.x.push_back(std::log2(static_cast<double>(grid[g])));
        line.y.push_back(rate);
      }
      trend[line.name] = {{"non_decreasing", non_decreasing}};
      series.push_back(std::move(line));
    }
    summary["curve"] = curve;
    summary["trend"] = trend;
  }

  const auto& dir = config.output_dir;
  ExperimentResult result{summary, {dir / "scenes.csv", dir / "summary.json", dir / "plot.svg"}};
  csv.save(result.files[0]);
  write_json_file(result.files[1], summary);
  if (config.kind == ExperimentKind::CascadeVsParallel) {
    write_text(result.files[2], svg_line_plot("Accuracy vs ADD(S) threshold", "threshold / diameter",
                                              "fraction of scenes", series));
  } else {
    write_text(result.files[2], svg_line_plot("Success rate vs number of votes", "log2(votes)", "success rate", series));
  }
  return result;
}

ExperimentResult run_loss_experiment(const ExperimentConfig& config) {
  const ExperimentAssets assets = build_assets(config);
  const std::vector<std::string> trace_columns = {"trial", "seed", "step", "loss_value", "residual_loss", "alpha", "beta"};
  CsvWriter residual_csv(trace_columns), combined_csv(trace_columns);
  CsvWriter trials_csv({"trial", "seed", "steps_residual_only", "steps_combined", "combined_no_slower"});

  const std::size_t steps = config.loss.steps;
  std::vector<double> mean_log_residual(steps, 0.0), mean_log_combined(steps, 0.0);
  std::size_t no_slower = 0, reached_residual = 0, reached_combined = 0;
  std::vector<double> steps_r, steps_c;

  auto dump_trace = [](CsvWriter& csv, std::size_t trial, std::uint64_t seed, const ToyFitResult& fit) {
    for (const auto& e : fit.trace) {
      csv.cell(trial).cell(seed, 0).cell(e.step).cell(e.loss).cell(e.residual_loss).cell(e.alpha).cell(e.beta);
      csv.end_row();
    }
  };
  auto optional_cell = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string(); };

  for (std::size_t t = 0; t < config.seeds.size(); ++t) {
    const std::uint64_t seed = config.seeds[t];
    const LossTrialResult r = run_loss_trial(config, assets, seed);
    dump_trace(residual_csv, t, seed, r.residual_only);
    dump_trace(combined_csv, t, seed, r.combined);
    trials_csv.cell(t).cell(seed, 0).cell(optional_cell(r.steps_residual_only)).cell(optional_cell(r.steps_combined))
        .cell(r.combined_no_slower);
    trials_csv.end_row();

    no_slower += r.combined_no_slower ? 1 : 0;
    if (r.steps_residual_only) ++reached_residual, steps_r.push_back(static_cast<double>(*r.steps_residual_only));
    if (r.steps_combined) ++reached_combined, steps_c.push_back(static_cast<double>(*r.steps_combined));
    for (std::size_t s = 0; s < steps; ++s) {
      mean_log_residual[s] += std::log10(std::max(r.residual_only.trace[s].residual_loss, 1e-300));
      mean_log_combined[s] += std::log10(std::max(r.combined.trace[s].residual_loss, 1e-300));
    }
  }

  const double n = static_cast<double>(config.seeds.size());
  PlotSeries a{"residual only", {}, {}}, b{"combined (scheduled)", {}, {}};
  for (std::size_t s = 0; s < steps; ++s) {
    a.x.push_back(static_cast<double>(s));
    b.x.push_back(static_cast<double>(s));
    a.y.push_back(mean_log_residual[s] / n);
    b.y.push_back(mean_log_combined[s] / n);
  }

  json summary = {{"kind", std::string(to_string(config.kind))},
                  {"trials", config.seeds.size()},
                  {"threshold", config.loss.threshold},
                  {"combined_no_slower_fraction", static_cast<double>(no_slower) / n},
                  {"residual_only", {{"reached", reached_residual}, {"mean_steps", mean_of(steps_r)}}},
                  {"combined", {{"reached", reached_combined}, {"mean_steps", mean_of(steps_c)}}}};

  const auto& dir = config.output_dir;
  ExperimentResult result{summary,
                          {dir / "trace_residual_only.csv", dir / "trace_combined.csv", dir / "trials.csv",
                           dir / "summary.json", dir / "plot.svg"}};
  residual_csv.save(result.files[0]);
  combined_csv.save(result.files[1]);
  trials_csv.save(result.files[2]);
  write_json_file(result.files[3], summary);
  write_text(result.files[4], svg_line_plot("Residual loss during toy fitting", "step", "mean log10 residual loss", {a, b}));
  return result;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CascadeVsParallel: return "cascade-vs-parallel";
    case ExperimentKind::VotesAblation: return "votes-ablation";
    case ExperimentKind::LossAblation: return "loss-ablation";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::CascadeVsParallel, ExperimentKind::VotesAblation, ExperimentKind::LossAblation}) {
    if (to_string(k) == name) return k;
  }
  config_error("unknown experiment kind '" + std::string(name) + "'");
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown_keys(j, "config",
                      {"kind", "seeds", "seed_count", "seed_start", "model", "keypoints", "scene", "segmenter", "noise",
                       "pipeline", "architectures", "votes", "loss", "auc_max_fraction", "output_dir"});
  ExperimentConfig c;
  check(j.contains("kind"), "config needs a 'kind'");
  c.kind = parse_experiment_kind(get_or<std::string>(j, "kind", "", "config"));

  if (j.contains("seeds")) {
    c.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {}, "config");
  } else if (j.contains("seed_count")) {
    const auto count = get_or<std::size_t>(j, "seed_count", 0, "config");
    const auto start = get_or<std::uint64_t>(j, "seed_start", 0, "config");
    for (std::size_t i = 0; i < count; ++i) c.seeds.push_back(start + i);
  }
  check(!c.seeds.empty(), "seed list is empty");

  const json model = section(j, "model");
  reject_unknown_keys(model, "model", {"shape", "points", "seed"});
  try {
    c.model = model_spec_from_json(model);
  } catch (const Error& e) {
    config_error(e.what());
  } catch (const json::exception&) {
    config_error("model section has the wrong types");
  }
  check(c.model.points >= 100, "model.points must be >= 100");

  const json kp = section(j, "keypoints");
  reject_unknown_keys(kp, "keypoints", {"scheme", "count"});
  const auto scheme = get_or<std::string>(kp, "scheme", "fps", "keypoints");
  if (scheme == "fps") {
    c.keypoint_scheme = KeypointScheme::Fps;
    c.keypoint_count = get_or<std::size_t>(kp, "count", 3, "keypoints");
  } else if (scheme == "bbox") {
    c.keypoint_scheme = KeypointScheme::BboxCorners;
    c.keypoint_count = get_or<std::size_t>(kp, "count", 8, "keypoints");
    check(c.keypoint_count == 8, "bbox keypoints always number 8");
  } else {
    config_error("unknown keypoint scheme '" + scheme + "'");
  }
  check(c.keypoint_count >= 3, "keypoints.count must be >= 3");

  const json scene = section(j, "scene");
  reject_unknown_keys(scene, "scene", {"clutter", "occlusion", "sensor_sigma", "work_factor"});
  c.scene.clutter_fraction = get_or(scene, "clutter", c.scene.clutter_fraction, "scene");
  c.scene.occlusion_fraction = get_or(scene, "occlusion", c.scene.occlusion_fraction, "scene");
  c.scene.sensor_sigma = get_or(scene, "sensor_sigma", c.scene.sensor_sigma, "scene");
  c.scene.work_factor = get_or(scene, "work_factor", c.scene.work_factor, "scene");
  check(c.scene.clutter_fraction >= 0.0 && c.scene.clutter_fraction < 1.0, "scene.clutter must be in [0, 1)");
  check(c.scene.occlusion_fraction >= 0.0 && c.scene.occlusion_fraction < 0.9, "scene.occlusion must be in [0, 0.9)");
  check(c.scene.sensor_sigma >= 0.0, "scene.sensor_sigma must be >= 0");
  check(c.scene.work_factor >= 1.0, "scene.work_factor must be >= 1");

  const json seg = section(j, "segmenter");
  reject_unknown_keys(seg, "segmenter", {"flip_rate"});
  c.seg_flip = get_or(seg, "flip_rate", 0.0, "segmenter");
  check(c.seg_flip >= 0.0 && c.seg_flip < 0.5, "segmenter.flip_rate must be in [0, 0.5)");

  const json pipe = section(j, "pipeline");
  reject_unknown_keys(pipe, "pipeline",
                      {"scene_budget", "vote_budget", "rho", "use_icp", "icp_max_iters", "icp_tol"});
  c.pipeline.scene_budget = get_or(pipe, "scene_budget", c.pipeline.scene_budget, "pipeline");
  c.pipeline.vote_budget = get_or(pipe, "vote_budget", c.pipeline.vote_budget, "pipeline");
  c.pipeline.rho = get_or(pipe, "rho", c.pipeline.rho, "pipeline");
  c.pipeline.use_icp = get_or(pipe, "use_icp", c.pipeline.use_icp, "pipeline");
  c.pipeline.icp.max_iters = get_or(pipe, "icp_max_iters", c.pipeline.icp.max_iters, "pipeline");
  c.pipeline.icp.tol = get_or(pipe, "icp_tol", c.pipeline.icp.tol, "pipeline");
  c.pipeline.keypoint_count = c.keypoint_count;
  try {
    validate_params(c.pipeline);
  } catch (const Error& e) {
    config_error(std::string("pipeline: ") + e.what());
  }

  const json noise = section(j, "noise");
  reject_unknown_keys(noise, "noise", {"sigma", "sigma_over_rho", "outlier_fraction", "outlier_low", "outlier_high"});
  check(!(noise.contains("sigma") && noise.contains("sigma_over_rho")),
        "noise takes either sigma or sigma_over_rho, not both");
  c.sigma = get_or(noise, "sigma", 0.0, "noise");
  if (noise.contains("sigma_over_rho")) c.sigma_over_rho = get_or(noise, "sigma_over_rho", 0.0, "noise");
  c.outlier_fraction = get_or(noise, "outlier_fraction", c.outlier_fraction, "noise");
  c.outlier_low = get_or(noise, "outlier_low", c.outlier_low, "noise");
  c.outlier_high = get_or(noise, "outlier_high", c.outlier_high, "noise");
  try {
    validate_noise(noise_for_seed(c, c.pipeline.rho, 0));
  } catch (const Error& e) {
    config_error(std::string("noise: ") + e.what());
  }

  if (j.contains("architectures")) {
    for (const auto& name : get_or<std::vector<std::string>>(j, "architectures", {}, "config")) {
      try {
        c.architectures.push_back(parse_architecture(name));
      } catch (const Error& e) {
        config_error(e.what());
      }
    }
  }
  if (c.kind == ExperimentKind::CascadeVsParallel) {
    check(c.architectures.empty() ||
              c.architectures == std::vector<Architecture>{Architecture::Cascade, Architecture::Parallel},
          "cascade-vs-parallel always runs [\"cascade\", \"parallel\"]");
    c.architectures = {Architecture::Cascade, Architecture::Parallel};
  } else if (c.architectures.empty()) {
    c.architectures = {Architecture::Cascade};
  }
  check(std::set<Architecture>(c.architectures.begin(), c.architectures.end()).size() == c.architectures.size(),
        "architectures must not repeat");

  c.votes = get_or<std::vector<std::size_t>>(j, "votes", {}, "config");
  if (c.kind == ExperimentKind::VotesAblation) {
    check(!c.votes.empty(), "votes-ablation needs a non-empty 'votes' grid");
    for (std::size_t m : c.votes) {
      check(m >= 3, "every votes entry must be >= 3");
      check(m <= c.pipeline.scene_budget, "every votes entry must be <= pipeline.scene_budget");
    }
    check(std::is_sorted(c.votes.begin(), c.votes.end()) &&
              std::adjacent_find(c.votes.begin(), c.votes.end()) == c.votes.end(),
          "votes grid must be strictly increasing");
  } else {
    check(c.votes.empty(), "'votes' only applies to votes-ablation");
  }

  const json loss = section(j, "loss");
  reject_unknown_keys(loss, "loss", {"rows", "steps", "learning_rate", "amplitude_low", "amplitude_high", "threshold"});
  c.loss.rows = get_or(loss, "rows", c.loss.rows, "loss");
  c.loss.steps = get_or(loss, "steps", c.loss.steps, "loss");
  c.loss.learning_rate = get_or(loss, "learning_rate", c.loss.learning_rate, "loss");
  c.loss.amplitude_low = get_or(loss, "amplitude_low", c.loss.amplitude_low, "loss");
  c.loss.amplitude_high = get_or(loss, "amplitude_high", c.loss.amplitude_high, "loss");
  c.loss.threshold = get_or(loss, "threshold", c.loss.threshold, "loss");
  check(c.loss.rows >= 1 && c.loss.rows <= c.model.points, "loss.rows must be in [1, model.points]");
  check(c.loss.steps >= 1, "loss.steps must be >= 1");
  check(c.loss.learning_rate > 0.0, "loss.learning_rate must be positive");
  check(c.loss.amplitude_low >= 0.0 && c.loss.amplitude_low <= c.loss.amplitude_high,
        "loss amplitude range must satisfy 0 <= low <= high");
  check(c.loss.threshold > 0.0, "loss.threshold must be positive");

  c.auc_max_fraction = get_or(j, "auc_max_fraction", c.auc_max_fraction, "config");
  check(c.auc_max_fraction > 0.0, "auc_max_fraction must be positive");
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string(), "config");
  check(!c.output_dir.empty(), "output_dir must not be empty");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Config, e.what(), e.location());
    throw;
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& c) {
  json noise = {{"outlier_fraction", c.outlier_fraction}, {"outlier_low", c.outlier_low}, {"outlier_high", c.outlier_high}};
  if (c.sigma_over_rho) {
    noise["sigma_over_rho"] = *c.sigma_over_rho;
  } else {
    noise["sigma"] = c.sigma;
  }
  json archs = json::array();
  for (auto a : c.architectures) archs.push_back(std::string(to_string(a)));
  json j = {{"kind", std::string(to_string(c.kind))},
            {"seeds", c.seeds},
            {"model", model_spec_to_json(c.model)},
            {"keypoints", {{"scheme", std::string(to_string(c.keypoint_scheme))}, {"count", c.keypoint_count}}},
            {"scene",
             {{"clutter", c.scene.clutter_fraction},
              {"occlusion", c.scene.occlusion_fraction},
              {"sensor_sigma", c.scene.sensor_sigma},
              {"work_factor", c.scene.work_factor}}},
            {"segmenter", {{"flip_rate", c.seg_flip}}},
            {"noise", noise},
            {"pipeline",
             {{"scene_budget", c.pipeline.scene_budget},
              {"vote_budget", c.pipeline.vote_budget},
              {"rho", c.pipeline.rho},
              {"use_icp", c.pipeline.use_icp},
              {"icp_max_iters", c.pipeline.icp.max_iters},
              {"icp_tol", c.pipeline.icp.tol}}},
            {"architectures", archs},
            {"loss",
             {{"rows", c.loss.rows},
              {"steps", c.loss.steps},
              {"learning_rate", c.loss.learning_rate},
              {"amplitude_low", c.loss.amplitude_low},
              {"amplitude_high", c.loss.amplitude_high},
              {"threshold", c.loss.threshold}}},
            {"auc_max_fraction", c.auc_max_fraction},
            {"output_dir", c.output_dir.string()}};
  if (c.kind == ExperimentKind::VotesAblation) j["votes"] = c.votes;
  return j;
}

double effective_sigma(const ExperimentConfig& config, double rho) {
  return config.sigma_over_rho ? *config.sigma_over_rho * rho : config.sigma;
}

std::uint64_t scene_seed(std::uint64_t seed) { return mix_seed(seed, 100); }
std::uint64_t noise_seed(std::uint64_t seed) { return mix_seed(seed, 200); }

NoiseModel noise_for_seed(const ExperimentConfig& config, double rho, std::uint64_t seed) {
  NoiseModel n;
  n.gaussian_sigma = effective_sigma(config, rho);
  n.outlier_fraction = config.outlier_fraction;
  n.outlier_low = config.outlier_low;
  n.outlier_high = config.outlier_high;
  n.rng_seed = noise_seed(seed);
  return n;
}

SceneSpec scene_spec(const ExperimentConfig& config) { return config.scene; }

ExperimentAssets build_assets(const ExperimentConfig& config) {
  ExperimentAssets assets;
  assets.model = make_model(config.model.shape, config.model.points, config.model.seed);
  assets.keypoints = config.keypoint_scheme == KeypointScheme::Fps ? fps_keypoints(assets.model, config.keypoint_count)
                                                                    : bbox_corner_keypoints(assets.model);
  assets.symmetric = is_symmetric(config.model.shape);
  return assets;
}

Scene scene_for_seed(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed) {
  return synth_scene(assets.model, assets.keypoints, config.scene, scene_seed(seed),
                     std::string(to_string(config.model.shape)), assets.symmetric);
}

SceneRow evaluate_seed(const ExperimentConfig& config, const ExperimentAssets& assets, const Scene& scene,
                       std::uint64_t seed, Architecture arch, std::size_t votes) {
  PipelineParams params = config.pipeline;
  params.vote_budget = votes;
  params.keypoint_count = assets.keypoints.size();
  const NoiseModel noise = noise_for_seed(config, params.rho, seed);
  PipelineResult result = run_pipeline(arch, scene, params, config.seg_flip, noise, assets.model, assets.keypoints);
  return {seed, arch, votes, std::move(result.report)};
}

LossTrial make_loss_trial(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed) {
  const auto picks = random_downsample(assets.model.size(), config.loss.rows, mix_seed(seed, 300));
  const PointCloud rows = assets.model.select(picks);
  LossTrial trial;
  trial.gt = gt_radii(rows, assets.keypoints.keypoints);
  trial.init = trial.gt;

  SplitMix64 rng(mix_seed(seed, 301));
  const double lo = config.loss.amplitude_low, hi = config.loss.amplitude_high;
  const Eigen::Index K = trial.gt.cols();
  std::vector<double> pattern(static_cast<std::size_t>(K));
  for (Eigen::Index m = 0; m < trial.gt.rows(); ++m) {
    const double a = lo + (hi - lo) * uniform01(rng);
    pattern[0] = a;
    if (K > 1) pattern[1] = -a;
    for (std::size_t k = 2; k < pattern.size(); ++k) pattern[k] = a * (uniform01(rng) - 0.5);
    for (std::size_t k = pattern.size(); k > 1; --k) {
      std::swap(pattern[k - 1], pattern[static_cast<std::size_t>(rng() % k)]);
    }
    for (Eigen::Index k = 0; k < K; ++k) trial.init(m, k) += pattern[static_cast<std::size_t>(k)];
  }
  return trial;
}

LossTrialResult run_loss_trial(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed) {
  const LossTrial trial = make_loss_trial(config, assets, seed);
  LossTrialResult r;
  r.seed = seed;
  r.residual_only = toy_fit(trial.gt, trial.init, LossKind::ResidualOnly, config.loss.steps, config.loss.learning_rate);
  r.combined =
      toy_fit(trial.gt, trial.init, LossKind::CombinedWithSchedule, config.loss.steps, config.loss.learning_rate);
  r.steps_residual_only = steps_to_residual(r.residual_only.trace, config.loss.threshold);
  r.steps_combined = steps_to_residual(r.combined.trace, config.loss.threshold);
  r.combined_no_slower = r.steps_combined && (!r.steps_residual_only || *r.steps_combined <= *r.steps_residual_only);
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ensure_dir(config.output_dir);
  write_json_file(config.output_dir / "resolved_config.json", config_to_json(config));
  ExperimentResult result =
      config.kind == ExperimentKind::LossAblation ? run_loss_experiment(config) : run_pose_experiment(config);
  result.files.push_back(config.output_dir / "resolved_config.json");
  return result;
}

}  // namespace radvote
