#include "radvote/error.hpp"
#include "radvote/experiment.hpp"
#include "radvote/metrics.hpp"
#include "radvote/ply_io.hpp"
#include "radvote/serialization.hpp"
#include "radvote/voting.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using nlohmann::json;
using namespace radvote;

namespace {

// Flags that may override a config file. Unset flags leave the file alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> seed_count;
  std::optional<std::string> shape;
  std::optional<std::size_t> model_points;
  std::optional<std::uint64_t> model_seed;
  std::optional<std::string> keypoint_scheme;
  std::optional<std::size_t> keypoint_count;
  std::optional<double> clutter, occlusion, sensor_sigma, work_factor;
  std::optional<double> flip, sigma, sigma_over_rho, outliers;
  std::optional<std::size_t> scene_budget, vote_budget;
  std::optional<double> rho;
  bool icp = false;
  std::vector<std::size_t> votes;
};

void add_scene_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config; flags override its fields");
  cmd->add_option("--shape", o.shape, "sphere | box | torus | blobby");
  cmd->add_option("--model-points", o.model_points);
  cmd->add_option("--model-seed", o.model_seed);
  cmd->add_option("--keypoints", o.keypoint_scheme, "fps | bbox");
  cmd->add_option("--keypoint-count", o.keypoint_count);
  cmd->add_option("--clutter", o.clutter);
  cmd->add_option("--occlusion", o.occlusion);
  cmd->add_option("--sensor-sigma", o.sensor_sigma);
  cmd->add_option("--work-factor", o.work_factor);
}

void add_pipeline_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--flip", o.flip, "segmenter flip rate");
  cmd->add_option("--sigma", o.sigma, "radius noise, normalized units");
  cmd->add_option("--sigma-over-rho", o.sigma_over_rho, "radius noise as a multiple of rho");
  cmd->add_option("--outliers", o.outliers, "outlier fraction");
  cmd->add_option("--scene-budget", o.scene_budget, "N");
  cmd->add_option("--votes", o.vote_budget, "M");
  cmd->add_option("--rho", o.rho, "voxel edge, normalized units");
  cmd->add_flag("--icp", o.icp, "refine with ICP");
}

json build_config_json(const Overrides& o, const std::optional<std::string>& forced_kind) {
  json j = o.config_path.empty() ? json::object() : read_json_file(o.config_path);
  if (!j.is_object()) throw Error(ErrorKind::Config, "config must be a JSON object");
  if (forced_kind) {
    if (j.contains("kind") && j["kind"] != *forced_kind) {
      throw Error(ErrorKind::Config, "config kind '" + j["kind"].dump() + "' does not match " + *forced_kind);
    }
    j["kind"] = *forced_kind;
  }
  if (!j.contains("kind")) j["kind"] = "cascade-vs-parallel";
  if (!j.contains("seeds") && !j.contains("seed_count")) j["seeds"] = json::array({0});

  auto set = [&j](const char* sec, const char* key, const auto& value) {
    if (value) j[sec][key] = *value;
  };
  if (o.output_dir) j["output_dir"] = *o.output_dir;
  if (o.seed_count) {
    j.erase("seeds");
    j["seed_count"] = *o.seed_count;
  }
  set("model", "shape", o.shape);
  set("model", "points", o.model_points);
  set("model", "seed", o.model_seed);
  set("keypoints", "scheme", o.keypoint_scheme);
  set("keypoints", "count", o.keypoint_count);
  set("scene", "clutter", o.clutter);
  set("scene", "occlusion", o.occlusion);
  set("scene", "sensor_sigma", o.sensor_sigma);
  set("scene", "work_factor", o.work_factor);
  set("segmenter", "flip_rate", o.flip);
  if (o.sigma || o.sigma_over_rho) {
    j["noise"].erase("sigma");
    j["noise"].erase("sigma_over_rho");
  }
  set("noise", "sigma", o.sigma);
  set("noise", "sigma_over_rho", o.sigma_over_rho);
  set("noise", "outlier_fraction", o.outliers);
  set("pipeline", "scene_budget", o.scene_budget);
  set("pipeline", "vote_budget", o.vote_budget);
  set("pipeline", "rho", o.rho);
  if (o.icp) j["pipeline"]["use_icp"] = true;
  if (!o.votes.empty()) j["votes"] = o.votes;
  return j;
}

std::filesystem::path sidecar_path(std::string scene) {
  std::filesystem::path p(scene);
  if (p.extension() != ".json") p += ".json";
  return p;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_synth(const Overrides& o, std::uint64_t seed, const std::string& out_stem) {
  const ExperimentConfig config = parse_config(build_config_json(o, std::nullopt));
  const ExperimentAssets assets = build_assets(config);
  SceneBundle bundle{scene_for_seed(config, assets, seed), config.model, assets.keypoints};
  const std::filesystem::path stem(out_stem);
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  write_scene(stem, bundle);
  std::filesystem::path resolved = stem;
  resolved += ".config.json";
  write_json_file(resolved, config_to_json(config));
  const auto fg = std::count(bundle.scene.cloud.labels->begin(), bundle.scene.cloud.labels->end(), 1);
  print_json({{"points", bundle.scene.cloud.size()}, {"foreground", fg}, {"sidecar", stem.string() + ".json"}});
  return 0;
}

int cmd_run(const Overrides& o, const std::string& arch_name, const std::string& scene, std::uint64_t seed) {
  const Architecture arch = parse_architecture(arch_name);
  ExperimentConfig config = parse_config(build_config_json(o, std::nullopt));
  const SceneBundle bundle = read_scene(sidecar_path(scene));
  const PointCloud model = make_model(bundle.model.shape, bundle.model.points, bundle.model.seed);
  PipelineParams params = config.pipeline;
  params.keypoint_count = bundle.object_keypoints.size();
  const NoiseModel noise = noise_for_seed(config, params.rho, seed);
  const PipelineResult result =
      run_pipeline(arch, bundle.scene, params, config.seg_flip, noise, model, bundle.object_keypoints);

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  json resolved = config_to_json(config);
  resolved["run"] = {{"architecture", arch_name}, {"scene", scene}, {"seed", seed}};
  write_json_file(dir / "resolved_config.json", resolved);
  write_json_file(dir / "pose.json", pose_to_json(result.pose));
  const json report = report_to_json(result.report);
  write_json_file(dir / "report.json", report);
  print_json({{"add", result.report.add},
              {"add_s", result.report.add_s},
              {"success", result.report.success},
              {"vcs", result.report.vcs.score},
              {"output_dir", dir.string()}});
  return 0;
}

int cmd_eval(const std::string& scene, const std::string& pose_path) {
  const SceneBundle bundle = read_scene(sidecar_path(scene));
  const PointCloud model = make_model(bundle.model.shape, bundle.model.points, bundle.model.seed);
  const RigidTransform est = pose_from_json(read_json_file(pose_path));
  const double add = add_metric(model, bundle.scene.gt_pose, est);
  const double add_s = add_s_metric(model, bundle.scene.gt_pose, est);
  const double score = bundle.scene.symmetric ? add_s : add;
  print_json({{"add", add},
              {"add_s", add_s},
              {"metric", bundle.scene.symmetric ? "add_s" : "add"},
              {"diameter", bundle.object_keypoints.diameter},
              {"success", add_decision(score, bundle.object_keypoints.diameter)}});
  return 0;
}

int cmd_experiment(const Overrides& o, const std::optional<std::string>& kind) {
  const ExperimentConfig config = parse_config(build_config_json(o, kind));
  const ExperimentResult result = run_experiment(config);
  json files = json::array();
  for (const auto& f : result.files) files.push_back(f.string());
  print_json({{"summary", result.summary}, {"files", files}});
  return 0;
}

int cmd_demo_voting(const Overrides& o, std::uint64_t seed) {
  const ExperimentConfig config = parse_config(build_config_json(o, std::nullopt));
  const ExperimentAssets assets = build_assets(config);
  const Scene scene = scene_for_seed(config, assets, seed);
  std::vector<std::size_t> fg;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i) {
    if ((*scene.cloud.labels)[i] == 1) fg.push_back(i);
  }
  const PointCloud voters = scene.cloud.select(fg);
  const RadiiMatrix radii = gt_radii(voters, scene.scene_keypoints);

  const auto& dir = config.output_dir;
  std::filesystem::create_directories(dir);
  json estimates = json::array();
  for (Eigen::Index k = 0; k < radii.cols(); ++k) {
    Accumulator3D acc(Point3::Constant(-1.0), Point3::Constant(1.0), config.pipeline.rho);
    for (std::size_t v = 0; v < voters.size(); ++v) cast_radial_vote(acc, voters.points[v], radii(static_cast<Eigen::Index>(v), k));
    const KeypointEstimate est = extract_peak(acc);
    const Point3& gt = scene.scene_keypoints[static_cast<std::size_t>(k)];
    estimates.push_back({{"keypoint", k},
                         {"estimate", point_to_json(est.position)},
                         {"ground_truth", point_to_json(gt)},
                         {"error", (est.position - gt).norm()},
                         {"peak_votes", est.score}});
    std::ofstream bin(dir / ("accumulator_k" + std::to_string(k) + ".bin"), std::ios::binary);
    write_accumulator(bin, acc);
    if (!bin) throw Error(ErrorKind::Io, "failed writing accumulator");
  }
  json resolved = config_to_json(config);
  resolved["demo"] = {{"seed", seed}};
  write_json_file(dir / "resolved_config.json", resolved);
  const json out = {{"voters", voters.size()}, {"rho", config.pipeline.rho}, {"estimates", estimates}};
  write_json_file(dir / "estimates.json", out);
  print_json(out);
  return 0;
}

int report_error(std::string_view kind, const std::string& message, std::optional<std::size_t> location, int code) {
  json err = {{"kind", kind}, {"message", message}};
  if (location) err["location"] = *location;
  std::cerr << json{{"error", err}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial keypoint voting toolkit: synthetic scenes, pose pipelines and experiments"};
  app.require_subcommand(1);
  Overrides o;
  std::uint64_t seed = 0;
  std::string out_stem = "scene", arch = "cascade", scene, pose;

  auto* synth = app.add_subcommand("synth", "synthesize a scene (PLY + JSON sidecar)");
  add_scene_flags(synth, o);
  synth->add_option("--seed", seed, "scene seed");
  synth->add_option("--out", out_stem, "output stem")->required();

  auto* run = app.add_subcommand("run", "run the cascade or parallel pipeline on a scene");
  run->add_option("architecture", arch, "cascade | parallel")->required();
  run->add_option("--scene", scene, "scene sidecar (.json) or stem")->required();
  run->add_option("--config", o.config_path);
  add_pipeline_flags(run, o);
  run->add_option("--seed", seed, "noise seed");
  run->add_option("--out", o.output_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "score a pose against a scene's ground truth");
  eval->add_option("--scene", scene)->required();
  eval->add_option("--pose", pose, "pose JSON")->required();

  auto make_experiment_cmd = [&](const char* name, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    add_scene_flags(cmd, o);
    add_pipeline_flags(cmd, o);
    cmd->add_option("--seeds", o.seed_count, "use seeds 0..n-1");
    cmd->add_option("--out", o.output_dir, "output directory");
    return cmd;
  };
  auto* experiment = make_experiment_cmd("experiment", "run any experiment config");
  auto* ablate_votes = make_experiment_cmd("ablate-votes", "success rate against the number of votes");
  ablate_votes->add_option("--grid", o.votes, "vote budgets to sweep");
  auto* ablate_loss = make_experiment_cmd("ablate-loss", "toy fitting with and without the pair loss");

  auto* demo = app.add_subcommand("demo-voting", "exact-radii voting on one clean scene");
  add_scene_flags(demo, o);
  demo->add_option("--rho", o.rho);
  demo->add_option("--seed", seed);
  demo->add_option("--out", o.output_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("argument", e.what(), std::nullopt, 2);
  }

  try {
    if (*synth) return cmd_synth(o, seed, out_stem);
    if (*run) return cmd_run(o, arch, scene, seed);
    if (*eval) return cmd_eval(scene, pose);
    if (*experiment) return cmd_experiment(o, std::nullopt);
    if (*ablate_votes) return cmd_experiment(o, std::string("votes-ablation"));
    if (*ablate_loss) return cmd_experiment(o, std::string("loss-ablation"));
    if (*demo) return cmd_demo_voting(o, seed);
  } catch (const Error& e) {
    const int code = e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Argument ? 2 : 1;
    return report_error(to_string(e.kind()), e.what(), e.location(), code);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), std::nullopt, 1);
  }
  return 0;
}
