#pragma once

#include "radvote/losses.hpp"
#include "radvote/serialization.hpp"
#include "radvote/simulator.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace radvote {

enum class ExperimentKind { CascadeVsParallel, VotesAblation, LossAblation };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

enum class KeypointScheme { Fps, BboxCorners };

struct LossAblationSpec {
  std::size_t rows = 8;       // M
  std::size_t steps = 400;
  double learning_rate = 1.0;
  double amplitude_low = 0.1;  // per-trial noise amplitude range
  double amplitude_high = 0.4;
  double threshold = 1e-3;     // on the residual loss
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::CascadeVsParallel;
  std::vector<std::uint64_t> seeds;
  ModelSpec model;
  KeypointScheme keypoint_scheme = KeypointScheme::Fps;
  std::size_t keypoint_count = 3;
  SceneSpec scene;
  double seg_flip = 0.0;
  // Absolute sigma, or a multiple of rho when sigma_over_rho is set.
  double sigma = 0.0;
  std::optional<double> sigma_over_rho;
  double outlier_fraction = 0.0;
  double outlier_low = 0.0;
  double outlier_high = 2.0 * std::sqrt(3.0);
  PipelineParams pipeline;
  std::vector<Architecture> architectures;  // votes-ablation only
  std::vector<std::size_t> votes;           // votes-ablation grid of M
  LossAblationSpec loss;
  double auc_max_fraction = 0.1;  // AUC threshold range, in object diameters
  std::filesystem::path output_dir = "results";
};

// Validates everything up front; any problem is a Config error.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Every field, defaults included.
nlohmann::json config_to_json(const ExperimentConfig& config);

double effective_sigma(const ExperimentConfig& config, double rho);
NoiseModel noise_for_seed(const ExperimentConfig& config, double rho, std::uint64_t seed);
SceneSpec scene_spec(const ExperimentConfig& config);
std::uint64_t scene_seed(std::uint64_t seed);
std::uint64_t noise_seed(std::uint64_t seed);

// Model, keypoints and diameter shared by every seed of an experiment.
struct ExperimentAssets {
  PointCloud model;
  KeypointSet keypoints;
  bool symmetric = false;
};

ExperimentAssets build_assets(const ExperimentConfig& config);
Scene scene_for_seed(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed);

struct SceneRow {
  std::uint64_t seed = 0;
  Architecture architecture = Architecture::Cascade;
  std::size_t votes = 0;
  PipelineReport report;
};

// Runs one pipeline on a seed's scene with the vote budget overridden.
SceneRow evaluate_seed(const ExperimentConfig& config, const ExperimentAssets& assets, const Scene& scene,
                       std::uint64_t seed, Architecture arch, std::size_t votes);

struct LossTrial {
  RadiiMatrix gt;
  RadiiMatrix init;
};

// GT radii from random model points to the keypoints, perturbed row-wise by
// a random permutation of (a, -a, a*u) with a ~ U(amplitude range) and
// u ~ U(-0.5, 0.5).
LossTrial make_loss_trial(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed);

struct LossTrialResult {
  std::uint64_t seed = 0;
  ToyFitResult residual_only;
  ToyFitResult combined;
  std::optional<std::size_t> steps_residual_only;
  std::optional<std::size_t> steps_combined;
  bool combined_no_slower = false;
};

LossTrialResult run_loss_trial(const ExperimentConfig& config, const ExperimentAssets& assets, std::uint64_t seed);

struct ExperimentResult {
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

// Writes CSVs, summary.json, plot.svg and resolved_config.json into
// config.output_dir. Outputs are seed-ordered and byte-reproducible.
ExperimentResult run_experiment(const ExperimentConfig& config);


}  // namespace radvote
