#pragma once

#include "radvote/geometry.hpp"
#include "radvote/keypoints.hpp"
#include "radvote/metrics.hpp"
#include "radvote/pose.hpp"
#include "radvote/voting.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radvote {

enum class ModelShape { Sphere, Box, Torus, Blobby };

std::string_view to_string(ModelShape shape);
ModelShape parse_shape(std::string_view name);
// Shapes with a continuous or discrete rotational symmetry are scored with ADD-S.
bool is_symmetric(ModelShape shape);

// Box half extents and torus radii used by make_model.
inline constexpr double kBoxHalfExtents[3] = {1.0, 0.6, 0.35};
inline constexpr double kTorusMajor = 1.0;
inline constexpr double kTorusMinor = 0.35;

// n >= 100 points on the surface of a unit-scale shape centred at the origin.
PointCloud make_model(ModelShape shape, std::size_t n, std::uint64_t rng_seed);

struct SceneSpec {
  double clutter_fraction = 0.0;    // [0, 1)
  double occlusion_fraction = 0.0;  // [0, 0.9)
  double sensor_sigma = 0.0;        // scene units
  double work_factor = 4.0;         // work-volume cube side, in object diameters
};

struct Scene {
  PointCloud cloud;  // normalized, labels = GT foreground mask
  RigidTransform gt_pose;  // object frame -> raw scene frame
  std::string model_id;
  std::vector<Point3> scene_keypoints;  // normalized scene frame
  NormalizationRecord normalization;
  bool symmetric = false;
  Point3 occlusion_normal = Point3::UnitZ();  // raw frame; points farthest along it were dropped
};

// Random pose, cut-plane occlusion, uniform clutter in the work volume,
// isotropic sensor noise, then per-scene normalization. Throws Argument for
// out-of-range fractions and DegenerateScene if fewer than 3 foreground
// points survive occlusion.
Scene synth_scene(const PointCloud& model, const KeypointSet& keypoints, const SceneSpec& spec,
                  std::uint64_t rng_seed, std::string model_id = {}, bool symmetric = false);

// Uniform rotation from a normalized 4-d Gaussian quaternion.
Eigen::Matrix3d random_rotation(std::uint64_t rng_seed);

struct NoiseModel {
  double gaussian_sigma = 0.0;  // normalized scene units
  double outlier_fraction = 0.0;
  double outlier_low = 0.0;
  double outlier_high = 2.0 * std::sqrt(3.0);  // diagonal of the [-1, 1]^3 box
  std::uint64_t rng_seed = 0;
};

void validate_noise(const NoiseModel& noise);

// GT labels with each one flipped independently with probability flip_rate.
LabelList oracle_segmenter(std::span<const int> gt_labels, double flip_rate, std::uint64_t rng_seed);
LabelList oracle_segmenter(const Scene& scene, double flip_rate, std::uint64_t rng_seed);

// Stand-in for the radii regression network. Foreground rows (or every row
// when the cloud carries no labels) get GT radius + N(0, sigma), with each
// entry replaced by Uniform(outlier range) with probability outlier_fraction.
// Background rows are always uniform garbage. Negative values clamp to 0.
// Each row draws from its own stream keyed by row_keys[m] (default: m), so a
// point receives the same draws whichever subset it is regressed in.
RadiiMatrix oracle_regressor(const PointCloud& points, std::span<const Point3> scene_keypoints,
                             const NoiseModel& noise, std::span<const std::size_t> row_keys = {});

struct PipelineParams {
  std::size_t scene_budget = std::size_t{1} << 15;  // N
  std::size_t vote_budget = std::size_t{1} << 10;   // M
  std::size_t keypoint_count = 3;                   // K
  double rho = 0.005;                               // normalized units
  bool use_icp = false;
  IcpOptions icp;
};

void validate_params(const PipelineParams& params);

enum class Architecture { Cascade, Parallel };
std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct PipelineReport {
  Architecture architecture = Architecture::Cascade;
  std::size_t scene_points = 0;          // after the N budget
  std::size_t predicted_foreground = 0;
  std::size_t false_positives = 0;       // predicted foreground that is GT background
  std::size_t voters = 0;
  VcsResult vcs;
  double miou = 0.0;
  std::vector<KeypointEstimate> estimates;  // normalized frame
  std::vector<double> keypoint_errors;      // normalized units
  std::vector<std::size_t> votes_cast;      // voxels incremented, per keypoint
  double add = 0.0;
  double add_s = 0.0;
  double add_score = 0.0;  // ADD-S for symmetric models, ADD otherwise
  bool success = false;
};

struct PipelineResult {
  RigidTransform pose;  // object frame -> raw scene frame
  PipelineReport report;
};

// Segment, keep predicted foreground, downsample to M, regress radii, vote,
// fit, optionally refine with ICP.
PipelineResult run_cascade(const Scene& scene, const PipelineParams& params, double seg_flip,
                           const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints);

// Same stages, but radii come from one joint regression over all N points, so
// false-positive voters carry background garbage.
PipelineResult run_parallel(const Scene& scene, const PipelineParams& params, double seg_flip,
                            const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints);

PipelineResult run_pipeline(Architecture arch, const Scene& scene, const PipelineParams& params, double seg_flip,
                            const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints);

}  // namespace radvote
