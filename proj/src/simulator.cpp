#include "radvote/simulator.hpp"

#include "radvote/error.hpp"
#include "radvote/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <numeric>
#include <random>

namespace radvote {

namespace {

constexpr double kPi = 3.14159265358979323846;

Point3 unit_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Point3 v;
  do {
    v = Point3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.squaredNorm() < 1e-12);
  return v.normalized();
}

double blobby_radius(const Point3& u) {
  return 1.0 + 0.35 * u.x() * u.y() + 0.25 * u.z() * u.z() * u.z() + 0.2 * u.x();
}

}  // namespace

std::string_view to_string(ModelShape shape) {
  switch (shape) {
    case ModelShape::Sphere: return "sphere";
    case ModelShape::Box: return "box";
    case ModelShape::Torus: return "torus";
    case ModelShape::Blobby: return "blobby";
  }
  return "unknown";
}

ModelShape parse_shape(std::string_view name) {
  for (auto s : {ModelShape::Sphere, ModelShape::Box, ModelShape::Torus, ModelShape::Blobby}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorKind::Argument, "unknown model shape '" + std::string(name) + "'");
}

bool is_symmetric(ModelShape shape) { return shape != ModelShape::Blobby; }

PointCloud make_model(ModelShape shape, std::size_t n, std::uint64_t rng_seed) {
  if (n < 100) throw Error(ErrorKind::Argument, "models need at least 100 points");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud model;
  model.points.reserve(n);
  switch (shape) {
    case ModelShape::Sphere:
      for (std::size_t i = 0; i < n; ++i) model.points.push_back(unit_direction(rng));
      break;
    case ModelShape::Box: {
      const double* h = kBoxHalfExtents;
      // Face pairs weighted by area: (y,z) faces, (x,z) faces, (x,y) faces.
      const double areas[3] = {h[1] * h[2], h[0] * h[2], h[0] * h[1]};
      const double total = areas[0] + areas[1] + areas[2];
      for (std::size_t i = 0; i < n; ++i) {
        const double pick = unit(rng) * total;
        const int axis = pick < areas[0] ? 0 : (pick < areas[0] + areas[1] ? 1 : 2);
        const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
        Point3 p;
        for (int a = 0; a < 3; ++a) p[a] = a == axis ? side * h[a] : (2.0 * unit(rng) - 1.0) * h[a];
        model.points.push_back(p);
      }
      break;
    }
    case ModelShape::Torus:
      while (model.points.size() < n) {
        const double tube = 2.0 * kPi * unit(rng);
        // Area element is proportional to (R + r cos(tube)).
        if (unit(rng) * (kTorusMajor + kTorusMinor) > kTorusMajor + kTorusMinor * std::cos(tube)) continue;
        const double around = 2.0 * kPi * unit(rng);
        const double ring = kTorusMajor + kTorusMinor * std::cos(tube);
        model.points.emplace_back(ring * std::cos(around), ring * std::sin(around), kTorusMinor * std::sin(tube));
      }
      break;
    case ModelShape::Blobby:
      for (std::size_t i = 0; i < n; ++i) {
        const Point3 u = unit_direction(rng);
        model.points.push_back(blobby_radius(u) * u);
      }
      break;
  }
  return model;
}

Eigen::Matrix3d random_rotation(std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    q = Eigen::Vector4d(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  } while (q.squaredNorm() < 1e-12);
  q.normalize();
  return Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
}

Scene synth_scene(const PointCloud& model, const KeypointSet& keypoints, const SceneSpec& spec,
                  std::uint64_t rng_seed, std::string model_id, bool symmetric) {
  validate_cloud(model);
  validate_keypoints(keypoints);
  if (!(spec.clutter_fraction >= 0.0 && spec.clutter_fraction < 1.0)) {
    throw Error(ErrorKind::Argument, "clutter fraction must be in [0, 1)");
  }
  if (!(spec.occlusion_fraction >= 0.0 && spec.occlusion_fraction < 0.9)) {
    throw Error(ErrorKind::Argument, "occlusion fraction must be in [0, 0.9)");
  }
  if (!(spec.sensor_sigma >= 0.0)) throw Error(ErrorKind::Argument, "sensor sigma must be >= 0");
  if (!(spec.work_factor > 0.0)) throw Error(ErrorKind::Argument, "work factor must be positive");

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double half_work = 0.5 * spec.work_factor * keypoints.diameter;
  const double reach = std::max(0.0, half_work - 0.5 * keypoints.diameter);
  Point3 translation;
  for (int a = 0; a < 3; ++a) translation[a] = (2.0 * unit(rng) - 1.0) * reach;
  const RigidTransform pose(random_rotation(rng()), translation);

  std::vector<Point3> posed;
  posed.reserve(model.size());
  for (const auto& p : model.points) posed.push_back(pose * p);

  // Occlusion: drop the points farthest along a random cut direction.
  const Point3 cut_normal = unit_direction(rng);
  const auto drop = static_cast<std::size_t>(std::floor(spec.occlusion_fraction * static_cast<double>(posed.size())));
  std::vector<std::size_t> order(posed.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cut_normal.dot(posed[a]) < cut_normal.dot(posed[b]);
  });
  std::vector<char> keep(posed.size(), 1);
  for (std::size_t i = 0; i < drop; ++i) keep[order[posed.size() - 1 - i]] = 0;

  PointCloud raw;
  raw.labels = LabelList{};
  for (std::size_t i = 0; i < posed.size(); ++i) {
    if (!keep[i]) continue;
    raw.points.push_back(posed[i]);
    raw.labels->push_back(1);
  }
  const std::size_t foreground = raw.size();
  if (foreground < 3) throw Error(ErrorKind::DegenerateScene, "occlusion left fewer than 3 foreground points");

  const auto clutter = static_cast<std::size_t>(
      std::llround(static_cast<double>(foreground) * spec.clutter_fraction / (1.0 - spec.clutter_fraction)));
  for (std::size_t i = 0; i < clutter; ++i) {
    raw.points.emplace_back((2.0 * unit(rng) - 1.0) * half_work, (2.0 * unit(rng) - 1.0) * half_work,
                            (2.0 * unit(rng) - 1.0) * half_work);
    raw.labels->push_back(0);
  }

  if (spec.sensor_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sensor_sigma);
    for (auto& p : raw.points) p += Point3(noise(rng), noise(rng), noise(rng));
  }

  NormalizedCloud normalized = recenter_normalize(raw);
  Scene scene{std::move(normalized.cloud), pose, std::move(model_id), {}, normalized.record, symmetric, cut_normal};
  for (const auto& k : keypoints.keypoints) scene.scene_keypoints.push_back(scene.normalization.apply(pose * k));
  return scene;
}

void validate_noise(const NoiseModel& noise) {
  if (!(noise.gaussian_sigma >= 0.0)) throw Error(ErrorKind::Argument, "noise sigma must be >= 0");
  if (!(noise.outlier_fraction >= 0.0 && noise.outlier_fraction < 1.0)) {
    throw Error(ErrorKind::Argument, "outlier fraction must be in [0, 1)");
  }
  if (!(noise.outlier_low < noise.outlier_high)) throw Error(ErrorKind::Argument, "outlier range must be increasing");
}

LabelList oracle_segmenter(std::span<const int> gt_labels, double flip_rate, std::uint64_t rng_seed) {
  if (!(flip_rate >= 0.0 && flip_rate < 0.5)) throw Error(ErrorKind::Argument, "flip rate must be in [0, 0.5)");
  std::mt19937_64 rng(rng_seed);
  std::bernoulli_distribution flip(flip_rate);
  LabelList out(gt_labels.begin(), gt_labels.end());
  for (auto& l : out) {
    if (flip(rng)) l = l != 0 ? 0 : 1;
  }
  return out;
}

LabelList oracle_segmenter(const Scene& scene, double flip_rate, std::uint64_t rng_seed) {
  if (!scene.cloud.labels) throw Error(ErrorKind::Argument, "scene carries no labels");
  return oracle_segmenter(*scene.cloud.labels, flip_rate, rng_seed);
}

RadiiMatrix oracle_regressor(const PointCloud& points, std::span<const Point3> scene_keypoints,
                             const NoiseModel& noise, std::span<const std::size_t> row_keys) {
  validate_noise(noise);
  if (!row_keys.empty() && row_keys.size() != points.size()) {
    throw Error(ErrorKind::Argument, "row key count must match point count");
  }
  const auto rows = static_cast<Eigen::Index>(points.size());
  const auto cols = static_cast<Eigen::Index>(scene_keypoints.size());
  RadiiMatrix radii(rows, cols);
  for (Eigen::Index m = 0; m < rows; ++m) {
    const auto row = static_cast<std::size_t>(m);
    SplitMix64 rng(mix_seed(noise.rng_seed, row_keys.empty() ? row : row_keys[row]));
    const bool foreground = !points.labels || (*points.labels)[row] != 0;
    for (Eigen::Index k = 0; k < cols; ++k) {
      // Draw all three variates for every entry so streams stay aligned
      // regardless of the label.
      std::normal_distribution<double> gauss(0.0, 1.0);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double g = gauss(rng);
      const double u = unit(rng);
      const double garbage = noise.outlier_low + (noise.outlier_high - noise.outlier_low) * unit(rng);
      double value = garbage;
      if (foreground && u >= noise.outlier_fraction) {
        value = (points.points[row] - scene_keypoints[static_cast<std::size_t>(k)]).norm() + noise.gaussian_sigma * g;
      }
      radii(m, k) = std::max(0.0, value);
    }
  }
  return radii;
}

void validate_params(const PipelineParams& params) {
  if (params.keypoint_count < 3) throw Error(ErrorKind::Argument, "pipeline needs K >= 3");
  if (params.vote_budget == 0 || params.scene_budget == 0) throw Error(ErrorKind::Argument, "budgets must be positive");
  if (params.vote_budget > params.scene_budget) throw Error(ErrorKind::Argument, "vote budget M must not exceed N");
  if (!(params.rho > 0.0)) throw Error(ErrorKind::Argument, "rho must be positive");
}

std::string_view to_string(Architecture arch) { return arch == Architecture::Cascade ? "cascade" : "parallel"; }

Architecture parse_architecture(std::string_view name) {
  if (name == "cascade") return Architecture::Cascade;
  if (name == "parallel") return Architecture::Parallel;
  throw Error(ErrorKind::Argument, "unknown architecture '" + std::string(name) + "'");
}

PipelineResult run_pipeline(Architecture arch, const Scene& scene, const PipelineParams& params, double seg_flip,
                            const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints) {
  validate_params(params);
  validate_noise(noise);
  validate_cloud(scene.cloud);
  if (!scene.cloud.labels) throw Error(ErrorKind::Argument, "scene carries no labels");
  if (keypoints.size() != params.keypoint_count || scene.scene_keypoints.size() != params.keypoint_count) {
    throw Error(ErrorKind::Argument, "keypoint count does not match pipeline K");
  }

  PipelineReport report;
  report.architecture = arch;

  // Input budget N.
  std::vector<std::size_t> scene_idx;
  if (scene.cloud.size() > params.scene_budget) {
    scene_idx = random_downsample(scene.cloud.size(), params.scene_budget, mix_seed(noise.rng_seed, 2));
    std::sort(scene_idx.begin(), scene_idx.end());
  } else {
    scene_idx.resize(scene.cloud.size());
    std::iota(scene_idx.begin(), scene_idx.end(), std::size_t{0});
  }
  const PointCloud input = scene.cloud.select(scene_idx);
  report.scene_points = input.size();

  const LabelList predicted = oracle_segmenter(*input.labels, seg_flip, mix_seed(noise.rng_seed, 1));
  report.miou = miou(predicted, *input.labels);
  std::vector<std::size_t> foreground;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] != 0) foreground.push_back(i);
  }
  report.predicted_foreground = foreground.size();
  for (std::size_t i : foreground) report.false_positives += (*input.labels)[i] == 0;
  if (foreground.size() < 3) throw Error(ErrorKind::Pipeline, "fewer than 3 predicted foreground points");

  const std::size_t m = std::min(params.vote_budget, foreground.size());
  std::vector<std::size_t> voter_local;
  voter_local.reserve(m);
  for (std::size_t pick : random_downsample(foreground.size(), m, mix_seed(noise.rng_seed, 3))) {
    voter_local.push_back(foreground[pick]);
  }
  std::vector<std::size_t> voter_keys;
  voter_keys.reserve(m);
  for (std::size_t i : voter_local) voter_keys.push_back(scene_idx[i]);
  PointCloud voters = input.select(voter_local);
  report.voters = voters.size();

  RadiiMatrix radii;
  if (arch == Architecture::Cascade) {
    // The regression stage only ever sees points the segmenter passed on.
    PointCloud filtered = voters;
    filtered.labels.reset();
    radii = oracle_regressor(filtered, scene.scene_keypoints, noise, voter_keys);
  } else {
    const RadiiMatrix all = oracle_regressor(input, scene.scene_keypoints, noise, scene_idx);
    radii.resize(static_cast<Eigen::Index>(m), all.cols());
    for (std::size_t r = 0; r < m; ++r) radii.row(static_cast<Eigen::Index>(r)) = all.row(static_cast<Eigen::Index>(voter_local[r]));
  }

  report.vcs = vcs(radii, gt_radii(voters, scene.scene_keypoints), params.rho);

  const VotingBounds bounds{Point3::Constant(-1.0), Point3::Constant(1.0)};
  Accumulator3D acc(bounds.lower, bounds.upper, params.rho);
  std::vector<Point3> estimated_raw;
  for (Eigen::Index k = 0; k < radii.cols(); ++k) {
    if (k > 0) acc.clear();
    std::size_t cast = 0;
    for (std::size_t v = 0; v < voters.size(); ++v) {
      cast += cast_radial_vote(acc, voters.points[v], radii(static_cast<Eigen::Index>(v), k));
    }
    report.votes_cast.push_back(cast);
    KeypointEstimate est = extract_peak(acc);
    est.keypoint_index = static_cast<std::size_t>(k);
    report.keypoint_errors.push_back((est.position - scene.scene_keypoints[static_cast<std::size_t>(k)]).norm());
    estimated_raw.push_back(scene.normalization.invert(est.position));
    report.estimates.push_back(est);
  }

  RigidTransform pose = fit_rigid(keypoints.keypoints, estimated_raw);
  if (params.use_icp) {
    PointCloud scene_fg = invert_normalization(input.select(foreground), scene.normalization);
    pose = icp_refine(model, scene_fg, pose, params.icp);
  }

  report.add = add_metric(model, scene.gt_pose, pose);
  report.add_s = add_s_metric(model, scene.gt_pose, pose);
  report.add_score = scene.symmetric ? report.add_s : report.add;
  report.success = add_decision(report.add_score, keypoints.diameter);
  return {pose, std::move(report)};
}

PipelineResult run_cascade(const Scene& scene, const PipelineParams& params, double seg_flip,
                           const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints) {
  return run_pipeline(Architecture::Cascade, scene, params, seg_flip, noise, model, keypoints);
}

PipelineResult run_parallel(const Scene& scene, const PipelineParams& params, double seg_flip,
                            const NoiseModel& noise, const PointCloud& model, const KeypointSet& keypoints) {
  return run_pipeline(Architecture::Parallel, scene, params, seg_flip, noise, model, keypoints);
}

}  // namespace radvote
