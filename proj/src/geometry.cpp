#include "radvote/geometry.hpp"

#include "radvote/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace radvote {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "argument";
    case ErrorKind::DegenerateInput: return "degenerate_input";
    case ErrorKind::EmptyCloud: return "empty_cloud";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::EmptyAccumulator: return "empty_accumulator";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::DegenerateScene: return "degenerate_scene";
    case ErrorKind::Pipeline: return "pipeline";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(message), kind_(kind), location_(line) {}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(points.at(i));
  if (labels) {
    LabelList sub;
    sub.reserve(indices.size());
    for (std::size_t i : indices) sub.push_back(labels->at(i));
    out.labels = std::move(sub);
  }
  return out;
}

void validate_cloud(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyCloud, "point cloud is empty");
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) throw Error(ErrorKind::Argument, "point cloud has non-finite coordinates");
  }
  if (cloud.labels && cloud.labels->size() != cloud.points.size()) {
    throw Error(ErrorKind::Argument, "label count does not match point count");
  }
}

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_) || !translation_.allFinite()) {
    throw Error(ErrorKind::Argument, "rotation is not a proper orthonormal matrix");
  }
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                               const Eigen::Vector3d& translation) {
  return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), translation};
}

bool RigidTransform::is_rotation(const Eigen::Matrix3d& rotation, double tol) {
  if (!rotation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(transform * p);
  out.labels = cloud.labels;
  return out;
}

AxisBox bounding_box(std::span<const Point3> points) {
  if (points.empty()) throw Error(ErrorKind::EmptyCloud, "bounding box of empty point set");
  AxisBox box{points.front(), points.front()};
  for (const auto& p : points) {
    box.lower = box.lower.cwiseMin(p);
    box.upper = box.upper.cwiseMax(p);
  }
  return box;
}

NormalizedCloud recenter_normalize(const PointCloud& cloud) {
  validate_cloud(cloud);
  const AxisBox box = bounding_box(cloud.points);
  NormalizationRecord record;
  record.center = 0.5 * (box.lower + box.upper);
  double scale = 0.0;
  for (const auto& p : cloud.points) scale = std::max(scale, (p - record.center).cwiseAbs().maxCoeff());
  if (!(scale > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "cannot normalize a cloud whose points are all identical");
  }
  record.scale = scale;
  return {apply_normalization(cloud, record), record};
}

PointCloud apply_normalization(const PointCloud& cloud, const NormalizationRecord& record) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(record.apply(p));
  out.labels = cloud.labels;
  return out;
}

PointCloud invert_normalization(const PointCloud& cloud, const NormalizationRecord& record) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(record.invert(p));
  out.labels = cloud.labels;
  return out;
}

PointCloud depth_to_cloud(const Eigen::MatrixXd& depth, const CameraIntrinsics& intrinsics) {
  if (!(intrinsics.fx > 0.0) || !(intrinsics.fy > 0.0)) {
    throw Error(ErrorKind::Argument, "focal lengths must be positive");
  }
  PointCloud out;
  for (Eigen::Index v = 0; v < depth.rows(); ++v) {
    for (Eigen::Index u = 0; u < depth.cols(); ++u) {
      const double d = depth(v, u);
      if (!std::isfinite(d) || d < 0.0) throw Error(ErrorKind::Argument, "depth values must be finite and >= 0");
      if (d == 0.0) continue;
      out.points.emplace_back((static_cast<double>(u) - intrinsics.cx) * d / intrinsics.fx,
                              (static_cast<double>(v) - intrinsics.cy) * d / intrinsics.fy, d);
    }
  }
  if (out.empty()) throw Error(ErrorKind::EmptyCloud, "depth map has no valid pixels");
  return out;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n,
                                               std::size_t seed_index) {
  const std::size_t count = cloud.size();
  if (n == 0 || n > count) throw Error(ErrorKind::Argument, "sample count must be in [1, cloud size]");
  if (seed_index >= count) throw Error(ErrorKind::Argument, "seed index out of range");

  std::vector<std::size_t> picks;
  picks.reserve(n);
  std::vector<double> min_dist(count, std::numeric_limits<double>::infinity());
  std::size_t current = seed_index;
  for (std::size_t k = 0; k < n; ++k) {
    picks.push_back(current);
    min_dist[current] = -1.0;  // already picked; never selected again
    const Point3& c = cloud.points[current];
    std::size_t best = 0;
    double best_dist = -0.5;
    for (std::size_t i = 0; i < count; ++i) {
      min_dist[i] = std::min(min_dist[i], (cloud.points[i] - c).squaredNorm());
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
  }
  return picks;
}

std::vector<std::size_t> random_downsample(std::size_t population, std::size_t n,
                                           std::uint64_t rng_seed) {
  if (n > population) throw Error(ErrorKind::Argument, "cannot sample more indices than points");
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n picks for a given seed are a prefix of
  // the picks for any larger n.
  std::mt19937_64 rng(rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

std::vector<std::size_t> random_downsample(const PointCloud& cloud, std::size_t n,
                                           std::uint64_t rng_seed) {
  return random_downsample(cloud.size(), n, rng_seed);
}

}  // namespace radvote
