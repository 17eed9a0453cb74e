#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace radvote {

using Point3 = Eigen::Vector3d;

// Class ids: 0 = background, 1 = foreground.
using LabelList = std::vector<int>;

struct PointCloud {
  std::vector<Point3> points;
  std::optional<LabelList> labels;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts, std::optional<LabelList> lbl = std::nullopt)
      : points(std::move(pts)), labels(std::move(lbl)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return labels.has_value(); }

  // Subset preserving labels, in the order given by `indices`.
  PointCloud select(std::span<const std::size_t> indices) const;
};

// Throws EmptyCloud for an empty cloud, Argument for non-finite coordinates
// or a label list of the wrong length.
void validate_cloud(const PointCloud& cloud);

class RigidTransform {
 public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform();  // identity
  // Throws DegenerateInput unless R is orthonormal with det +1 (within kTolerance).
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                        const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  static bool is_rotation(const Eigen::Matrix3d& rotation, double tol = kTolerance);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Point3 operator*(const Point3& p) const { return rotation_ * p + translation_; }
  RigidTransform operator*(const RigidTransform& rhs) const;
  RigidTransform inverse() const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct NormalizationRecord {
  Point3 center = Point3::Zero();
  double scale = 1.0;

  Point3 apply(const Point3& p) const { return (p - center) / scale; }
  Point3 invert(const Point3& p) const { return p * scale + center; }
};

struct NormalizedCloud {
  PointCloud cloud;
  NormalizationRecord record;
};

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

// Recenters on the bounding-box midpoint and divides by the largest absolute
// coordinate, so every output coordinate lies in [-1, 1].
NormalizedCloud recenter_normalize(const PointCloud& cloud);
PointCloud apply_normalization(const PointCloud& cloud, const NormalizationRecord& record);
PointCloud invert_normalization(const PointCloud& cloud, const NormalizationRecord& record);

// depth(v, u) in meters; 0 marks an invalid pixel.
PointCloud depth_to_cloud(const Eigen::MatrixXd& depth, const CameraIntrinsics& intrinsics);

// Greedy max-min sampling starting at seed_index; ties go to the lowest index.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t n,
                                               std::size_t seed_index);

// n distinct indices drawn uniformly without replacement.
std::vector<std::size_t> random_downsample(const PointCloud& cloud, std::size_t n,
                                           std::uint64_t rng_seed);
std::vector<std::size_t> random_downsample(std::size_t population, std::size_t n,
                                           std::uint64_t rng_seed);

struct AxisBox {
  Point3 lower;
  Point3 upper;
  Point3 extent() const { return upper - lower; }
  double diagonal() const { return extent().norm(); }
};

AxisBox bounding_box(std::span<const Point3> points);

}  // namespace radvote
