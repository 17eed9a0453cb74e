#include "radvote/pose.hpp"

#include "radvote/error.hpp"
#include "radvote/keypoints.hpp"
#include "radvote/spatial_index.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <vector>

namespace radvote {

namespace {

constexpr double kMinTriangleArea = 1e-9;

double max_triangle_area(std::span<const Point3> pts) {
  const Point3& a = pts[0];
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - a).squaredNorm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  double best = 0.0;
  for (const auto& p : pts) best = std::max(best, triangle_area(a, pts[far], p));
  return best;
}

}  // namespace

RigidTransform fit_rigid(std::span<const Point3> object_pts, std::span<const Point3> scene_pts) {
  if (object_pts.size() != scene_pts.size()) {
    throw Error(ErrorKind::Argument, "correspondence lists differ in length");
  }
  if (object_pts.size() < 3) throw Error(ErrorKind::Argument, "rigid fit needs at least 3 correspondences");
  if (max_triangle_area(object_pts) < kMinTriangleArea) {
    throw Error(ErrorKind::DegenerateInput, "object points are collinear");
  }

  const double n = static_cast<double>(object_pts.size());
  Point3 obj_mean = Point3::Zero(), scene_mean = Point3::Zero();
  for (std::size_t i = 0; i < object_pts.size(); ++i) {
    obj_mean += object_pts[i];
    scene_mean += scene_pts[i];
  }
  obj_mean /= n;
  scene_mean /= n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < object_pts.size(); ++i) {
    cov += (object_pts[i] - obj_mean) * (scene_pts[i] - scene_mean).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  // Singular values are sorted descending, so the last column is the
  // smallest singular direction.
  if ((v * u.transpose()).determinant() < 0.0) flip(2, 2) = -1.0;
  Eigen::Matrix3d rotation = v * flip * u.transpose();

  // Re-orthonormalise to clear accumulated rounding before validation.
  Eigen::JacobiSVD<Eigen::Matrix3d> polar(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rotation = polar.matrixU() * polar.matrixV().transpose();
  return {rotation, scene_mean - rotation * obj_mean};
}

double correspondence_rms(const PointCloud& model, const PointCloud& scene, const RigidTransform& transform) {
  validate_cloud(model);
  validate_cloud(scene);
  const KdTree tree(scene.points);
  double sum = 0.0;
  for (const auto& p : model.points) sum += tree.nearest(transform * p).squared_distance;
  return std::sqrt(sum / static_cast<double>(model.size()));
}

RigidTransform icp_refine(const PointCloud& model, const PointCloud& scene_foreground, const RigidTransform& initial,
                          const IcpOptions& options) {
  validate_cloud(model);
  validate_cloud(scene_foreground);
  if (options.max_iters == 0) return initial;

  const KdTree tree(scene_foreground.points);
  const std::size_t n = model.size();
  std::vector<Point3> matched(n);

  auto correspond = [&](const RigidTransform& t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto nn = tree.nearest(t * model.points[i]);
      matched[i] = scene_foreground.points[nn.index];
      sum += nn.squared_distance;
    }
    return std::sqrt(sum / static_cast<double>(n));
  };

  RigidTransform current = initial;
  double rms = correspond(current);
  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const RigidTransform candidate = fit_rigid(model.points, matched);
    const double candidate_rms = correspond(candidate);
    if (candidate_rms > rms) break;
    const double improvement = rms - candidate_rms;
    current = candidate;
    rms = candidate_rms;
    if (improvement < options.tol) break;
  }
  return current;
}

double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace radvote
