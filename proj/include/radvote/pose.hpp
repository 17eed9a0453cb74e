#pragma once

#include "radvote/geometry.hpp"

#include <cstddef>
#include <span>

namespace radvote {

// Least-squares rigid fit (SVD, no scale): the T minimising
// sum |T * object_i - scene_i|^2, with reflections corrected so det(R) = +1.
// Throws Argument for fewer than 3 pairs or mismatched lengths,
// DegenerateInput when the object points are collinear.
RigidTransform fit_rigid(std::span<const Point3> object_pts, std::span<const Point3> scene_pts);

struct IcpOptions {
  std::size_t max_iters = 20;
  double tol = 1e-6;
};

// RMS distance from each transformed model point to its nearest scene point.
double correspondence_rms(const PointCloud& model, const PointCloud& scene, const RigidTransform& transform);

// Point-to-point ICP, model -> scene correspondences. A step is accepted only
// if it does not increase the correspondence RMS; iteration stops when the
// improvement drops below tol.
RigidTransform icp_refine(const PointCloud& model, const PointCloud& scene_foreground, const RigidTransform& initial,
                          const IcpOptions& options = {});

// Geodesic angle between two rotations, radians.
double rotation_angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace radvote
