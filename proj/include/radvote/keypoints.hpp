#pragma once

#include "radvote/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace radvote {

// M x K matrix of point-to-keypoint distances, in scene units.
using RadiiMatrix = Eigen::MatrixXd;

struct KeypointSet {
  std::vector<Point3> keypoints;  // object frame
  double diameter = 0.0;          // max pairwise distance over the model cloud

  std::size_t size() const { return keypoints.size(); }
};

// Throws Argument unless K >= 3, keypoints are pairwise distinct and the
// diameter is positive.
void validate_keypoints(const KeypointSet& set);

// Exact max pairwise distance up to kExactDiameterLimit points; beyond that,
// the max distance over a 32-point farthest-point subset.
inline constexpr std::size_t kExactDiameterLimit = 5000;
double model_diameter(const PointCloud& model);

// The 8 corners of the axis-aligned bounding box, ordered by (x, y, z) bits.
KeypointSet bbox_corner_keypoints(const PointCloud& model);

// K model points picked by farthest point sampling, seeded at the point
// farthest from the centroid. A candidate that would leave every chosen point
// collinear (triangle area < 1e-9) is skipped in favour of the next one.
KeypointSet fps_keypoints(const PointCloud& model, std::size_t count);

std::vector<Point3> transform_keypoints(std::span<const Point3> keypoints,
                                        const RigidTransform& transform);

RadiiMatrix gt_radii(const PointCloud& foreground, std::span<const Point3> scene_keypoints);

double triangle_area(const Point3& a, const Point3& b, const Point3& c);

}  // namespace radvote
