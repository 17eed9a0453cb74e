#include "radvote/keypoints.hpp"

#include "radvote/error.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <limits>
#include <numeric>

namespace radvote {

namespace {

constexpr double kCollinearArea = 1e-9;

bool all_collinear(std::span<const Point3> pts) {
  if (pts.size() < 3) return true;
  // Anchor on the pair farthest from the first point, then look for any
  // point off that line.
  const Point3& a = pts[0];
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = (pts[i] - a).squaredNorm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  for (const auto& p : pts) {
    if (triangle_area(a, pts[far], p) >= kCollinearArea) return false;
  }
  return true;
}

}  // namespace

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

void validate_keypoints(const KeypointSet& set) {
  if (set.keypoints.size() < 3) throw Error(ErrorKind::Argument, "at least 3 keypoints are required");
  if (!(set.diameter > 0.0)) throw Error(ErrorKind::Argument, "keypoint set diameter must be positive");
  for (std::size_t i = 0; i < set.keypoints.size(); ++i) {
    if (!set.keypoints[i].allFinite()) throw Error(ErrorKind::Argument, "non-finite keypoint");
    for (std::size_t j = i + 1; j < set.keypoints.size(); ++j) {
      if (!((set.keypoints[i] - set.keypoints[j]).norm() > 0.0)) {
        throw Error(ErrorKind::Argument, "keypoints must be pairwise distinct");
      }
    }
  }
}

double model_diameter(const PointCloud& model) {
  validate_cloud(model);
  std::vector<std::size_t> subset;
  if (model.size() <= kExactDiameterLimit) {
    subset.resize(model.size());
    std::iota(subset.begin(), subset.end(), std::size_t{0});
  } else {
    subset = farthest_point_sample(model, 32, 0);
  }
  double best = 0.0;
  for (std::size_t a = 0; a < subset.size(); ++a) {
    const Point3& p = model.points[subset[a]];
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      best = std::max(best, (p - model.points[subset[b]]).squaredNorm());
    }
  }
  return std::sqrt(best);
}

KeypointSet bbox_corner_keypoints(const PointCloud& model) {
  validate_cloud(model);
  const AxisBox box = bounding_box(model.points);
  const Point3 extent = box.extent();
  if (!(extent.minCoeff() > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "model bounding box has zero extent on an axis");
  }
  KeypointSet set;
  for (int corner = 0; corner < 8; ++corner) {
    set.keypoints.emplace_back((corner & 1) ? box.upper.x() : box.lower.x(),
                               (corner & 2) ? box.upper.y() : box.lower.y(),
                               (corner & 4) ? box.upper.z() : box.lower.z());
  }
  set.diameter = model_diameter(model);
  return set;
}

KeypointSet fps_keypoints(const PointCloud& model, std::size_t count) {
  validate_cloud(model);
  if (count < 3) throw Error(ErrorKind::Argument, "at least 3 keypoints are required");
  if (count > model.size()) throw Error(ErrorKind::Argument, "more keypoints requested than model points");

  const std::size_t n = model.size();
  Point3 centroid = Point3::Zero();
  for (const auto& p : model.points) centroid += p;
  centroid /= static_cast<double>(n);
  std::size_t seed = 0;
  double seed_d = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (model.points[i] - centroid).squaredNorm();
    if (d > seed_d) {
      seed_d = d;
      seed = i;
    }
  }

  // Same greedy as farthest_point_sample, but candidates are walked in
  // max-min order so a collinear pick can fall through to the next best one.
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> picks{seed};
  std::vector<Point3> chosen{model.points[seed]};
  min_dist[seed] = -1.0;
  std::vector<std::size_t> order(n);
  while (picks.size() < count) {
    const Point3& last = chosen.back();
    for (std::size_t i = 0; i < n; ++i) min_dist[i] = std::min(min_dist[i], (model.points[i] - last).squaredNorm());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return min_dist[a] > min_dist[b]; });
    const bool need_plane = chosen.size() >= 2 && all_collinear(chosen);
    bool placed = false;
    for (std::size_t cand : order) {
      if (min_dist[cand] <= 0.0) break;  // picked or duplicate of a pick
      if (need_plane) {
        chosen.push_back(model.points[cand]);
        const bool still = all_collinear(chosen);
        chosen.pop_back();
        if (still) continue;
      }
      picks.push_back(cand);
      chosen.push_back(model.points[cand]);
      min_dist[cand] = -1.0;
      placed = true;
      break;
    }
    if (!placed) throw Error(ErrorKind::DegenerateInput, "model cannot supply non-collinear keypoints");
  }

  KeypointSet set;
  set.keypoints = std::move(chosen);
  set.diameter = model_diameter(model);
  return set;
}

std::vector<Point3> transform_keypoints(std::span<const Point3> keypoints,
                                        const RigidTransform& transform) {
  std::vector<Point3> out;
  out.reserve(keypoints.size());
  for (const auto& k : keypoints) out.push_back(transform * k);
  return out;
}

RadiiMatrix gt_radii(const PointCloud& foreground, std::span<const Point3> scene_keypoints) {
  validate_cloud(foreground);
  RadiiMatrix radii(static_cast<Eigen::Index>(foreground.size()),
                    static_cast<Eigen::Index>(scene_keypoints.size()));
  for (std::size_t m = 0; m < foreground.size(); ++m) {
    for (std::size_t i = 0; i < scene_keypoints.size(); ++i) {
      radii(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i)) =
          (foreground.points[m] - scene_keypoints[i]).norm();
    }
  }
  return radii;
}

}  // namespace radvote
