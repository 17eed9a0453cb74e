#pragma once

#include "radvote/geometry.hpp"

#include <random>
#include <vector>

namespace radvote::testing {

inline std::vector<Point3> random_points(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
  return pts;
}

inline RigidTransform random_transform(std::mt19937_64& rng, double max_translation = 2.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 3.14159265358979);
  std::uniform_real_distribution<double> t(-max_translation, max_translation);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  return RigidTransform::from_axis_angle(axis.normalized(), angle(rng), Eigen::Vector3d(t(rng), t(rng), t(rng)));
}

}  // namespace radvote::testing
