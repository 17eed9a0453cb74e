#include "radvote/metrics.hpp"

#include "radvote/error.hpp"
#include "radvote/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace radvote {

namespace {

// Written in difference form so a pure translation offset yields exactly its length.
double matched_distance(const Point3& p, const RigidTransform& gt, const RigidTransform& est) {
  return ((gt.rotation() - est.rotation()) * p + (gt.translation() - est.translation())).norm();
}

}  // namespace

double add_metric(const PointCloud& model, const RigidTransform& gt, const RigidTransform& est) {
  validate_cloud(model);
  long double sum = 0.0L;
  for (const auto& p : model.points) sum += matched_distance(p, gt, est);
  return static_cast<double>(sum / static_cast<long double>(model.size()));
}

double add_s_metric(const PointCloud& model, const RigidTransform& gt, const RigidTransform& est) {
  validate_cloud(model);
  std::vector<Point3> est_points;
  est_points.reserve(model.size());
  for (const auto& q : model.points) est_points.push_back(est * q);
  const KdTree tree(est_points);
  long double sum = 0.0L;
  for (const auto& p : model.points) {
    // The matched point is always a candidate, which keeps ADD-S <= ADD under rounding.
    sum += std::min(std::sqrt(tree.nearest(gt * p).squared_distance), matched_distance(p, gt, est));
  }
  return static_cast<double>(sum / static_cast<long double>(model.size()));
}

bool add_decision(double value, double diameter) {
  if (!(diameter > 0.0)) throw Error(ErrorKind::Argument, "object diameter must be positive");
  return value <= 0.1 * diameter;
}

double auc(std::span<const double> values, double max_threshold, std::size_t steps) {
  if (values.empty()) throw Error(ErrorKind::Argument, "auc of an empty value list");
  if (!(max_threshold > 0.0)) throw Error(ErrorKind::Argument, "auc max threshold must be positive");
  if (steps < 2) throw Error(ErrorKind::Argument, "auc needs at least 2 threshold steps");
  for (double v : values) {
    if (!(v >= 0.0)) throw Error(ErrorKind::Argument, "auc values must be nonnegative");
  }
  const double n = static_cast<double>(values.size());
  const double dt = max_threshold / static_cast<double>(steps - 1);
  auto accuracy = [&](double tau) {
    std::size_t hits = 0;
    for (double v : values) hits += v <= tau;
    return static_cast<double>(hits) / n;
  };
  double area = 0.0;
  double prev = accuracy(0.0);
  for (std::size_t k = 1; k < steps; ++k) {
    const double tau = k + 1 == steps ? max_threshold : dt * static_cast<double>(k);
    const double cur = accuracy(tau);
    area += 0.5 * (prev + cur);
    prev = cur;
  }
  return area / static_cast<double>(steps - 1);
}

VcsResult vcs(const RadiiMatrix& estimated, const RadiiMatrix& gt, double rho) {
  if (estimated.rows() != gt.rows() || estimated.cols() != gt.cols()) {
    throw Error(ErrorKind::Argument, "estimated and GT radii must have the same dimensions");
  }
  if (estimated.size() == 0) throw Error(ErrorKind::Argument, "vcs of empty radii");
  if (!(rho > 0.0)) throw Error(ErrorKind::Argument, "voxel edge length must be positive");
  VcsResult out;
  out.stats.rho = rho;
  out.stats.total = static_cast<std::size_t>(estimated.size());
  for (Eigen::Index k = 0; k < estimated.cols(); ++k) {
    for (Eigen::Index m = 0; m < estimated.rows(); ++m) {
      out.stats.correct += std::abs(estimated(m, k) - gt(m, k)) <= rho;
    }
  }
  out.score = static_cast<double>(out.stats.correct) / static_cast<double>(out.stats.total);
  return out;
}

double miou(std::span<const int> predicted, std::span<const int> gt) {
  if (predicted.size() != gt.size()) throw Error(ErrorKind::Argument, "label lists differ in length");
  double sum = 0.0;
  for (int cls = 0; cls <= 1; ++cls) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool p = (predicted[i] != 0) == (cls == 1);
      const bool g = (gt[i] != 0) == (cls == 1);
      inter += p && g;
      uni += p || g;
    }
    sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  return 0.5 * sum;
}

}  // namespace radvote
