#pragma once

#include "radvote/geometry.hpp"
#include "radvote/keypoints.hpp"

#include <cstddef>
#include <span>

namespace radvote {

struct VoteStats {
  std::size_t total = 0;    // M (entries considered)
  std::size_t correct = 0;  // M', entries with |estimated - gt| <= rho
  double rho = 0.0;
};

struct VcsResult {
  double score = 0.0;
  VoteStats stats;
};

// Mean distance between corresponding model points under the two poses.
double add_metric(const PointCloud& model, const RigidTransform& gt, const RigidTransform& est);

// Mean over GT-posed points of the distance to the closest estimate-posed point.
double add_s_metric(const PointCloud& model, const RigidTransform& gt, const RigidTransform& est);

// Inclusive: value <= 0.1 * diameter.
bool add_decision(double value, double diameter);

inline constexpr double kAucDefaultMaxThreshold = 0.10;
inline constexpr std::size_t kAucDefaultSteps = 1000;

// Area under accuracy(threshold) for `steps` thresholds evenly spaced on
// [0, max_threshold], trapezoidal, normalised to [0, 1].
double auc(std::span<const double> values, double max_threshold = kAucDefaultMaxThreshold,
           std::size_t steps = kAucDefaultSteps);

// Vote confidence score: fraction of entries within rho of GT.
VcsResult vcs(const RadiiMatrix& estimated, const RadiiMatrix& gt, double rho);

// Binary mean IoU over {background, foreground}; a class absent from both
// inputs scores 1.
double miou(std::span<const int> predicted, std::span<const int> gt);

}  // namespace radvote
