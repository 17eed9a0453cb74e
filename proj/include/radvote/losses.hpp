#pragma once

#include "radvote/keypoints.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace radvote {

struct LossWeights {
  double alpha = 0.8;
  double beta = 0.2;
};

// Throws Argument unless both weights are in [0, 1] and sum to 1 (1e-12).
void validate_weights(const LossWeights& w);

struct LossValueGrad {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d loss / d estimated radius, same shape as the input
};

struct SmoothL1 {
  double value;
  double derivative;
};

// Transition point at |x| = 1.
SmoothL1 smooth_l1(double x);

// Mean smooth-L1 of |estimated - gt| over all M x K entries.
LossValueGrad residual_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt);

inline double radial_pair_diff(double r_i, double r_j) { return r_i > r_j ? r_i - r_j : r_j - r_i; }

// Radial Pair Loss: smooth-L1 of the mismatch between GT and estimated radial
// pair differences, averaged over the M * K(K-1)/2 unordered pairs.
LossValueGrad radial_pair_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt);

LossValueGrad combined_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt, const LossWeights& w);

// (0.8, 0.2) for epochs 0-99, (0.2, 0.8) afterwards.
LossWeights weight_schedule(std::size_t epoch);

// Binary cross entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probabilities, std::span<const int> labels);

enum class LossKind { ResidualOnly, CombinedWithSchedule };

struct TraceEntry {
  std::size_t step = 0;
  double loss = 0.0;           // the optimized loss
  double residual_loss = 0.0;  // the residual term alone, for comparisons
  double alpha = 1.0;
  double beta = 0.0;
};

struct ToyFitResult {
  RadiiMatrix final_radii;
  std::vector<TraceEntry> trace;  // one entry per step, evaluated before the update
};

// Plain gradient descent directly on the radii. Throws Divergence (with the
// step index as location) if the loss becomes non-finite.
ToyFitResult toy_fit(const RadiiMatrix& gt, const RadiiMatrix& init, LossKind kind, std::size_t steps,
                     double lr);

// First trace step whose residual loss is below threshold, if any.
std::optional<std::size_t> steps_to_residual(const std::vector<TraceEntry>& trace, double threshold);

}  // namespace radvote
