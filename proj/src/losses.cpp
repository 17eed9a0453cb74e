#include "radvote/losses.hpp"

#include "radvote/error.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace radvote {

namespace {

double sign0(double x) { return (x > 0.0) - (x < 0.0); }

void check_same_shape(const RadiiMatrix& a, const RadiiMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::Argument, "estimated and GT radii must have the same dimensions");
  }
  if (a.size() == 0) throw Error(ErrorKind::Argument, "radii matrices are empty");
}

}  // namespace

void validate_weights(const LossWeights& w) {
  if (!(w.alpha >= 0.0 && w.alpha <= 1.0 && w.beta >= 0.0 && w.beta <= 1.0) ||
      std::abs(w.alpha + w.beta - 1.0) > 1e-12) {
    throw Error(ErrorKind::Argument, "loss weights must lie in [0, 1] and sum to 1");
  }
}

SmoothL1 smooth_l1(double x) {
  const double ax = std::abs(x);
  if (ax < 1.0) return {0.5 * x * x, x};
  return {ax - 0.5, sign0(x)};
}

LossValueGrad residual_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt) {
  check_same_shape(estimated, gt);
  const double norm = 1.0 / static_cast<double>(estimated.size());
  LossValueGrad out{0.0, Eigen::MatrixXd::Zero(estimated.rows(), estimated.cols())};
  for (Eigen::Index k = 0; k < estimated.cols(); ++k) {
    for (Eigen::Index m = 0; m < estimated.rows(); ++m) {
      const double eps = estimated(m, k) - gt(m, k);
      const SmoothL1 s = smooth_l1(std::abs(eps));
      out.value += s.value;
      out.grad(m, k) = norm * s.derivative * sign0(eps);
    }
  }
  out.value *= norm;
  return out;
}

LossValueGrad radial_pair_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt) {
  check_same_shape(estimated, gt);
  const Eigen::Index rows = estimated.rows();
  const Eigen::Index kps = estimated.cols();
  if (kps < 2) throw Error(ErrorKind::Argument, "radial pair loss needs at least 2 keypoints");
  const double norm = 2.0 / (static_cast<double>(rows) * static_cast<double>(kps * (kps - 1)));
  LossValueGrad out{0.0, Eigen::MatrixXd::Zero(rows, kps)};
  for (Eigen::Index m = 0; m < rows; ++m) {
    for (Eigen::Index i = 0; i < kps; ++i) {
      for (Eigen::Index j = i + 1; j < kps; ++j) {
        const double gt_diff = radial_pair_diff(gt(m, i), gt(m, j));
        const double est_signed = estimated(m, i) - estimated(m, j);
        const double mismatch = gt_diff - std::abs(est_signed);
        const SmoothL1 s = smooth_l1(std::abs(mismatch));
        out.value += s.value;
        // d|mismatch| / d est_i = sign(mismatch) * -sign(est_i - est_j)
        const double g = norm * s.derivative * sign0(mismatch) * -sign0(est_signed);
        out.grad(m, i) += g;
        out.grad(m, j) -= g;
      }
    }
  }
  out.value *= norm;
  return out;
}

LossValueGrad combined_loss(const RadiiMatrix& estimated, const RadiiMatrix& gt, const LossWeights& w) {
  validate_weights(w);
  LossValueGrad res = residual_loss(estimated, gt);
  LossValueGrad pair = radial_pair_loss(estimated, gt);
  return {w.alpha * res.value + w.beta * pair.value, w.alpha * res.grad + w.beta * pair.grad};
}

LossWeights weight_schedule(std::size_t epoch) {
  if (epoch < 100) return {0.8, 0.2};
  return {0.2, 0.8};
}

double bce_loss(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(ErrorKind::Argument, "probabilities and labels differ in length");
  }
  if (probabilities.empty()) throw Error(ErrorKind::Argument, "bce of an empty batch");
  constexpr double kClamp = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = std::clamp(probabilities[i], kClamp, 1.0 - kClamp);
    sum += labels[i] != 0 ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(probabilities.size());
}

ToyFitResult toy_fit(const RadiiMatrix& gt, const RadiiMatrix& init, LossKind kind, std::size_t steps,
                     double lr) {
  if (steps < 1) throw Error(ErrorKind::Argument, "toy_fit needs at least one step");
  if (!(lr > 0.0)) throw Error(ErrorKind::Argument, "learning rate must be positive");
  check_same_shape(init, gt);

  ToyFitResult result{init, {}};
  result.trace.reserve(steps);
  for (std::size_t step = 0; step < steps; ++step) {
    const LossWeights w = kind == LossKind::ResidualOnly ? LossWeights{1.0, 0.0} : weight_schedule(step);
    LossValueGrad res = residual_loss(result.final_radii, gt);
    LossValueGrad total = res;
    if (kind == LossKind::CombinedWithSchedule) total = combined_loss(result.final_radii, gt, w);
    if (!std::isfinite(total.value) || !total.grad.allFinite()) {
      throw Error(ErrorKind::Divergence, "loss became non-finite during descent", step);
    }
    result.trace.push_back({step, total.value, res.value, w.alpha, w.beta});
    result.final_radii -= lr * total.grad;
  }
  if (!result.final_radii.allFinite()) throw Error(ErrorKind::Divergence, "radii diverged", steps);
  return result;
}

std::optional<std::size_t> steps_to_residual(const std::vector<TraceEntry>& trace, double threshold) {
  for (const auto& e : trace) {
    if (e.residual_loss < threshold) return e.step;
  }
  return std::nullopt;
}

}  // namespace radvote
