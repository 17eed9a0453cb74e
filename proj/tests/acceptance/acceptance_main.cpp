// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.

#include "radvote/error.hpp"
#include "radvote/experiment.hpp"
#include "radvote/losses.hpp"
#include "radvote/metrics.hpp"
#include "radvote/pose.hpp"
#include "radvote/rng.hpp"
#include "radvote/simulator.hpp"
#include "radvote/voting.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace radvote;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs <= budget_seconds;
  const bool pass = o.pass && in_time;
  if (!pass) ++g_failures;
  std::printf("[%s] %2d %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              o.detail.c_str(), secs, budget_seconds, in_time ? "" : ", OVER BUDGET");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

RadiiMatrix uniform_matrix(Eigen::Index m, Eigen::Index k, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  RadiiMatrix r(m, k);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
  return r;
}

// Largest |fd - analytic| over the largest |analytic| entry.
double fd_relative_error(const std::function<double(const RadiiMatrix&)>& loss, const RadiiMatrix& at,
                         const Eigen::MatrixXd& grad) {
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    RadiiMatrix plus = at, minus = at;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    worst = std::max(worst, std::abs((loss(plus) - loss(minus)) / (2 * h) - grad.data()[i]));
  }
  return worst / grad.cwiseAbs().maxCoeff();
}

Outcome gradients() {
  std::mt19937_64 rng(101);
  double worst_res = 0, worst_pair = 0, worst_comb = 0;
  for (int t = 0; t < 100; ++t) {
    const RadiiMatrix gt = uniform_matrix(8, 3, rng, 0.0, 2.0);
    const RadiiMatrix est = gt + uniform_matrix(8, 3, rng, -2.0, 2.0);
    const LossWeights w = weight_schedule(t % 2 == 0 ? 0 : 150);
    worst_res = std::max(worst_res, fd_relative_error([&](const RadiiMatrix& e) { return residual_loss(e, gt).value; },
                                                      est, residual_loss(est, gt).grad));
    worst_pair = std::max(worst_pair, fd_relative_error([&](const RadiiMatrix& e) { return radial_pair_loss(e, gt).value; },
                                                        est, radial_pair_loss(est, gt).grad));
    worst_comb = std::max(worst_comb, fd_relative_error([&](const RadiiMatrix& e) { return combined_loss(e, gt, w).value; },
                                                        est, combined_loss(est, gt, w).grad));
  }
  const double worst = std::max({worst_res, worst_pair, worst_comb});
  return {worst <= 1e-5, fmt("max relative FD error residual %.2e, pair %.2e, combined %.2e (tol 1e-5)", worst_res,
                             worst_pair, worst_comb)};
}

// Values on a 2^-20 grid below 2^8, so every sum and difference is exact.
Outcome triangle_inequality() {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::int64_t> radius(0, std::int64_t{5} << 20), eps(-(std::int64_t{1} << 20), std::int64_t{1} << 20);
  const double q = std::ldexp(1.0, -20);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const double ri = radius(rng) * q, rj = radius(rng) * q, ei = eps(rng) * q, ej = eps(rng) * q;
    const double est_diff = radial_pair_diff(ri + ei, rj + ej), gt_diff = radial_pair_diff(ri, rj);
    violations += est_diff > gt_diff + std::abs(ei - ej) ? 1 : 0;
    violations += std::abs(est_diff - gt_diff) > std::abs(ei - ej) ? 1 : 0;
  }
  return {violations == 0, fmt("%d violations over 10000 tuples", violations)};
}

Outcome exact_radii_voting() {
  const double rho = 0.05;
  const double bound = rho * std::sqrt(3.0) / 2 + rho;
  const ModelShape shapes[] = {ModelShape::Blobby, ModelShape::Box, ModelShape::Torus, ModelShape::Sphere};
  std::vector<PointCloud> models;
  std::vector<KeypointSet> kps;
  for (auto s : shapes) {
    models.push_back(make_model(s, 2000, 7));
    kps.push_back(fps_keypoints(models.back(), 3));
  }
  int within = 0, decided = 0;
  double worst = 0.0;
  PipelineParams params;
  params.rho = rho;
  params.vote_budget = 1024;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const std::size_t m = seed % 4;
    const Scene scene = synth_scene(models[m], kps[m], {}, scene_seed(seed), std::string(to_string(shapes[m])),
                                    is_symmetric(shapes[m]));
    NoiseModel noise;
    noise.rng_seed = noise_seed(seed);
    const auto r = run_cascade(scene, params, 0.0, noise, models[m], kps[m]);
    bool all = true;
    for (double e : r.report.keypoint_errors) {
      worst = std::max(worst, e);
      all = all && e <= bound;
    }
    within += all ? 1 : 0;
    decided += r.report.success ? 1 : 0;
  }
  return {within == 100 && decided == 100,
          fmt("%d/100 scenes with all keypoints within %.4f (worst %.4f), ADD(S) decision true in %d/100", within,
              bound, worst, decided)};
}

Outcome vcs_analytic() {
  const double rho = 0.01;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud pts;
  for (int i = 0; i < 33334; ++i) pts.points.emplace_back(u(rng), u(rng), u(rng));
  const std::vector<Point3> kps{Point3(0.2, -0.1, 0.3), Point3(-0.4, 0.5, 0.0), Point3(0.1, 0.6, -0.5)};
  const RadiiMatrix gt = gt_radii(pts, kps);
  std::string detail;
  bool ok = true;
  for (double ratio : {0.25, 0.5, 1.0}) {
    NoiseModel n;
    n.gaussian_sigma = ratio * rho;
    n.rng_seed = static_cast<std::uint64_t>(ratio * 1000);
    const double got = vcs(oracle_regressor(pts, kps, n), gt, rho).score;
    const double expect = std::erf(rho / (n.gaussian_sigma * std::sqrt(2.0)));
    ok = ok && std::abs(got - expect) <= 0.02;
    detail += fmt("sigma=%.2f rho: %.4f vs %.4f; ", ratio, got, expect);
  }
  detail += fmt("%d entries per level", static_cast<int>(gt.size()));
  return {ok, detail};
}

ExperimentConfig config_in(const char* file, const std::filesystem::path& out) {
  ExperimentConfig c = load_config(std::filesystem::path(RADVOTE_CONFIG_DIR) / file);
  c.output_dir = out;
  return c;
}

std::filesystem::path g_run_a, g_run_b;

Outcome cascade_vs_parallel() {
  const ExperimentConfig c = config_in("cascade_vs_parallel.json", g_run_a / "cascade_vs_parallel");
  const bool regime = c.seeds.size() == 200 && c.scene.clutter_fraction == 0.85 && c.seg_flip == 0.05 &&
                      c.sigma_over_rho == 0.25 && c.outlier_fraction == 0.1;
  const auto s = run_experiment(c).summary;
  const double cascade = s["architectures"]["cascade"]["success_rate"];
  const double parallel = s["architectures"]["parallel"]["success_rate"];
  const double vcs_frac = s["paired"]["vcs_cascade_ge_parallel_fraction"];
  return {regime && cascade - parallel > 0.0 && vcs_frac >= 0.95,
          fmt("success cascade %.3f vs parallel %.3f (margin %+.3f); VCS(cascade) >= VCS(parallel) on %.1f%% of %zu "
              "pairs; mean VCS %.3f vs %.3f",
              cascade, parallel, cascade - parallel, 100 * vcs_frac, c.seeds.size(),
              s["architectures"]["cascade"]["mean_vcs"].get<double>(),
              s["architectures"]["parallel"]["mean_vcs"].get<double>())};
}

Outcome votes_ablation() {
  const ExperimentConfig c = config_in("votes_ablation.json", g_run_a / "votes_ablation");
  const auto s = run_experiment(c).summary;
  double first = -1, last = -1, previous = -1;
  bool non_decreasing = true, covered_128 = false, covered_1024 = false;
  std::string curve;
  for (const auto& e : s["curve"]) {
    const std::size_t m = e["votes"];
    const double rate = e["success_rate"];
    curve += fmt("%zu:%.2f ", m, rate);
    if (m < 128 || m > 1024) continue;
    if (m == 128) first = rate, covered_128 = true;
    if (m == 1024) last = rate, covered_1024 = true;
    non_decreasing = non_decreasing && rate >= previous;
    previous = rate;
  }
  const bool ok = c.seeds.size() >= 100 && covered_128 && covered_1024 && non_decreasing && last > first;
  return {ok, fmt("success rate by M over %zu seeds: %s(non-decreasing 128..1024: %s)", c.seeds.size(), curve.c_str(),
                  non_decreasing ? "yes" : "no")};
}

Outcome loss_ablation() {
  const ExperimentConfig c = config_in("loss_ablation.json", g_run_a / "loss_ablation");
  const auto s = run_experiment(c).summary;
  const double frac = s["combined_no_slower_fraction"];
  return {c.seeds.size() == 50 && c.loss.threshold == 1e-3 && frac >= 0.8,
          fmt("combined reaches residual loss < 1e-3 no later than residual-only on %.0f%% of %zu trials (mean steps "
              "%.1f vs %.1f)",
              100 * frac, c.seeds.size(), s["combined"]["mean_steps"].get<double>(),
              s["residual_only"]["mean_steps"].get<double>())};
}

RigidTransform random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(-3, 3);
  return {random_rotation(rng()), Point3(t(rng), t(rng), t(rng))};
}

double fit_cost(const std::vector<Point3>& obj, const std::vector<Point3>& scene, const Eigen::Matrix3d& r) {
  Point3 co = Point3::Zero(), cs = Point3::Zero();
  for (std::size_t i = 0; i < obj.size(); ++i) co += obj[i], cs += scene[i];
  co /= static_cast<double>(obj.size());
  cs /= static_cast<double>(obj.size());
  double cost = 0.0;
  for (std::size_t i = 0; i < obj.size(); ++i) cost += (r * (obj[i] - co) - (scene[i] - cs)).squaredNorm();
  return cost;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double a = w.norm();
  if (a < 1e-15) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

Outcome pose_fitting() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst_r = 0, worst_t = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<Point3> obj, scene;
    const int n = 3 + i % 10;
    for (int k = 0; k < n; ++k) obj.emplace_back(u(rng), u(rng), u(rng));
    const RigidTransform gt = random_pose(rng);
    for (const auto& p : obj) scene.push_back(gt * p);
    const RigidTransform est = fit_rigid(obj, scene);
    worst_r = std::max(worst_r, (est.rotation() - gt.rotation()).norm());
    worst_t = std::max(worst_t, (est.translation() - gt.translation()).norm());
  }

  // Brute force over a cubic grid of rotation vectors inside the ball of radius pi.
  const double step = 5.0 * kPi / 180.0;
  const int half = static_cast<int>(std::ceil(kPi / step));
  std::vector<Eigen::Matrix3d> grid;
  for (int a = -half; a <= half; ++a)
    for (int b = -half; b <= half; ++b)
      for (int c = -half; c <= half; ++c) {
        const Eigen::Vector3d w(a * step, b * step, c * step);
        if (w.norm() <= kPi + 1e-12) grid.push_back(exp_so3(w));
      }
  std::normal_distribution<double> noise(0.0, 0.05);
  int agree = 0;
  double worst_angle = 0;
  for (int i = 0; i < 10; ++i) {
    std::vector<Point3> obj, scene;
    for (int k = 0; k < 20; ++k) obj.push_back(Point3(u(rng), u(rng), u(rng)).normalized());
    const RigidTransform gt = random_pose(rng);
    for (const auto& p : obj) scene.push_back(gt * p + Point3(noise(rng), noise(rng), noise(rng)));
    const RigidTransform est = fit_rigid(obj, scene);
    double best = std::numeric_limits<double>::infinity();
    Eigen::Matrix3d arg;
    for (const auto& r : grid) {
      const double cost = fit_cost(obj, scene, r);
      if (cost < best) best = cost, arg = r;
    }
    const double angle = rotation_angle_between(arg, est.rotation());
    worst_angle = std::max(worst_angle, angle);
    agree += (fit_cost(obj, scene, est.rotation()) <= best + 1e-12 && angle <= 2 * step) ? 1 : 0;
  }
  const bool ok = worst_r < 1e-9 && worst_t < 1e-9 && agree == 10;
  return {ok, fmt("exact recovery worst rotation %.2e, translation %.2e over 1000; grid (%zu rotations, step 5 deg) "
                  "agrees on %d/10 with SVD cost <= grid best, worst angle %.2f deg (tol %.0f deg)",
                  worst_r, worst_t, grid.size(), agree, worst_angle * 180 / kPi, 2 * step * 180 / kPi)};
}

Outcome icp_monotonicity() {
  const PointCloud model = make_model(ModelShape::Blobby, 1000, 9);
  std::mt19937_64 rng(909);
  std::normal_distribution<double> g(0.0, 1.0);
  int improved = 0;
  for (int t = 0; t < 100; ++t) {
    const RigidTransform gt = random_pose(rng);
    const PointCloud scene = apply_transform(model, gt);
    const Point3 axis = Point3(g(rng), g(rng), g(rng)).normalized();
    const Point3 shift = 0.01 * Point3(g(rng), g(rng), g(rng)).normalized();
    const RigidTransform start = RigidTransform::from_axis_angle(axis, 2.0 * kPi / 180.0, shift) * gt;
    improved += add_metric(model, gt, icp_refine(model, scene, start)) < add_metric(model, gt, start) ? 1 : 0;
  }
  return {improved >= 95, fmt("final ADD < initial ADD in %d/100 trials", improved)};
}

Outcome metric_oracles() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(-1, 1);
  int dominated = 0;
  for (int t = 0; t < 1000; ++t) {
    PointCloud model;
    for (int i = 0; i < 50; ++i) model.points.emplace_back(u(rng), u(rng), u(rng));
    const RigidTransform gt = random_pose(rng), est = random_pose(rng);
    dominated += add_s_metric(model, gt, est) <= add_metric(model, gt, est) ? 1 : 0;
  }
  const std::vector<double> zeros(100, 0.0);
  const double auc_zero = auc(zeros);
  std::uniform_real_distribution<double> e(0.0, kAucDefaultMaxThreshold);
  std::vector<double> uniform(10000);
  for (auto& v : uniform) v = e(rng);
  const double auc_uniform = auc(uniform);
  PointCloud model;
  for (int i = 0; i < 500; ++i) model.points.emplace_back(u(rng), u(rng), u(rng));
  const RigidTransform gt(random_rotation(rng()), Point3::Zero());
  const RigidTransform shifted(gt.rotation(), Point3(0.01, 0, 0));
  const double add_shift = add_metric(model, gt, shifted);
  const bool ok = dominated == 1000 && auc_zero == 1.0 && std::abs(auc_uniform - 0.5) <= 0.02 && add_shift == 0.01;
  return {ok, fmt("ADD-S <= ADD on %d/1000; AUC(zeros) = %.17g; AUC(uniform) = %.4f; ADD(0.01 offset) = %.17g",
                  dominated, auc_zero, auc_uniform, add_shift)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  int compared = 0, identical = 0;
  for (const char* name : {"cascade_vs_parallel", "votes_ablation", "loss_ablation"}) {
    run_experiment(config_in((std::string(name) + ".json").c_str(), g_run_b / name));
    for (const auto& entry : std::filesystem::directory_iterator(g_run_a / name)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      const auto other = g_run_b / name / entry.path().filename();
      identical += std::filesystem::exists(other) && slurp(entry.path()) == slurp(other) ? 1 : 0;
    }
  }
  return {compared > 0 && identical == compared, fmt("%d/%d CSV files byte-identical across two runs", identical, compared)};
}

Outcome merge_equivalence() {
  std::mt19937_64 rng(1212);
  std::uniform_real_distribution<double> u(-1.2, 1.2), r(0.0, 1.5);
  int equal = 0;
  for (int set = 0; set < 20; ++set) {
    const int parts = 2 + set % 5;
    Accumulator3D sequential(Point3::Constant(-1), Point3::Constant(1), 0.05);
    std::vector<Accumulator3D> shards(static_cast<std::size_t>(parts), sequential);
    for (int v = 0; v < 300; ++v) {
      const Point3 voter(u(rng), u(rng), u(rng));
      auto& shard = shards[rng() % static_cast<std::uint64_t>(parts)];
      if (v % 3 == 0) {
        const Eigen::Vector3d offset(u(rng), u(rng), u(rng));
        cast_offset_vote(sequential, voter, offset);
        cast_offset_vote(shard, voter, offset);
      } else {
        const double radius = r(rng);
        cast_radial_vote(sequential, voter, radius);
        cast_radial_vote(shard, voter, radius);
      }
    }
    Accumulator3D merged = shards[0];
    for (std::size_t i = 1; i < shards.size(); ++i) merged = merge(merged, shards[i]);
    equal += merged == sequential ? 1 : 0;
  }
  return {equal == 20, fmt("%d/20 merged accumulators bit-equal to sequential accumulation", equal)};
}

}  // namespace

int main() {
  const auto root = std::filesystem::temp_directory_path() / "radvote_acceptance";
  std::filesystem::remove_all(root);
  g_run_a = root / "run_a";
  g_run_b = root / "run_b";

  criterion(1, "gradient correctness", 1, gradients);
  criterion(2, "triangle inequality", 1, triangle_inequality);
  criterion(3, "exact-radii voting", 30, exact_radii_voting);
  criterion(4, "VCS analytic check", 10, vcs_analytic);
  criterion(5, "cascade >= parallel", 300, cascade_vs_parallel);
  criterion(6, "vote-count ablation trend", 300, votes_ablation);
  criterion(7, "loss ablation convergence", 60, loss_ablation);
  criterion(8, "pose fitting", 5, pose_fitting);
  criterion(9, "ICP monotonicity", 30, icp_monotonicity);
  criterion(10, "metric oracles", 60, metric_oracles);
  criterion(11, "determinism", 600, determinism);
  criterion(12, "merge equivalence", 60, merge_equivalence);

  std::printf("%d of 12 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
