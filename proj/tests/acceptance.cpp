// Acceptance suite: one self-contained check per criterion, each printing a
// single [PASS]/[FAIL] line. Run with --only N to execute one criterion.
//
// Tolerances are pinned here on purpose; they should not be loosened to make
// a run green. Monte Carlo reference quantiles that take minutes to compute
// are frozen as constants with their generating configuration recorded next
// to them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ibgeo/encoder_lab.hpp"
#include "ibgeo/ib_exact.hpp"
#include "ibgeo/manifold.hpp"
#include "ibgeo/maxent_chain.hpp"
#include "ibgeo/prob.hpp"
#include "ibgeo/rng.hpp"
#include "ibgeo/sigreg.hpp"
#include "ibgeo/tasks.hpp"

namespace {

using namespace ibgeo;

std::vector<std::string> g_notes;

bool expect(bool ok, const std::string& note) {
  if (!ok) g_notes.push_back(note);
  return ok;
}

bool expect_near(double value, double target, double tol,
                 const std::string& what) {
  std::ostringstream os;
  os.precision(10);
  os << what << " = " << value << ", want " << target << " +- " << tol;
  return expect(std::abs(value - target) <= tol, os.str());
}

JointPMF random_joint(int nx, int ny, std::uint64_t seed) {
  const CounterRng rng(seed);
  Eigen::MatrixXd t(nx, ny);
  std::uint64_t c = 0;
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) t(x, y) = rng.uniform(c++) + 0.02;
  return JointPMF(t);
}

EncoderKernel random_encoder(int nx, int nw, std::uint64_t seed) {
  const CounterRng rng(seed);
  Eigen::MatrixXd rows(nx, nw);
  std::uint64_t c = 0;
  for (int x = 0; x < nx; ++x) {
    for (int w = 0; w < nw; ++w) rows(x, w) = rng.uniform(c++) + 0.05;
    rows.row(x) /= rows.row(x).sum();
  }
  return EncoderKernel(rows);
}

const std::vector<double> kBetaGrid{0.5, 5, 10, 25, 50, 100, 250};

// ---------------------------------------------------------------------------
// 1. Binary task exactness.
// ---------------------------------------------------------------------------
bool criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const InformationPlaneSummary s = information_plane_summary(binary_task());
  bool ok = true;
  ok &= expect_near(s.ixy, 0.36806, 1e-4, "I(X;Y)");
  ok &= expect_near(s.h_wstar, std::log(2.0), 1e-6, "H(W*)");
  ok &= expect_near(s.h_wstar_given_y, 0.32508, 1e-4, "H(W*|Y)");
  ok &= expect_near(s.timesharing_slope, 0.531, 1e-3, "time-sharing slope");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 1.0, "runtime " + std::to_string(secs) + "s >= 1s");
  return ok;
}

// ---------------------------------------------------------------------------
// 2. Blahut-Arimoto endpoints on binary and ternary.
// ---------------------------------------------------------------------------
bool criterion_2() {
  bool ok = true;
  for (const char* name : {"binary", "ternary"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const JointPMF j = discrete_task_by_name(name);
    const double ixy = mutual_information(j);
    const double h_wstar = minimal_sufficient_statistic(j).h_wstar;

    const OperatingPoint hard = solve_at_beta(j, 250.0);
    ok &= expect(hard.converged, std::string(name) + ": beta=250 diverged");
    ok &= expect(hard.epsilon < 1e-5,
                 std::string(name) + ": beta=250 epsilon " +
                     std::to_string(hard.epsilon));
    ok &= expect_near(hard.rate, h_wstar, 1e-3,
                      std::string(name) + " beta=250 rate");

    const OperatingPoint soft = solve_at_beta(j, 0.5);
    ok &= expect(soft.converged, std::string(name) + ": beta=0.5 diverged");
    ok &= expect(soft.rate < 1e-6, std::string(name) + ": beta=0.5 rate " +
                                       std::to_string(soft.rate));
    ok &= expect_near(soft.epsilon, ixy, 1e-5,
                      std::string(name) + " beta=0.5 epsilon");

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    ok &= expect(secs < 10.0, std::string(name) + ": runtime " +
                                  std::to_string(secs) + "s >= 10s");
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 3. Curve shape on random joints: monotone in beta, concave polyline.
// ---------------------------------------------------------------------------
bool criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const IBCurve curve =
        trace_curve(random_joint(8, 4, 9000 + trial), kBetaGrid);
    for (size_t i = 1; i < curve.points.size(); ++i) {
      ok &= expect(curve.points[i].epsilon <=
                       curve.points[i - 1].epsilon + 1e-6,
                   "trial " + std::to_string(trial) + ": epsilon rose at i=" +
                       std::to_string(i));
      ok &= expect(curve.points[i].rate >= curve.points[i - 1].rate - 1e-6,
                   "trial " + std::to_string(trial) + ": rate fell at i=" +
                       std::to_string(i));
    }
    // Concavity of the (R, Delta) polyline: chord slopes non-increasing,
    // skipping segments too short for the slope to be well conditioned.
    double prev_slope = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < curve.points.size(); ++i) {
      const double dr = curve.points[i].rate - curve.points[i - 1].rate;
      if (dr < 1e-9) continue;
      const double slope =
          (curve.points[i].delta - curve.points[i - 1].delta) / dr;
      ok &= expect(slope <= prev_slope + 1e-5,
                   "trial " + std::to_string(trial) + ": slope rose from " +
                       std::to_string(prev_slope) + " to " +
                       std::to_string(slope) + " at i=" + std::to_string(i));
      prev_slope = slope;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 120.0, "runtime " + std::to_string(secs) + "s >= 2min");
  return ok;
}

// ---------------------------------------------------------------------------
// 4. Deterministic-task diagonal and endpoint.
// ---------------------------------------------------------------------------
bool criterion_4() {
  const IBCurve curve = trace_curve(deterministic_task(), kBetaGrid);
  bool ok = true;
  for (const auto& p : curve.points) {
    if (!p.converged) continue;
    ok &= expect(std::abs(p.delta - p.rate) < 1e-5,
                 "off-diagonal point at beta " + std::to_string(p.beta));
  }
  const auto& end = curve.points.back();
  ok &= expect_near(end.rate, std::log(2.0), 1e-5, "endpoint rate");
  ok &= expect_near(end.delta, std::log(2.0), 1e-5, "endpoint delta");
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Objective equivalence: exact CEB - exact IB Lagrangian = -beta I(X;Y).
// ---------------------------------------------------------------------------
bool criterion_5() {
  const JointPMF j = binary_task();
  const double ixy = mutual_information(j);
  bool ok = true;
  for (double beta : {1.5, 10.0, 250.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const EncoderKernel enc = random_encoder(j.nx(), 3, 500 + trial);
      const double r = rate(j, enc);
      const double iwy = predictive_information(j, enc);
      const double eps = conditional_mi_xy_given_w(j, enc);
      // I(X;W|Y) = I(X;W) - I(W;Y) under the W - X - Y Markov chain.
      const double ceb = beta * (r - iwy) + (1.0 - beta) * r;
      const double ib_lagrangian = r + beta * eps;
      ok &= expect(std::abs(ceb - ib_lagrangian + beta * ixy) < 1e-9,
                   "beta " + std::to_string(beta) + " trial " +
                       std::to_string(trial) + ": residual " +
                       std::to_string(ceb - ib_lagrangian + beta * ixy));
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 6. Flat portion: refinement (W*, X) gives rate H(X) and Delta = I(X;Y).
// ---------------------------------------------------------------------------
bool criterion_6() {
  bool ok = true;
  for (const char* name : {"binary", "discrete_clusters"}) {
    const JointPMF j = discrete_task_by_name(name);
    const FlatPortionReport rep = flat_portion_check(j, 1e-9);
    ok &= expect(rep.ok, std::string(name) + ": flat-portion flag false");
    ok &= expect(std::abs(rep.rate - rep.hx) < 1e-9,
                 std::string(name) + ": rate != H(X)");
    ok &= expect(std::abs(rep.delta - rep.ixy) < 1e-9,
                 std::string(name) + ": delta != I(X;Y)");
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Chain exactness and moments.
// ---------------------------------------------------------------------------
bool criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;

  const int n = 1000000;
  const auto samples = sample_chain(3, n, 71);
  double worst = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(3);
  for (const auto& s : samples) {
    for (int k = 0; k < 3; ++k) {
      const double r2 = s.gauss(2 * k) * s.gauss(2 * k) +
                        s.gauss(2 * k + 1) * s.gauss(2 * k + 1);
      worst = std::max(worst, std::abs(s.expo(k) - r2));
    }
    worst = std::max(
        worst, (s.simplex - s.expo / s.expo.sum()).cwiseAbs().maxCoeff());
    mean += s.simplex / n;
    second += s.simplex.cwiseProduct(s.simplex) / n;
  }
  ok &= expect(worst < 1e-12, "within-sample identity residual " +
                                  std::to_string(worst));
  const double var_target = 2.0 / (9.0 * 4.0);  // (K-1)/(K^2 (K+1)), K = 3
  for (int k = 0; k < 3; ++k) {
    ok &= expect_near(mean(k), 1.0 / 3.0, 0.002,
                      "simplex mean, coordinate " + std::to_string(k));
    ok &= expect_near(second(k) - mean(k) * mean(k), var_target, 0.003,
                      "simplex variance, coordinate " + std::to_string(k));
  }

  const int n2 = 200000;
  const auto pair = sample_chain(2, n2, 72);
  std::vector<double> u(n2);
  for (int i = 0; i < n2; ++i) u[i] = pair[i].simplex(0);
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (int i = 0; i < n2; ++i) {
    ks = std::max(ks, std::abs(u[i] - (i + 1.0) / n2));
    ks = std::max(ks, std::abs(u[i] - static_cast<double>(i) / n2));
  }
  ok &= expect(ks < 0.005, "K=2 KS distance " + std::to_string(ks));

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 30.0, "runtime " + std::to_string(secs) + "s >= 30s");
  return ok;
}

// ---------------------------------------------------------------------------
// 8. Phase invariance of the simplex map under SO(2)^K.
// ---------------------------------------------------------------------------
bool criterion_8() {
  const CounterRng rng(81);
  std::uint64_t c = 0;
  bool ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd w(8), rotated(8);
    for (int i = 0; i < 8; ++i) w(i) = rng.normal(c++);
    for (int k = 0; k < 4; ++k) {
      const double phi = 2.0 * M_PI * rng.uniform(c++);
      const double cs = std::cos(phi), sn = std::sin(phi);
      rotated(2 * k) = cs * w(2 * k) - sn * w(2 * k + 1);
      rotated(2 * k + 1) = sn * w(2 * k) + cs * w(2 * k + 1);
    }
    const double diff = (simplex_map(w).probs() - simplex_map(rotated).probs())
                            .cwiseAbs()
                            .maxCoeff();
    ok &= expect(diff < 1e-12,
                 "trial " + std::to_string(trial) + ": rotation moved the "
                 "simplex point by " + std::to_string(diff));
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 9. Overhead accounting.
// ---------------------------------------------------------------------------
bool criterion_9() {
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {2, 10, 100, 1000}) {
    const OverheadReport rep = overhead_report(k);
    ok &= expect(std::abs(rep.scale_overhead -
                          0.5 * std::log(2.0 * M_PI * M_E * k)) < 1e-12,
                 "scale overhead formula, K = " + std::to_string(k));
    ok &= expect(std::abs(rep.phase_overhead - k * std::log(2.0 * M_PI)) <
                     1e-12,
                 "phase overhead formula, K = " + std::to_string(k));
    const double per_coord = rep.scale_overhead / k;
    ok &= expect(per_coord < prev,
                 "scale_overhead/K not decreasing at K = " +
                     std::to_string(k));
    prev = per_coord;
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 10. SIGReg discrimination against a frozen Monte Carlo null band.
// ---------------------------------------------------------------------------
bool criterion_10() {
  const auto t0 = std::chrono::steady_clock::now();
  // Null band of sigreg_null_band(4096, {m=64, dim=20, seed=123},
  // replicates=1000, seed=124), frozen because the full Monte Carlo run
  // takes ~15 minutes on this grid.
  const double q01 = 0.271342145716;
  const double q99 = 0.629480520805;
  const int n = 4096, dim = 20;
  SketchConfig sketch;
  sketch.m = 64;
  sketch.dim = dim;
  sketch.seed = 123;

  bool ok = true;
  auto gaussian_batch = [&](std::uint64_t seed, double scale) {
    const CounterRng rng(seed);
    Eigen::MatrixXd b(n, dim);
    std::uint64_t c = 0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < dim; ++d) b(i, d) = scale * rng.normal(c++);
    return b;
  };

  for (std::uint64_t seed : {5001, 5002, 5003}) {
    const double stat = sigreg_loss(gaussian_batch(seed, 1.0), sketch).statistic;
    ok &= expect(stat >= q01 && stat <= q99,
                 "null batch seed " + std::to_string(seed) + ": statistic " +
                     std::to_string(stat) + " outside [" +
                     std::to_string(q01) + ", " + std::to_string(q99) + "]");
  }

  const Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(n, dim, 0.7);
  const double stat_const = sigreg_loss(constant, sketch).statistic;
  ok &= expect(stat_const > 100.0 * q99,
               "constant batch statistic " + std::to_string(stat_const) +
                   " <= 100x band");

  const double stat_scaled =
      sigreg_loss(gaussian_batch(5004, 2.0), sketch).statistic;  // N(0, 4I)
  ok &= expect(stat_scaled > 10.0 * q99,
               "N(0,4I) batch statistic " + std::to_string(stat_scaled) +
                   " <= 10x band");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 60.0, "runtime " + std::to_string(secs) + "s >= 1min");
  return ok;
}

// ---------------------------------------------------------------------------
// 11. LOO estimator calibration on the binary task.
// ---------------------------------------------------------------------------
bool criterion_11() {
  const JointPMF j = binary_task();
  const DiscretePanel panel = panel_from_joint(j);
  // Sharp two-component encoder realizing the MSS channel W = W*(X):
  // inputs {0, 1} share one concentration row, {2, 3} the other.
  Eigen::MatrixXd alphas(4, 2);
  alphas << 400, 4, 400, 4, 4, 400, 4, 400;
  const DirichletEncoder enc = DirichletEncoder::from_alphas(alphas);

  EstimatorConfig cfg;
  cfg.s = 64;
  cfg.seed = 211;
  const PluginEstimates est = plugin_estimates(enc, panel, 2048, cfg);

  // Exact discrete references for the MSS kernel from prob-core.
  Eigen::MatrixXd mss_rows(4, 2);
  mss_rows << 1, 0, 1, 0, 0, 1, 0, 1;
  const EncoderKernel mss(mss_rows);
  const double exact_rate = rate(j, mss);
  const double exact_cond = exact_rate - predictive_information(j, mss);

  bool ok = true;
  ok &= expect_near(est.rate, exact_rate, 0.05, "LOO total rate");
  ok &= expect_near(est.cond_rate, exact_cond, 0.05, "LOO conditional rate");
  return ok;
}

// ---------------------------------------------------------------------------
// 12. Toy reproduction on discrete clusters (CEB objective).
// ---------------------------------------------------------------------------
bool criterion_12() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;

  TrainConfig cfg;
  cfg.epochs = 700;
  cfg.s_train = 2;
  cfg.lr = 0.1;
  cfg.batch_n = 2048;
  cfg.lr_min_frac = 0.05;
  cfg.record_every = 700;
  const TrainReport sharp =
      train_toy(ToyTask::discrete_clusters, ToyObjective::ceb_loo, 250.0, cfg);
  ok &= expect(!sharp.diverged, "beta=250 run diverged");
  ok &= expect_near(sharp.final_estimates.rate, std::log(10.0), 0.1,
                    "beta=250 plug-in rate");
  ok &= expect(sharp.final_estimates.rate < std::log(20.0) - 0.5,
               "beta=250 rate " + std::to_string(sharp.final_estimates.rate) +
                   " not >= 0.5 below log 20");
  ok &= expect(sharp.final_estimates.epsilon < 0.05,
               "beta=250 epsilon " +
                   std::to_string(sharp.final_estimates.epsilon));

  TrainConfig soft_cfg;
  soft_cfg.epochs = 300;
  soft_cfg.s_train = 2;
  soft_cfg.lr = 0.1;
  soft_cfg.batch_n = 256;
  soft_cfg.record_every = 300;
  const TrainReport soft = train_toy(ToyTask::discrete_clusters,
                                     ToyObjective::ceb_loo, 0.5, soft_cfg);
  ok &= expect(!soft.diverged, "beta=0.5 run diverged");
  ok &= expect(soft.final_estimates.rate < 0.05,
               "beta=0.5 rate " + std::to_string(soft.final_estimates.rate));

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 300.0, "runtime " + std::to_string(secs) + "s >= 5min");
  return ok;
}

// ---------------------------------------------------------------------------
// 13. Toy reproduction on the continuous loop (known p(Y|x) objective).
// ---------------------------------------------------------------------------
bool criterion_13() {
  const auto t0 = std::chrono::steady_clock::now();
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.s_train = 4;
  cfg.lr = 0.1;
  cfg.bins = 64;
  cfg.record_every = 100;
  const TrainReport rep = train_toy(ToyTask::continuous_loop,
                                    ToyObjective::ib_known_py, 250.0, cfg);
  bool ok = expect(!rep.diverged, "loop run diverged");
  DirichletEncoder enc(rep.k, static_cast<int>(rep.encoder_weights.cols()),
                       rep.encoder_alpha_min);
  enc.weights() = rep.encoder_weights;
  const double kl = gauge_matched_loop_kl(enc, 256);
  ok &= expect(kl < 0.05, "gauge-matched mean KL " + std::to_string(kl));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  ok &= expect(secs < 300.0, "runtime " + std::to_string(secs) + "s >= 5min");
  return ok;
}

// ---------------------------------------------------------------------------
// 14. Effective dimension and Lipschitz bound.
// ---------------------------------------------------------------------------
bool criterion_14() {
  bool ok = true;

  const PredictiveManifold loop = sample_manifold(continuous_loop_task(), 4096);
  const CoveringProfile loop_prof =
      effective_dimension(loop, default_scales(loop));
  ok &= expect_near(loop_prof.slope_estimate, 1.0, 0.2, "loop slope");
  ok &= expect(!loop_prof.saturated, "loop flagged saturated");

  const JointPMF clusters = discrete_clusters_task();
  std::vector<SimplexPoint> pts;
  for (int x = 0; x < clusters.nx(); ++x)
    pts.push_back(clusters.conditional_y_given_x(x));
  const PredictiveManifold finite(pts);
  const CoveringProfile finite_prof =
      effective_dimension(finite, default_scales(finite));
  ok &= expect(finite_prof.saturated, "10-point manifold not flagged");
  ok &= expect(finite_prof.slope_estimate == 0.0,
               "10-point manifold slope " +
                   std::to_string(finite_prof.slope_estimate));
  for (int c : finite_prof.counts)
    ok &= expect(c <= 10, "covering count " + std::to_string(c) + " > 10");

  const double lip = lipschitz_check(gaussian_channel_task(), 20000);
  ok &= expect(lip <= 0.354 + 0.01,
               "empirical Lipschitz " + std::to_string(lip));
  return ok;
}

// ---------------------------------------------------------------------------
// 15. Finite-difference gradient suite over every trainable loss.
// ---------------------------------------------------------------------------
bool criterion_15() {
  bool ok = true;
  const double tol = 1e-4;
  auto agree = [&](double g, double fd, const std::string& what) {
    ok &= expect(std::abs(g - fd) <= tol * (1.0 + std::abs(fd)),
                 what + ": analytic " + std::to_string(g) + " vs FD " +
                     std::to_string(fd));
  };

  // epps_pulley over 20 random samples.
  for (int trial = 0; trial < 20; ++trial) {
    const CounterRng rng(1500 + trial);
    Eigen::VectorXd x(16);
    for (int i = 0; i < 16; ++i) x(i) = rng.normal(i) * 1.3 + 0.2;
    Eigen::VectorXd grad;
    epps_pulley_grad(x, grad);
    const int i = trial % 16;
    const double h = 1e-5;
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    agree(grad(i), (epps_pulley(xp) - epps_pulley(xm)) / (2 * h),
          "epps_pulley trial " + std::to_string(trial));
  }

  // sigreg_loss over 20 random batches.
  SketchConfig sketch;
  sketch.m = 8;
  sketch.dim = 5;
  sketch.seed = 7;
  for (int trial = 0; trial < 20; ++trial) {
    const CounterRng rng(1600 + trial);
    Eigen::MatrixXd b(12, 5);
    std::uint64_t c = 0;
    for (int i = 0; i < 12; ++i)
      for (int d = 0; d < 5; ++d) b(i, d) = rng.normal(c++);
    Eigen::MatrixXd grad;
    sigreg_loss_grad(b, sketch, grad);
    const int i = trial % 12, d = trial % 5;
    const double h = 1e-5;
    Eigen::MatrixXd bp = b, bm = b;
    bp(i, d) += h;
    bm(i, d) -= h;
    agree(grad(i, d),
          (sigreg_loss(bp, sketch).statistic -
           sigreg_loss(bm, sketch).statistic) /
              (2 * h),
          "sigreg trial " + std::to_string(trial));
  }

  // Dirichlet LOO rates and the CEB composite, directional derivatives.
  {
    EstimatorConfig cfg;
    cfg.s = 4;
    cfg.seed = 909;
    Minibatch batch;
    batch.xs = Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXi ys(6);
    ys << 0, 1, 0, 1, 0, 1;
    batch.ys = ys;
    for (int trial = 0; trial < 20; ++trial) {
      DirichletEncoder enc =
          DirichletEncoder::random_init(3, 6, 0.4, 1700 + trial);
      const CounterRng rng(1800 + trial);
      Eigen::MatrixXd dir(3, 6);
      std::uint64_t c = 0;
      for (int r = 0; r < 3; ++r)
        for (int f = 0; f < 6; ++f) dir(r, f) = rng.normal(c++);
      dir /= dir.norm();
      const double h = 1e-5;
      auto directional = [&](auto&& eval, const Eigen::MatrixXd& grad,
                             const std::string& what) {
        DirichletEncoder plus = enc, minus = enc;
        plus.weights() += h * dir;
        minus.weights() -= h * dir;
        agree(grad.cwiseProduct(dir).sum(),
              (eval(plus) - eval(minus)) / (2 * h), what);
      };
      const LossValue total = loo_total_rate(enc, batch, cfg);
      directional(
          [&](const DirichletEncoder& e) {
            return loo_total_rate(e, batch, cfg).value;
          },
          total.grad, "loo_total_rate trial " + std::to_string(trial));
      const LossValue cond = loo_conditional_rate(enc, batch, cfg);
      directional(
          [&](const DirichletEncoder& e) {
            return loo_conditional_rate(e, batch, cfg).value;
          },
          cond.grad, "loo_conditional_rate trial " + std::to_string(trial));
      const CebValue ceb = ceb_loss(enc, batch, 5.0, cfg);
      directional(
          [&](const DirichletEncoder& e) {
            return ceb_loss(e, batch, 5.0, cfg).value;
          },
          ceb.grad, "ceb_loss trial " + std::to_string(trial));
    }
  }

  // Gaussian losses: LOO rates, VIB, semi-supervised, self-supervised.
  {
    EstimatorConfig cfg;
    cfg.s = 4;
    cfg.seed = 911;
    SketchConfig sk;
    sk.m = 6;
    sk.dim = 3;
    sk.seed = 17;
    Minibatch batch;
    batch.xs = Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXi ys(6);
    ys << 0, 1, 0, 1, 0, 1;
    batch.ys = ys;
    for (int trial = 0; trial < 20; ++trial) {
      GaussianEncoder enc = GaussianEncoder::random_init(3, 6, 0.4,
                                                         1900 + trial);
      const CounterRng rng(2000 + trial);
      Eigen::MatrixXd dir(3, 6);
      std::uint64_t c = 0;
      for (int r = 0; r < 3; ++r)
        for (int f = 0; f < 6; ++f) dir(r, f) = rng.normal(c++);
      dir /= dir.norm();
      const double h = 1e-5;
      auto directional_mu = [&](auto&& eval, const Eigen::MatrixXd& grad,
                                const std::string& what) {
        GaussianEncoder plus = enc, minus = enc;
        plus.w_mu() += h * dir;
        minus.w_mu() -= h * dir;
        agree(grad.cwiseProduct(dir).sum(),
              (eval(plus) - eval(minus)) / (2 * h), what);
      };
      auto directional_lv = [&](auto&& eval, const Eigen::MatrixXd& grad,
                                const std::string& what) {
        GaussianEncoder plus = enc, minus = enc;
        plus.w_logvar() += h * dir;
        minus.w_logvar() -= h * dir;
        agree(grad.cwiseProduct(dir).sum(),
              (eval(plus) - eval(minus)) / (2 * h), what);
      };

      const GaussLossValue gt = loo_total_rate(enc, batch, cfg);
      directional_mu(
          [&](const GaussianEncoder& e) {
            return loo_total_rate(e, batch, cfg).value;
          },
          gt.grad_mu, "gauss total mu trial " + std::to_string(trial));
      directional_lv(
          [&](const GaussianEncoder& e) {
            return loo_total_rate(e, batch, cfg).value;
          },
          gt.grad_logvar, "gauss total logvar trial " + std::to_string(trial));

      SoftmaxHead head;
      head.a = Eigen::MatrixXd::Zero(2, 3);
      head.b = Eigen::VectorXd::Zero(2);
      const CounterRng hr(2100 + trial);
      c = 0;
      for (int r = 0; r < 2; ++r)
        for (int d = 0; d < 3; ++d) head.a(r, d) = 0.3 * hr.normal(c++);
      const VibValue vib = vib_loss(enc, head, batch, 3.0, cfg);
      directional_mu(
          [&](const GaussianEncoder& e) {
            return vib_loss(e, head, batch, 3.0, cfg).value;
          },
          vib.grad_mu, "vib mu trial " + std::to_string(trial));
      directional_lv(
          [&](const GaussianEncoder& e) {
            return vib_loss(e, head, batch, 3.0, cfg).value;
          },
          vib.grad_logvar, "vib logvar trial " + std::to_string(trial));

      const GaussLossValue semi = semi_loss(enc, batch, batch, 0.5, sk, cfg);
      directional_mu(
          [&](const GaussianEncoder& e) {
            return semi_loss(e, batch, batch, 0.5, sk, cfg).value;
          },
          semi.grad_mu, "semi mu trial " + std::to_string(trial));

      std::vector<Minibatch> views(2);
      views[0].xs = batch.xs;
      views[1].xs = batch.xs * 0.9;
      const GaussLossValue self = self_loss(enc, views, 0.5, sk);
      directional_mu(
          [&](const GaussianEncoder& e) {
            return self_loss(e, views, 0.5, sk).value;
          },
          self.grad_mu, "self mu trial " + std::to_string(trial));
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 16. K-ablation shape on synthetic_classes.
// ---------------------------------------------------------------------------
bool criterion_16() {
  bool ok = true;
  std::vector<double> eps, delta;
  for (int k : {3, 5, 10, 15, 20}) {
    TrainConfig cfg;
    cfg.k = k;
    cfg.epochs = 200;
    cfg.lr = 0.15;
    cfg.s_train = 2;
    cfg.record_every = 200;
    const TrainReport rep = train_toy(ToyTask::synthetic_classes,
                                      ToyObjective::ceb_loo, 10.0, cfg);
    ok &= expect(!rep.diverged, "K = " + std::to_string(k) + " diverged");
    eps.push_back(rep.final_estimates.epsilon);
    delta.push_back(rep.final_estimates.delta);
  }
  for (size_t i = 1; i < eps.size(); ++i)
    ok &= expect(eps[i] <= eps[i - 1] + 1e-9,
                 "epsilon rose from K index " + std::to_string(i - 1) +
                     " (" + std::to_string(eps[i - 1]) + " -> " +
                     std::to_string(eps[i]) + ")");
  // Plateau for K >= 10: indices 2, 3, 4.
  for (size_t i = 3; i < delta.size(); ++i)
    ok &= expect(std::abs(delta[i] - delta[i - 1]) < 0.05,
                 "delta moved by " +
                     std::to_string(std::abs(delta[i] - delta[i - 1])) +
                     " past the K = 10 plateau");
  return ok;
}

struct Criterion {
  int id;
  const char* title;
  std::function<bool()> run;
};

const std::vector<Criterion> kCriteria{
    {1, "binary task exactness", criterion_1},
    {2, "Blahut-Arimoto endpoints", criterion_2},
    {3, "curve shape on random joints", criterion_3},
    {4, "deterministic-task diagonal", criterion_4},
    {5, "CEB / IB Lagrangian equivalence", criterion_5},
    {6, "flat-portion refinement", criterion_6},
    {7, "chain exactness and moments", criterion_7},
    {8, "simplex-map phase invariance", criterion_8},
    {9, "overhead accounting", criterion_9},
    {10, "SIGReg discrimination", criterion_10},
    {11, "LOO estimator calibration", criterion_11},
    {12, "toy reproduction: discrete clusters", criterion_12},
    {13, "toy reproduction: continuous loop", criterion_13},
    {14, "effective dimension and Lipschitz", criterion_14},
    {15, "gradient finite-difference suite", criterion_15},
    {16, "K-ablation shape", criterion_16},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
      only = std::atoi(argv[++i]);
  }

  int failures = 0;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    g_notes.clear();
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      g_notes.push_back(std::string("exception: ") + e.what());
    }
    std::printf("[%s] %2d %s\n", ok ? "PASS" : "FAIL", c.id, c.title);
    if (!ok) {
      ++failures;
      for (const auto& note : g_notes)
        std::printf("       - %s\n", note.c_str());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
