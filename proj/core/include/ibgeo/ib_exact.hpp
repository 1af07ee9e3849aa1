#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ibgeo/prob.hpp"

namespace ibgeo {

struct SolverConfig {
  double tol = 1e-10;         // max-norm encoder change at convergence
  int max_iters = 100000;
  std::optional<int> latent_size;  // default: MSS classes + 2 slack symbols
  double init_noise = 0.01;   // Dirichlet noise mixed into the uniform init
  std::uint64_t seed = 7;
  double tau_mss = 1e-9;      // total-variation merge tolerance
};

/// d[x][w] = KL(p(y|x) || dec[w]), the predictive mismatch of eq-style
/// KL distortion. Zero exactly when the decoder row reproduces p(y|x).
struct DistortionMatrix {
  Eigen::MatrixXd d;
};

DistortionMatrix distortion_matrix(const JointPMF& j, const DecoderMap& dec);

/// One point of the IB trade-off: rate R = I(X;W), predictive info
/// Delta = I(W;Y), distortion epsilon = I(X;Y|W), at multiplier beta.
struct OperatingPoint {
  double beta = 0.0;
  double rate = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  Eigen::MatrixXd encoder;   // |X| x |W|, rows normalized
  Eigen::MatrixXd decoder;   // |W| x |Y|, rows normalized
  Eigen::VectorXd marginal;  // p(w)
  bool converged = false;
  int iters = 0;
};

/// Partition of X by equality of predictive rows p(Y|x) within tau (TV).
struct MssPartition {
  std::vector<std::vector<int>> classes;     // X indices per class
  std::vector<Eigen::VectorXd> representatives;  // mass-weighted p(Y|class)
  Eigen::VectorXd class_mass;                // p(class)
  double h_wstar = 0.0;                      // H(W*)
  double h_wstar_given_y = 0.0;              // H(W*|Y)
};

MssPartition minimal_sufficient_statistic(const JointPMF& j,
                                          double tau_mss = 1e-9);

/// One Blahut-Arimoto round at fixed beta: encoder update from the current
/// marginal/decoder, then marginal update, then decoder update. Log-domain
/// throughout, so exp(-beta d) never underflows to NaN.
OperatingPoint ba_step(const JointPMF& j, const OperatingPoint& state);

/// Iterate ba_step from a seeded near-uniform encoder until the max-norm
/// encoder change drops below cfg.tol. Non-convergence is flagged.
OperatingPoint solve_at_beta(const JointPMF& j, double beta,
                             const SolverConfig& cfg = {});

/// Lagrangian value R + beta E[d(X,W)] of a state; non-increasing across
/// ba_step applications.
double lagrangian(const JointPMF& j, const OperatingPoint& state);

struct IBCurve {
  std::vector<OperatingPoint> points;  // sorted by beta
  double ixy = 0.0;
  double h_wstar = 0.0;
  double h_wstar_given_y = 0.0;

  std::string to_csv() const;          // beta,rate,delta,epsilon,converged,iters
  std::string to_json_string() const;  // includes full kernels
};

/// Trace the curve over a strictly increasing beta grid, warm-starting each
/// solve from the previous encoder (with fresh symmetry-breaking noise).
IBCurve trace_curve(const JointPMF& j, const std::vector<double>& betas,
                    const SolverConfig& cfg = {});

struct InformationPlaneSummary {
  double ixy = 0.0;
  double hx = 0.0;
  double h_wstar = 0.0;
  double h_wstar_given_y = 0.0;
  double timesharing_slope = 0.0;  // I(X;Y) / H(W*)
  // Gap-triangle vertices in the (R, Delta) plane.
  std::array<std::array<double, 2>, 3> gap_triangle{};
};

InformationPlaneSummary information_plane_summary(const JointPMF& j);

/// Tangent line to the curve at an interior point: slope 1/beta and
/// Delta-axis intercept c = Delta - R/beta. Throws on beta = 0.
std::pair<double, double> tangent_intercept(const IBCurve& curve, int idx);

/// Flat-portion check: the refinement W = (W*, X) must give
/// rate H(X) and predictive information I(X;Y).
struct FlatPortionReport {
  double rate = 0.0;
  double delta = 0.0;
  double hx = 0.0;
  double ixy = 0.0;
  bool ok = false;
};

FlatPortionReport flat_portion_check(const JointPMF& j, double tol = 1e-9);

/// Empirical bracket for the critical beta: bisection on "converged rate
/// exceeds 1e-6" between lo and hi. Reports the bracket only; no claim is
/// made that it equals the curve's origin slope reciprocal.
struct BetaCriticalBracket {
  double lo = 0.0;
  double hi = 0.0;
};

BetaCriticalBracket bracket_beta_critical(const JointPMF& j, double lo = 0.25,
                                          double hi = 64.0, int bisections = 20,
                                          const SolverConfig& cfg = {});

}  // namespace ibgeo
