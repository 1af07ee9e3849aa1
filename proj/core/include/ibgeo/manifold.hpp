#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ibgeo/prob.hpp"

namespace ibgeo {

enum class SimplexMetric { hellinger, total_variation, kl_symmetrized };

/// Hellinger distance sqrt(1 - sum sqrt(p_i q_i)), in [0, 1].
double hellinger(const SimplexPoint& p, const SimplexPoint& q);
/// Total variation 0.5 * L1, in [0, 1].
double total_variation(const SimplexPoint& p, const SimplexPoint& q);
/// Symmetrized KL 0.5 (KL(p||q) + KL(q||p)); +inf outside common support.
double kl_symmetrized(const SimplexPoint& p, const SimplexPoint& q);

/// A finite set of predictive distributions {p(Y|x)} inside one simplex.
class PredictiveManifold {
 public:
  PredictiveManifold(std::vector<SimplexPoint> points,
                     SimplexMetric metric = SimplexMetric::hellinger);

  int size() const { return static_cast<int>(points_.size()); }
  const SimplexPoint& point(int i) const { return points_[i]; }
  SimplexMetric metric() const { return metric_; }
  double distance(int i, int j) const;
  double diameter() const;

 private:
  std::vector<SimplexPoint> points_;
  SimplexMetric metric_;
};

/// Greedy farthest-point cover size at radius delta. Upper-bounds the exact
/// covering number; counts from one traversal are monotone in delta exactly.
int covering_number(const PredictiveManifold& m, double delta);

struct CoveringProfile {
  std::vector<double> scales;  // decreasing
  std::vector<int> counts;     // non-increasing in delta
  double slope_estimate = 0.0;
  int window_lo = 0, window_hi = 0;  // [lo, hi) indices used for the fit
  bool saturated = false;

  std::string to_csv() const;           // delta,count
  std::string summary_json() const;     // slope, window, flags
};

/// Windowed covering-number slope: least squares of log N against
/// log(1/delta) over the middle 60% of scales with 3 <= N <= n/4.
CoveringProfile effective_dimension(const PredictiveManifold& m,
                                    const std::vector<double>& scales);

/// Log-spaced scales from the diameter down, spanning `decades`.
std::vector<double> default_scales(const PredictiveManifold& m,
                                   int n_scales = 14, double decades = 2.2);

/// A scalar-input task with known predictive map x -> p(Y|x).
struct ContinuousTask {
  std::function<SimplexPoint(double)> predictive;
  double x_lo = 0.0;
  double x_hi = 1.0;
  bool circular = false;  // wrap-around input metric

  double input_distance(double a, double b) const;
};

/// Empirical lower bound on the Lipschitz constant of x -> p(Y|x):
/// max over sampled pairs of d_H(f(x1), f(x2)) / |x1 - x2|.
double lipschitz_check(const ContinuousTask& task, int n_pairs,
                       std::uint64_t seed = 11);

/// Sample the task's manifold on an even grid of n inputs.
PredictiveManifold sample_manifold(const ContinuousTask& task, int n,
                                   SimplexMetric metric =
                                       SimplexMetric::hellinger);

}  // namespace ibgeo
