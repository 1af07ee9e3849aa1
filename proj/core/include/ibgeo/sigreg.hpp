#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace ibgeo {

struct SketchConfig {
  int m = 64;                // number of random unit directions
  int dim = 0;               // ambient dimension (2K for chain embeddings)
  std::uint64_t seed = 123;
};

struct SigregResult {
  double statistic = 0.0;               // mean of per_direction
  std::vector<double> per_direction;
};

/// Epps-Pulley statistic of a univariate sample against the standard
/// normal: the closed-form weighted L2 distance between the empirical and
/// the N(0,1) characteristic function under a standard-normal weight,
///   T = (1/n) sum_{j,k} e^{-(x_j-x_k)^2/2} - sqrt(2) sum_j e^{-x_j^2/4}
///       + n/sqrt(3).
/// Samples are not studentized: wrong location or scale is penalized.
double epps_pulley(const Eigen::VectorXd& x);

/// Same statistic plus its gradient with respect to the sample.
double epps_pulley_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad);

/// m rows, i.i.d. uniform on the unit sphere in `dim` dimensions;
/// bitwise deterministic given cfg.seed.
Eigen::MatrixXd sample_directions(const SketchConfig& cfg);

/// Sketched isotropic-Gaussian loss: project the batch (n x dim) on each
/// direction, score each projection with epps_pulley, average.
SigregResult sigreg_loss(const Eigen::MatrixXd& batch,
                         const SketchConfig& cfg);

/// Loss plus gradient with respect to the batch.
SigregResult sigreg_loss_grad(const Eigen::MatrixXd& batch,
                              const SketchConfig& cfg, Eigen::MatrixXd& grad);

struct NullBand {
  double q01 = 0.0;
  double q99 = 0.0;
  int replicates = 0;
};

/// Monte Carlo null distribution of the sigreg statistic for isotropic
/// standard-normal batches of shape (n x dim); seeded and deterministic.
NullBand sigreg_null_band(int n, const SketchConfig& cfg, int replicates,
                          std::uint64_t seed);

/// Monte Carlo quantile of epps_pulley under H0 at sample size n.
double epps_pulley_null_quantile(int n, int replicates, double q,
                                 std::uint64_t seed);

}  // namespace ibgeo
