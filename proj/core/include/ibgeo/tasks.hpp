#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibgeo/manifold.hpp"
#include "ibgeo/prob.hpp"

namespace ibgeo {

// Built-in synthetic tasks. Discrete ones are exact joints; continuous
// ones expose x -> p(Y|x) for manifold profiling and discretization.

/// 4 uniform inputs, p(Y|x) in {(0.1,0.9), (0.9,0.1)} two inputs each.
/// I(X;Y) = log 2 - H_b(0.9) ~ 0.368 nats, H(W*) = log 2.
JointPMF binary_task();

/// 6 uniform inputs, three predictive classes (0.8,0.1,0.1) and its
/// rotations, two inputs each. H(W*) = log 3.
JointPMF ternary_task();

/// 4 uniform inputs, Y = [x in {1,2}]: deterministic, endpoint on the
/// diagonal at (log 2, log 2).
JointPMF deterministic_task();

/// 20 uniform inputs, pairs sharing a conditional (10 predictive
/// clusters at equally spaced angles on the simplex loop).
/// H(X) = log 20, H(W*) = log 10.
JointPMF discrete_clusters_task();

/// The smooth loop p(Y=y | theta) proportional to exp(cos(theta - 2 pi y / 3)),
/// y in {0,1,2}.
SimplexPoint loop_predictive(double theta);

/// Loop task over theta in [0, 2 pi), circular input metric.
ContinuousTask continuous_loop_task();

/// Discretized loop: X uniform over `bins` angles, Y in {0,1,2}.
JointPMF discretized_loop_joint(int bins = 256);

/// Scalar Gaussian channel Y = X + Z, Z ~ N(0, sigma_z^2), with p(Y|x)
/// discretized on an even y-grid. Lipschitz in Hellinger with constant
/// 1 / (2 sqrt(2) sigma_z).
ContinuousTask gaussian_channel_task(double sigma_z = 1.0, double x_lo = -2.0,
                                     double x_hi = 2.0, int y_bins = 801,
                                     double y_span = 8.0);

/// 10-class Gaussian-mixture classification in 16 dimensions; the class
/// overlap is controlled by sigma (small sigma -> near-deterministic).
struct SyntheticClasses {
  int classes = 10;
  int dim = 16;
  double sigma = 1.0;
  Eigen::MatrixXd means;  // classes x dim

  /// n_per_class draws per class; rows of xs are inputs, ys are labels.
  struct Panel {
    Eigen::MatrixXd xs;       // n x dim
    Eigen::VectorXi ys;       // n
    Eigen::MatrixXd post;     // n x classes, exact posterior p(y|x)
  };
  Panel sample_panel(int n_per_class, std::uint64_t seed) const;

  /// Exact mixture posterior p(y|x) for one input.
  Eigen::VectorXd posterior(const Eigen::VectorXd& x) const;
};

SyntheticClasses synthetic_classes_task(double sigma = 1.0,
                                        std::uint64_t seed = 29);

/// Registry lookup for the discrete tasks by CLI name; throws on unknown
/// names listing the valid ones.
JointPMF discrete_task_by_name(const std::string& name);
std::vector<std::string> discrete_task_names();

}  // namespace ibgeo
