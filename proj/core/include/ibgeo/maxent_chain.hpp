#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibgeo/prob.hpp"

namespace ibgeo {

/// One draw through the Gaussian -> exponential -> simplex chain; all three
/// parameterizations are stored so the within-sample identities
/// expo[k] = gauss[2k]^2 + gauss[2k+1]^2 and simplex = expo / sum(expo)
/// hold to machine precision by construction.
struct ChainSample {
  Eigen::VectorXd gauss;    // 2K standard normals
  Eigen::VectorXd expo;     // K exponentials (rate 1/2)
  Eigen::VectorXd simplex;  // flat-Dirichlet point in P_K
};

/// Draw n flat-Dirichlet samples via the exact chain; deterministic given
/// seed, and samples are generated independently per index.
std::vector<ChainSample> sample_chain(int k, int n, std::uint64_t seed);

/// The radial simplex map pi(w)_k = (w_{2k}^2 + w_{2k+1}^2) / sum_j (...).
/// Invariant under independent rotation of each coordinate pair.
SimplexPoint simplex_map(const Eigen::VectorXd& w);

struct OverheadReport {
  int k = 0;
  double scale_overhead = 0.0;  // 0.5 log(2 pi e K) nats
  double phase_overhead = 0.0;  // K log(2 pi) nats
};

OverheadReport overhead_report(int k);

/// CSV export: one row per sample with gauss, expo, and simplex columns.
std::string chain_to_csv(const std::vector<ChainSample>& samples);

}  // namespace ibgeo
