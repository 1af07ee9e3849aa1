#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "ibgeo/rng.hpp"

namespace ibgeo {

// Closed-form Dirichlet quantities and a pathwise (implicit
// reparameterization) sampler. Everything here is differentiable in the
// concentration vector so the minibatch losses can run plain gradient
// descent and still pass finite-difference checks.

/// log density of Dir(alpha) at a strictly positive simplex point w.
double dirichlet_log_pdf(const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& w);

/// Gradient of the log density in alpha: psi(a0) - psi(a_k) + log w_k.
Eigen::VectorXd dirichlet_log_pdf_grad_alpha(const Eigen::VectorXd& alpha,
                                             const Eigen::VectorXd& w);

/// Gradient of the log density in w (full-coordinate partials
/// (a_k - 1)/w_k; exact along simplex tangent directions).
Eigen::VectorXd dirichlet_log_pdf_grad_w(const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd& w);

/// Differential entropy of Dir(alpha) in nats.
double dirichlet_entropy(const Eigen::VectorXd& alpha);

/// dH/dalpha_k = (a0 - K) psi'(a0) - (a_k - 1) psi'(a_k).
Eigen::VectorXd dirichlet_entropy_grad(const Eigen::VectorXd& alpha);

/// Mean alpha / sum(alpha).
Eigen::VectorXd dirichlet_mean(const Eigen::VectorXd& alpha);

/// One pathwise sample: w_k = g_k / sum(g), g_k = Qgamma(alpha_k, u_k)
/// with u_k fixed uniforms. dw_dalpha(k, j) = dw_k / dalpha_j through the
/// gamma quantile (central finite difference of the quantile itself) and
/// the normalization.
struct DirichletSample {
  Eigen::VectorXd w;
  Eigen::MatrixXd dw_dalpha;  // K x K, columns sum to 0
};

/// Sample from fixed uniforms in (0,1)^K; the same u always yields the
/// same path, which is what the gradient checks rely on.
DirichletSample sample_dirichlet_pathwise(const Eigen::VectorXd& alpha,
                                          const Eigen::VectorXd& u);

/// Convenience: draw the uniforms from a counter RNG at a counter base.
Eigen::VectorXd dirichlet_uniforms(const CounterRng& rng,
                                   std::uint64_t counter_base, int k);

}  // namespace ibgeo
