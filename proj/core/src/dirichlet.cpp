#include "ibgeo/dirichlet.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace ibgeo {

namespace {

void check_alpha(const Eigen::VectorXd& alpha) {
  if (alpha.size() < 2)
    throw std::invalid_argument("dirichlet: need K >= 2");
  if (!(alpha.minCoeff() > 0.0))
    throw std::invalid_argument("dirichlet: alpha must be strictly positive");
}

constexpr double kUnifClamp = 1e-12;

double gamma_quantile(double a, double u) {
  return boost::math::gamma_p_inv(a, u);
}

}  // namespace

double dirichlet_log_pdf(const Eigen::VectorXd& alpha,
                         const Eigen::VectorXd& w) {
  check_alpha(alpha);
  double v = std::lgamma(alpha.sum());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    v += -std::lgamma(alpha(k)) + (alpha(k) - 1.0) * std::log(w(k));
  return v;
}

Eigen::VectorXd dirichlet_log_pdf_grad_alpha(const Eigen::VectorXd& alpha,
                                             const Eigen::VectorXd& w) {
  check_alpha(alpha);
  const double psi0 = boost::math::digamma(alpha.sum());
  Eigen::VectorXd g(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    g(k) = psi0 - boost::math::digamma(alpha(k)) + std::log(w(k));
  return g;
}

Eigen::VectorXd dirichlet_log_pdf_grad_w(const Eigen::VectorXd& alpha,
                                         const Eigen::VectorXd& w) {
  return ((alpha.array() - 1.0) / w.array()).matrix();
}

double dirichlet_entropy(const Eigen::VectorXd& alpha) {
  check_alpha(alpha);
  const double a0 = alpha.sum();
  const auto k = alpha.size();
  double log_beta = -std::lgamma(a0);
  double h = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    log_beta += std::lgamma(alpha(j));
    h -= (alpha(j) - 1.0) * boost::math::digamma(alpha(j));
  }
  return log_beta + (a0 - static_cast<double>(k)) * boost::math::digamma(a0) +
         h;
}

Eigen::VectorXd dirichlet_entropy_grad(const Eigen::VectorXd& alpha) {
  check_alpha(alpha);
  const double a0 = alpha.sum();
  const auto k = alpha.size();
  const double t0 = (a0 - static_cast<double>(k)) * boost::math::trigamma(a0);
  Eigen::VectorXd g(k);
  for (Eigen::Index j = 0; j < k; ++j)
    g(j) = t0 - (alpha(j) - 1.0) * boost::math::trigamma(alpha(j));
  return g;
}

Eigen::VectorXd dirichlet_mean(const Eigen::VectorXd& alpha) {
  check_alpha(alpha);
  return alpha / alpha.sum();
}

DirichletSample sample_dirichlet_pathwise(const Eigen::VectorXd& alpha,
                                          const Eigen::VectorXd& u) {
  check_alpha(alpha);
  if (u.size() != alpha.size())
    throw std::invalid_argument("sample_dirichlet_pathwise: size mismatch");
  const auto k = alpha.size();
  Eigen::VectorXd g(k), dg(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double uj = std::min(1.0 - kUnifClamp, std::max(kUnifClamp, u(j)));
    g(j) = gamma_quantile(alpha(j), uj);
    // The gamma quantile has no closed-form alpha derivative; a central
    // difference of the quantile itself is accurate to ~h^2 and stays on
    // the same noise path.
    const double h = 1e-5 * std::max(alpha(j), 1e-2);
    const double hi = gamma_quantile(alpha(j) + h, uj);
    const double lo = gamma_quantile(std::max(alpha(j) - h, 1e-12), uj);
    dg(j) = (hi - lo) / (h + std::min(h, alpha(j) - 1e-12));
  }
  const double s = g.sum();
  DirichletSample out;
  out.w = g / s;
  // Floor against underflow: tiny-alpha gamma quantiles can round to zero,
  // which would make every downstream log-density singular.
  if (out.w.minCoeff() < 1e-14) {
    out.w = out.w.cwiseMax(1e-14);
    out.w /= out.w.sum();
  }
  out.dw_dalpha.resize(k, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < k; ++i)
      out.dw_dalpha(i, j) = ((i == j ? 1.0 : 0.0) - out.w(i)) * dg(j) / s;
  return out;
}

Eigen::VectorXd dirichlet_uniforms(const CounterRng& rng,
                                   std::uint64_t counter_base, int k) {
  Eigen::VectorXd u(k);
  for (int j = 0; j < k; ++j) u(j) = rng.uniform(counter_base + j);
  return u;
}

}  // namespace ibgeo
