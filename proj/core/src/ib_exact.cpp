#include "ibgeo/ib_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nlohmann/json.hpp"

namespace ibgeo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd conditional_rows(const JointPMF& j) {
  return j.conditional_table();
}

// d[x][w] = KL(p(y|x) || dec_row_w), +inf allowed.
Eigen::MatrixXd distortion_raw(const Eigen::MatrixXd& cond,
                               const Eigen::MatrixXd& dec) {
  Eigen::MatrixXd d(cond.rows(), dec.rows());
  for (int x = 0; x < cond.rows(); ++x)
    for (int w = 0; w < dec.rows(); ++w)
      d(x, w) = kl_divergence_or_inf(cond.row(x), dec.row(w));
  return d;
}

void derive_marginal_decoder(const JointPMF& j, OperatingPoint& s) {
  const int nw = static_cast<int>(s.encoder.cols());
  s.marginal = s.encoder.transpose() * j.px();
  Eigen::MatrixXd pwy = Eigen::MatrixXd::Zero(nw, j.ny());
  for (int x = 0; x < j.nx(); ++x)
    pwy += s.encoder.row(x).transpose() * j.table().row(x);
  Eigen::MatrixXd dec(nw, j.ny());
  for (int w = 0; w < nw; ++w) {
    const double pw = pwy.row(w).sum();
    if (pw > 0.0)
      dec.row(w) = pwy.row(w) / pw;
    else if (s.decoder.rows() == nw)
      dec.row(w) = s.decoder.row(w);  // unused symbol: keep previous row
    else
      dec.row(w).setConstant(1.0 / j.ny());
  }
  s.decoder = std::move(dec);
}

void fill_information_quantities(const JointPMF& j, OperatingPoint& s) {
  const EncoderKernel enc(s.encoder);
  s.rate = rate(j, enc);
  s.delta = predictive_information(j, enc);
  s.epsilon = conditional_mi_xy_given_w(j, enc);
}

Eigen::MatrixXd noisy_rows(const Eigen::MatrixXd& base, double eta,
                           std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::MatrixXd out = base;
  for (int x = 0; x < out.rows(); ++x) {
    Eigen::VectorXd noise(out.cols());
    for (int w = 0; w < out.cols(); ++w) noise(w) = expo(rng);
    noise /= noise.sum();
    out.row(x) = (1.0 - eta) * out.row(x) + eta * noise.transpose();
    out.row(x) /= out.row(x).sum();
  }
  return out;
}

OperatingPoint solve_from(const JointPMF& j, double beta,
                          Eigen::MatrixXd init_encoder,
                          const SolverConfig& cfg) {
  OperatingPoint s;
  s.beta = beta;
  s.encoder = std::move(init_encoder);
  derive_marginal_decoder(j, s);

  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::MatrixXd prev = s.encoder;
    s = ba_step(j, s);
    s.iters = it + 1;
    const double change = (s.encoder - prev).cwiseAbs().maxCoeff();
    if (change < cfg.tol) {
      s.converged = true;
      break;
    }
  }
  fill_information_quantities(j, s);
  return s;
}

}  // namespace

DistortionMatrix distortion_matrix(const JointPMF& j, const DecoderMap& dec) {
  const Eigen::MatrixXd cond = conditional_rows(j);
  Eigen::MatrixXd d(j.nx(), dec.nw());
  for (int x = 0; x < j.nx(); ++x)
    for (int w = 0; w < dec.nw(); ++w)
      d(x, w) = kl_divergence(Eigen::VectorXd(cond.row(x)),
                              Eigen::VectorXd(dec.rows().row(w)));
  return DistortionMatrix{std::move(d)};
}

MssPartition minimal_sufficient_statistic(const JointPMF& j, double tau_mss) {
  const Eigen::MatrixXd cond = conditional_rows(j);
  MssPartition part;
  for (int x = 0; x < j.nx(); ++x) {
    int hit = -1;
    for (size_t c = 0; c < part.classes.size(); ++c) {
      const int rep = part.classes[c].front();
      const double tv = 0.5 * (cond.row(x) - cond.row(rep)).cwiseAbs().sum();
      if (tv <= tau_mss) {
        hit = static_cast<int>(c);
        break;
      }
    }
    if (hit < 0) {
      part.classes.push_back({x});
    } else {
      part.classes[hit].push_back(x);
    }
  }
  const int nc = static_cast<int>(part.classes.size());
  part.class_mass = Eigen::VectorXd::Zero(nc);
  part.representatives.resize(nc);
  Eigen::MatrixXd pcy = Eigen::MatrixXd::Zero(nc, j.ny());
  for (int c = 0; c < nc; ++c) {
    Eigen::VectorXd rep = Eigen::VectorXd::Zero(j.ny());
    for (int x : part.classes[c]) {
      part.class_mass(c) += j.px()(x);
      rep += j.px()(x) * cond.row(x).transpose();
      pcy.row(c) += j.table().row(x);
    }
    part.representatives[c] = rep / part.class_mass(c);
  }
  part.h_wstar = entropy(part.class_mass);
  // H(W*|Y) = sum_y p(y) H(class | y)
  double hcy = 0.0;
  for (int y = 0; y < j.ny(); ++y) {
    const double py = pcy.col(y).sum();
    if (py > 0.0) hcy += py * entropy(Eigen::VectorXd(pcy.col(y) / py));
  }
  part.h_wstar_given_y = hcy;
  return part;
}

OperatingPoint ba_step(const JointPMF& j, const OperatingPoint& state) {
  OperatingPoint s = state;
  const Eigen::MatrixXd cond = conditional_rows(j);
  const Eigen::MatrixXd d = distortion_raw(cond, s.decoder);
  const int nw = static_cast<int>(s.decoder.rows());

  // Encoder update in the log domain: log p(w) - beta d(x,w) - log Z(x).
  Eigen::MatrixXd enc(j.nx(), nw);
  for (int x = 0; x < j.nx(); ++x) {
    Eigen::VectorXd logit(nw);
    for (int w = 0; w < nw; ++w) {
      const double lm = s.marginal(w) > 0.0 ? std::log(s.marginal(w)) : -kInf;
      logit(w) = std::isinf(d(x, w)) ? -kInf : lm - s.beta * d(x, w);
    }
    const double mx = logit.maxCoeff();
    if (std::isinf(mx))
      throw std::runtime_error("ba_step: no admissible latent symbol");
    double z = 0.0;
    for (int w = 0; w < nw; ++w) z += std::exp(logit(w) - mx);
    for (int w = 0; w < nw; ++w) enc(x, w) = std::exp(logit(w) - mx) / z;
  }
  s.encoder = std::move(enc);
  derive_marginal_decoder(j, s);
  return s;
}

double lagrangian(const JointPMF& j, const OperatingPoint& state) {
  const EncoderKernel enc(state.encoder);
  const Eigen::MatrixXd cond = conditional_rows(j);
  const Eigen::MatrixXd d = distortion_raw(cond, state.decoder);
  double ed = 0.0;
  for (int x = 0; x < j.nx(); ++x)
    for (int w = 0; w < d.cols(); ++w) {
      const double pxw = j.px()(x) * state.encoder(x, w);
      if (pxw > 0.0) ed += pxw * d(x, w);
    }
  return rate(j, enc) + state.beta * ed;
}

OperatingPoint solve_at_beta(const JointPMF& j, double beta,
                             const SolverConfig& cfg) {
  const auto mss = minimal_sufficient_statistic(j, cfg.tau_mss);
  const int nw = cfg.latent_size.value_or(
      static_cast<int>(mss.classes.size()) + 2);
  std::mt19937_64 rng(cfg.seed);
  const Eigen::MatrixXd uniform =
      Eigen::MatrixXd::Constant(j.nx(), nw, 1.0 / nw);
  return solve_from(j, beta, noisy_rows(uniform, cfg.init_noise, rng), cfg);
}

IBCurve trace_curve(const JointPMF& j, const std::vector<double>& betas,
                    const SolverConfig& cfg) {
  for (size_t i = 1; i < betas.size(); ++i)
    if (betas[i] <= betas[i - 1])
      throw std::invalid_argument("trace_curve: betas must be increasing");
  IBCurve curve;
  curve.ixy = mutual_information(j);
  const auto mss = minimal_sufficient_statistic(j, cfg.tau_mss);
  curve.h_wstar = mss.h_wstar;
  curve.h_wstar_given_y = mss.h_wstar_given_y;

  std::mt19937_64 rng(cfg.seed);
  const int nw =
      cfg.latent_size.value_or(static_cast<int>(mss.classes.size()) + 2);
  Eigen::MatrixXd warm = Eigen::MatrixXd::Constant(j.nx(), nw, 1.0 / nw);
  for (double beta : betas) {
    // Re-noise the warm start: a fully symmetric (e.g. trivial) kernel is a
    // fixed point of ba_step at every beta.
    OperatingPoint pt =
        solve_from(j, beta, noisy_rows(warm, cfg.init_noise, rng), cfg);
    warm = pt.encoder;
    curve.points.push_back(std::move(pt));
  }
  // Refinement sweeps: a one-directional warm start can strand a beta on a
  // worse fixed point than a neighbour reached. Re-solve each point from
  // both neighbours' encoders and keep whichever attains the lower
  // Lagrangian R + beta * epsilon, until a full sweep changes nothing.
  const auto value = [](const OperatingPoint& p) {
    return p.rate + p.beta * p.epsilon;
  };
  const int n_pts = static_cast<int>(curve.points.size());
  for (int sweep = 0; sweep < 4; ++sweep) {
    bool changed = false;
    for (int i = 0; i < n_pts; ++i) {
      for (int nb : {i - 1, i + 1}) {
        if (nb < 0 || nb >= n_pts) continue;
        OperatingPoint alt = solve_from(
            j, curve.points[i].beta,
            noisy_rows(curve.points[nb].encoder, cfg.init_noise, rng), cfg);
        if (alt.converged && value(alt) < value(curve.points[i]) - 1e-12) {
          curve.points[i] = std::move(alt);
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return curve;
}

std::string IBCurve::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "beta,rate,delta,epsilon,converged,iters\n";
  for (const auto& p : points)
    os << p.beta << ',' << p.rate << ',' << p.delta << ',' << p.epsilon << ','
       << (p.converged ? 1 : 0) << ',' << p.iters << '\n';
  return os.str();
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string IBCurve::to_json_string() const {
  nlohmann::json j;
  j["ixy"] = ixy;
  j["h_wstar"] = h_wstar;
  j["h_wstar_given_y"] = h_wstar_given_y;
  j["points"] = nlohmann::json::array();
  for (const auto& p : points) {
    nlohmann::json q;
    q["beta"] = p.beta;
    q["rate"] = p.rate;
    q["delta"] = p.delta;
    q["epsilon"] = p.epsilon;
    q["converged"] = p.converged;
    q["iters"] = p.iters;
    q["encoder"] = matrix_json(p.encoder);
    q["decoder"] = matrix_json(p.decoder);
    j["points"].push_back(std::move(q));
  }
  return j.dump(2);
}

InformationPlaneSummary information_plane_summary(const JointPMF& j) {
  InformationPlaneSummary s;
  s.ixy = mutual_information(j);
  s.hx = entropy(j.px());
  const auto mss = minimal_sufficient_statistic(j);
  s.h_wstar = mss.h_wstar;
  s.h_wstar_given_y = mss.h_wstar_given_y;
  s.timesharing_slope = s.h_wstar > 0.0 ? s.ixy / s.h_wstar : 1.0;
  s.gap_triangle = {{{0.0, 0.0}, {s.ixy, s.ixy}, {s.h_wstar, s.ixy}}};
  return s;
}

std::pair<double, double> tangent_intercept(const IBCurve& curve, int idx) {
  const auto& p = curve.points.at(idx);
  if (p.beta <= 0.0)
    throw std::domain_error("tangent_intercept: undefined slope at beta = 0");
  const double slope = 1.0 / p.beta;
  return {slope, p.delta - p.rate * slope};
}

FlatPortionReport flat_portion_check(const JointPMF& j, double tol) {
  // Refinement W = (W*, X): since X determines W*, this is the identity
  // encoder up to relabeling. Build it explicitly as class-tagged inputs.
  const auto mss = minimal_sufficient_statistic(j);
  std::vector<int> cls(j.nx());
  for (size_t c = 0; c < mss.classes.size(); ++c)
    for (int x : mss.classes[c]) cls[x] = static_cast<int>(c);
  Eigen::MatrixXd enc = Eigen::MatrixXd::Zero(j.nx(), j.nx());
  for (int x = 0; x < j.nx(); ++x) {
    // Latent symbol ordered by (class, x); a permutation of the identity.
    int sym = 0;
    for (int x2 = 0; x2 < j.nx(); ++x2)
      if (std::pair(cls[x2], x2) < std::pair(cls[x], x)) ++sym;
    enc(x, sym) = 1.0;
  }
  const EncoderKernel kernel(enc);
  FlatPortionReport r;
  r.rate = rate(j, kernel);
  r.delta = predictive_information(j, kernel);
  r.hx = entropy(j.px());
  r.ixy = mutual_information(j);
  r.ok = std::abs(r.rate - r.hx) < tol && std::abs(r.delta - r.ixy) < tol;
  return r;
}

BetaCriticalBracket bracket_beta_critical(const JointPMF& j, double lo,
                                          double hi, int bisections,
                                          const SolverConfig& cfg) {
  auto nontrivial = [&](double beta) {
    return solve_at_beta(j, beta, cfg).rate > 1e-6;
  };
  if (nontrivial(lo)) return {0.0, lo};
  if (!nontrivial(hi)) return {hi, kInf};
  for (int i = 0; i < bisections; ++i) {
    const double mid = 0.5 * (lo + hi);
    (nontrivial(mid) ? hi : lo) = mid;
  }
  return {lo, hi};
}

}  // namespace ibgeo
