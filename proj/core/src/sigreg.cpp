#include "ibgeo/sigreg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "ibgeo/rng.hpp"

namespace ibgeo {

double epps_pulley(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 1) throw std::invalid_argument("epps_pulley: empty sample");
  double pair_sum = static_cast<double>(n);  // diagonal terms
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const auto tail = x.tail(n - j - 1).array();
    pair_sum += 2.0 * ((-(tail - x(j)).square() / 2.0).exp()).sum();
  }
  const double cross = (-(x.array().square()) / 4.0).exp().sum();
  const double t = pair_sum / n - std::sqrt(2.0) * cross + n / std::sqrt(3.0);
  return t < 0.0 ? 0.0 : t;
}

double epps_pulley_grad(const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
  const auto n = x.size();
  if (n < 1) throw std::invalid_argument("epps_pulley: empty sample");
  grad = Eigen::VectorXd::Zero(n);
  double pair_sum = static_cast<double>(n);
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    const auto diff = (x.tail(n - j - 1).array() - x(j)).eval();
    const auto ker = (-(diff.square()) / 2.0).exp().eval();
    pair_sum += 2.0 * ker.sum();
    // d/dx of the symmetric pair sum: each unordered pair appears twice.
    const auto contrib = (-2.0 * diff * ker).eval();
    grad.tail(n - j - 1).array() += contrib / n;
    grad(j) -= contrib.sum() / n;
  }
  const auto cross = (-(x.array().square()) / 4.0).exp().eval();
  grad.array() += std::sqrt(2.0) * (x.array() / 2.0) * cross;
  const double t =
      pair_sum / n - std::sqrt(2.0) * cross.sum() + n / std::sqrt(3.0);
  return t < 0.0 ? 0.0 : t;
}

Eigen::MatrixXd sample_directions(const SketchConfig& cfg) {
  if (cfg.m < 1 || cfg.dim < 1)
    throw std::invalid_argument("sample_directions: bad config");
  const CounterRng rng(cfg.seed);
  Eigen::MatrixXd dirs(cfg.m, cfg.dim);
  for (int i = 0; i < cfg.m; ++i) {
    double norm2 = 0.0;
    do {
      for (int d = 0; d < cfg.dim; ++d)
        dirs(i, d) = rng.normal(static_cast<std::uint64_t>(i) * cfg.dim + d);
      norm2 = dirs.row(i).squaredNorm();
    } while (!(norm2 > 0.0));
    dirs.row(i) /= std::sqrt(norm2);
  }
  return dirs;
}

namespace {

template <typename Fn>
void parallel_for(int count, Fn&& fn) {
  const int hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min(hw, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

SigregResult sigreg_loss(const Eigen::MatrixXd& batch,
                         const SketchConfig& cfg) {
  if (batch.rows() < 2)
    throw std::invalid_argument("sigreg_loss: need at least 2 samples");
  if (batch.cols() != cfg.dim)
    throw std::invalid_argument("sigreg_loss: dimension mismatch");
  const Eigen::MatrixXd dirs = sample_directions(cfg);
  SigregResult res;
  res.per_direction.assign(cfg.m, 0.0);
  parallel_for(cfg.m, [&](int i) {
    const Eigen::VectorXd proj = batch * dirs.row(i).transpose();
    res.per_direction[i] = epps_pulley(proj);
  });
  double sum = 0.0;
  for (double v : res.per_direction) sum += v;
  res.statistic = sum / cfg.m;
  return res;
}

SigregResult sigreg_loss_grad(const Eigen::MatrixXd& batch,
                              const SketchConfig& cfg, Eigen::MatrixXd& grad) {
  if (batch.rows() < 2)
    throw std::invalid_argument("sigreg_loss: need at least 2 samples");
  if (batch.cols() != cfg.dim)
    throw std::invalid_argument("sigreg_loss: dimension mismatch");
  const Eigen::MatrixXd dirs = sample_directions(cfg);
  SigregResult res;
  res.per_direction.assign(cfg.m, 0.0);
  std::vector<Eigen::VectorXd> pgrads(cfg.m);
  parallel_for(cfg.m, [&](int i) {
    const Eigen::VectorXd proj = batch * dirs.row(i).transpose();
    res.per_direction[i] = epps_pulley_grad(proj, pgrads[i]);
  });
  grad = Eigen::MatrixXd::Zero(batch.rows(), batch.cols());
  double sum = 0.0;
  for (int i = 0; i < cfg.m; ++i) {
    sum += res.per_direction[i];
    grad += pgrads[i] * dirs.row(i) / cfg.m;
  }
  res.statistic = sum / cfg.m;
  return res;
}

NullBand sigreg_null_band(int n, const SketchConfig& cfg, int replicates,
                          std::uint64_t seed) {
  std::vector<double> stats(replicates, 0.0);
  parallel_for(replicates, [&](int r) {
    const CounterRng rng = CounterRng(seed).stream(r);
    Eigen::MatrixXd batch(n, cfg.dim);
    std::uint64_t c = 0;
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < cfg.dim; ++d) batch(i, d) = rng.normal(c++);
    SketchConfig rep_cfg = cfg;
    rep_cfg.seed = CounterRng(seed).bits(0x5143ULL + r);
    const Eigen::MatrixXd dirs = sample_directions(rep_cfg);
    double sum = 0.0;
    for (int i = 0; i < rep_cfg.m; ++i)
      sum += epps_pulley(Eigen::VectorXd(batch * dirs.row(i).transpose()));
    stats[r] = sum / rep_cfg.m;
  });
  std::sort(stats.begin(), stats.end());
  NullBand band;
  band.replicates = replicates;
  band.q01 = stats[static_cast<size_t>(0.01 * (replicates - 1))];
  band.q99 = stats[static_cast<size_t>(0.99 * (replicates - 1))];
  return band;
}

double epps_pulley_null_quantile(int n, int replicates, double q,
                                 std::uint64_t seed) {
  std::vector<double> stats(replicates, 0.0);
  parallel_for(replicates, [&](int r) {
    const CounterRng rng = CounterRng(seed).stream(r);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal(i);
    stats[r] = epps_pulley(x);
  });
  std::sort(stats.begin(), stats.end());
  return stats[static_cast<size_t>(q * (replicates - 1))];
}

}  // namespace ibgeo
