#include "ibgeo/maxent_chain.hpp"

#include <cmath>
#include <sstream>

#include "ibgeo/rng.hpp"

namespace ibgeo {

std::vector<ChainSample> sample_chain(int k, int n, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("sample_chain: k must be >= 2");
  if (n < 1) throw std::invalid_argument("sample_chain: n must be >= 1");
  const CounterRng rng(seed);
  std::vector<ChainSample> out(n);
  for (int i = 0; i < n; ++i) {
    ChainSample s;
    s.gauss.resize(2 * k);
    const std::uint64_t base = static_cast<std::uint64_t>(i) * 2 * k;
    for (int j = 0; j < 2 * k; ++j) s.gauss(j) = rng.normal(base + j);
    s.expo.resize(k);
    for (int j = 0; j < k; ++j)
      s.expo(j) = s.gauss(2 * j) * s.gauss(2 * j) +
                  s.gauss(2 * j + 1) * s.gauss(2 * j + 1);
    const double total = s.expo.sum();
    if (total <= 0.0) {
      // Probability-zero degenerate draw; fall back to a shifted counter.
      for (int j = 0; j < 2 * k; ++j)
        s.gauss(j) = rng.normal(base + j + 0x8000000000000000ULL);
      for (int j = 0; j < k; ++j)
        s.expo(j) = s.gauss(2 * j) * s.gauss(2 * j) +
                    s.gauss(2 * j + 1) * s.gauss(2 * j + 1);
    }
    s.simplex = s.expo / s.expo.sum();
    out[i] = std::move(s);
  }
  return out;
}

SimplexPoint simplex_map(const Eigen::VectorXd& w) {
  if (w.size() < 4 || w.size() % 2 != 0)
    throw std::invalid_argument("simplex_map: need an even dimension >= 4");
  const int k = static_cast<int>(w.size()) / 2;
  Eigen::VectorXd radii(k);
  for (int j = 0; j < k; ++j)
    radii(j) = w(2 * j) * w(2 * j) + w(2 * j + 1) * w(2 * j + 1);
  const double total = radii.sum();
  if (!(total > 0.0))
    throw std::invalid_argument("simplex_map: zero vector");
  return SimplexPoint(radii / total);
}

OverheadReport overhead_report(int k) {
  if (k < 2) throw std::invalid_argument("overhead_report: k must be >= 2");
  OverheadReport r;
  r.k = k;
  r.scale_overhead = 0.5 * std::log(2.0 * M_PI * M_E * k);
  r.phase_overhead = k * std::log(2.0 * M_PI);
  return r;
}

std::string chain_to_csv(const std::vector<ChainSample>& samples) {
  std::ostringstream os;
  os.precision(17);
  if (samples.empty()) return "";
  const int k = static_cast<int>(samples.front().expo.size());
  for (int j = 0; j < 2 * k; ++j) os << "gauss" << j << ',';
  for (int j = 0; j < k; ++j) os << "expo" << j << ',';
  for (int j = 0; j < k; ++j) os << "simplex" << j << (j + 1 < k ? ',' : '\n');
  for (const auto& s : samples) {
    for (int j = 0; j < 2 * k; ++j) os << s.gauss(j) << ',';
    for (int j = 0; j < k; ++j) os << s.expo(j) << ',';
    for (int j = 0; j < k; ++j)
      os << s.simplex(j) << (j + 1 < k ? ',' : '\n');
  }
  return os.str();
}

}  // namespace ibgeo
