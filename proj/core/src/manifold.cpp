#include "ibgeo/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "nlohmann/json.hpp"

namespace ibgeo {

double hellinger(const SimplexPoint& p, const SimplexPoint& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("hellinger: dimension mismatch");
  const double bc =
      (p.probs().array() * q.probs().array()).sqrt().sum();
  return std::sqrt(std::max(0.0, 1.0 - std::min(bc, 1.0)));
}

double total_variation(const SimplexPoint& p, const SimplexPoint& q) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("total_variation: dimension mismatch");
  return 0.5 * (p.probs() - q.probs()).cwiseAbs().sum();
}

double kl_symmetrized(const SimplexPoint& p, const SimplexPoint& q) {
  return 0.5 * (kl_divergence_or_inf(p.probs(), q.probs()) +
                kl_divergence_or_inf(q.probs(), p.probs()));
}

PredictiveManifold::PredictiveManifold(std::vector<SimplexPoint> points,
                                       SimplexMetric metric)
    : points_(std::move(points)), metric_(metric) {
  if (points_.empty())
    throw std::invalid_argument("PredictiveManifold: no points");
  const int k = points_.front().dim();
  for (const auto& p : points_)
    if (p.dim() != k)
      throw std::invalid_argument("PredictiveManifold: mixed dimensions");
}

double PredictiveManifold::distance(int i, int j) const {
  switch (metric_) {
    case SimplexMetric::hellinger:
      return hellinger(points_[i], points_[j]);
    case SimplexMetric::total_variation:
      return total_variation(points_[i], points_[j]);
    case SimplexMetric::kl_symmetrized:
      return kl_symmetrized(points_[i], points_[j]);
  }
  return 0.0;
}

double PredictiveManifold::diameter() const {
  double d = 0.0;
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j) d = std::max(d, distance(i, j));
  return d;
}

namespace {

// Farthest-point traversal. radii[k] is the covering radius achieved by the
// first k+1 centers; it is non-increasing, so N(delta) from one traversal is
// exactly monotone in delta.
std::vector<double> cover_radii(const PredictiveManifold& m) {
  const int n = m.size();
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<double> radii;
  int next = 0;
  for (int k = 0; k < n; ++k) {
    const int center = next;
    double far = 0.0;
    next = center;
    for (int i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], m.distance(center, i));
      if (min_dist[i] > far) {
        far = min_dist[i];
        next = i;
      }
    }
    radii.push_back(far);
    if (far == 0.0) break;
  }
  return radii;
}

int count_at(const std::vector<double>& radii, double delta) {
  for (size_t k = 0; k < radii.size(); ++k)
    if (radii[k] <= delta) return static_cast<int>(k) + 1;
  return static_cast<int>(radii.size()) + 1;
}

}  // namespace

int covering_number(const PredictiveManifold& m, double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("covering_number: delta must be positive");
  return std::min(count_at(cover_radii(m), delta), m.size());
}

CoveringProfile effective_dimension(const PredictiveManifold& m,
                                    const std::vector<double>& scales) {
  if (scales.size() < 4)
    throw std::invalid_argument("effective_dimension: need >= 4 scales");
  for (size_t i = 1; i < scales.size(); ++i)
    if (scales[i] >= scales[i - 1])
      throw std::invalid_argument("effective_dimension: scales must decrease");
  if (std::log10(scales.front() / scales.back()) < 1.5 - 1e-9)
    throw std::invalid_argument(
        "effective_dimension: scales must span >= 1.5 decades");

  const auto radii = cover_radii(m);
  CoveringProfile prof;
  prof.scales = scales;
  for (double s : scales)
    prof.counts.push_back(std::min(count_at(radii, s), m.size()));

  // Scaling window: counts in [3, n/4], then the middle 60% of those scales.
  const int n = m.size();
  std::vector<int> idx;
  for (size_t i = 0; i < scales.size(); ++i)
    if (prof.counts[i] >= 3 && prof.counts[i] <= n / 4)
      idx.push_back(static_cast<int>(i));
  if (idx.size() >= 2) {
    const int trim = static_cast<int>(idx.size() * 0.2);
    prof.window_lo = idx[trim];
    prof.window_hi = idx[idx.size() - 1 - trim] + 1;
  }

  std::vector<double> xs, ys;
  for (int i = prof.window_lo; i < prof.window_hi; ++i) {
    xs.push_back(std::log(1.0 / scales[i]));
    ys.push_back(std::log(static_cast<double>(prof.counts[i])));
  }
  const bool all_equal =
      std::adjacent_find(prof.counts.begin(), prof.counts.end(),
                         std::not_equal_to<>()) == prof.counts.end();
  // A trailing plateau means the cover has exhausted the point set well
  // before the smallest scale: the manifold is finite at this resolution.
  size_t tail = 1;
  while (tail < prof.counts.size() &&
         prof.counts[prof.counts.size() - 1 - tail] == prof.counts.back())
    ++tail;
  if (xs.size() < 2 || all_equal || tail >= 3) {
    prof.slope_estimate = 0.0;
    prof.saturated = true;
    return prof;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double nn = static_cast<double>(xs.size());
  const double denom = nn * sxx - sx * sx;
  prof.slope_estimate = denom > 0.0 ? (nn * sxy - sx * sy) / denom : 0.0;
  if (prof.slope_estimate < 0.0) prof.slope_estimate = 0.0;
  return prof;
}

std::vector<double> default_scales(const PredictiveManifold& m, int n_scales,
                                   double decades) {
  const double top = std::max(m.diameter(), 1e-12);
  std::vector<double> scales;
  for (int i = 0; i < n_scales; ++i)
    scales.push_back(top * std::pow(10.0, -decades * i / (n_scales - 1)));
  return scales;
}

std::string CoveringProfile::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "delta,count\n";
  for (size_t i = 0; i < scales.size(); ++i)
    os << scales[i] << ',' << counts[i] << '\n';
  return os.str();
}

std::string CoveringProfile::summary_json() const {
  nlohmann::json j;
  j["slope"] = slope_estimate;
  j["window_lo"] = window_lo;
  j["window_hi"] = window_hi;
  j["saturated"] = saturated;
  j["scales"] = scales;
  j["counts"] = counts;
  return j.dump(2);
}

double ContinuousTask::input_distance(double a, double b) const {
  double d = std::abs(a - b);
  if (circular) {
    const double period = x_hi - x_lo;
    d = std::fmod(d, period);
    d = std::min(d, period - d);
  }
  return d;
}

double lipschitz_check(const ContinuousTask& task, int n_pairs,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(task.x_lo, task.x_hi);
  double best = 0.0;
  for (int i = 0; i < n_pairs; ++i) {
    const double a = ux(rng), b = ux(rng);
    const double dx = task.input_distance(a, b);
    if (dx < 1e-9) continue;
    const double dh = hellinger(task.predictive(a), task.predictive(b));
    best = std::max(best, dh / dx);
  }
  return best;
}

PredictiveManifold sample_manifold(const ContinuousTask& task, int n,
                                   SimplexMetric metric) {
  std::vector<SimplexPoint> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = task.x_lo + (task.x_hi - task.x_lo) *
                                     (task.circular
                                          ? static_cast<double>(i) / n
                                          : static_cast<double>(i) /
                                                std::max(1, n - 1));
    pts.push_back(task.predictive(t));
  }
  return PredictiveManifold(std::move(pts), metric);
}

}  // namespace ibgeo
