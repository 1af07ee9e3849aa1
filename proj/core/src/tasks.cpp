#include "ibgeo/tasks.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ibgeo/rng.hpp"

namespace ibgeo {

namespace {

JointPMF joint_from_conditionals(const Eigen::MatrixXd& cond) {
  // Uniform p(x); rows of cond are p(y|x).
  return JointPMF(cond / static_cast<double>(cond.rows()));
}

}  // namespace

JointPMF binary_task() {
  Eigen::MatrixXd cond(4, 2);
  cond << 0.1, 0.9, 0.1, 0.9, 0.9, 0.1, 0.9, 0.1;
  return joint_from_conditionals(cond);
}

JointPMF ternary_task() {
  Eigen::MatrixXd cond(6, 3);
  cond << 0.8, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.8, 0.1, 0.1,
      0.1, 0.8, 0.1, 0.1, 0.8;
  return joint_from_conditionals(cond);
}

JointPMF deterministic_task() {
  Eigen::MatrixXd cond(4, 2);
  cond << 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0;
  return joint_from_conditionals(cond);
}

SimplexPoint loop_predictive(double theta) {
  Eigen::VectorXd p(3);
  for (int y = 0; y < 3; ++y)
    p(y) = std::exp(std::cos(theta - 2.0 * M_PI * y / 3.0));
  return SimplexPoint(p);
}

JointPMF discrete_clusters_task() {
  Eigen::MatrixXd cond(20, 3);
  for (int x = 0; x < 20; ++x) {
    const int cluster = x / 2;
    cond.row(x) = loop_predictive(2.0 * M_PI * cluster / 10.0).probs();
  }
  return joint_from_conditionals(cond);
}

ContinuousTask continuous_loop_task() {
  ContinuousTask t;
  t.predictive = [](double theta) { return loop_predictive(theta); };
  t.x_lo = 0.0;
  t.x_hi = 2.0 * M_PI;
  t.circular = true;
  return t;
}

JointPMF discretized_loop_joint(int bins) {
  if (bins < 2) throw std::invalid_argument("discretized_loop_joint: bins");
  Eigen::MatrixXd cond(bins, 3);
  for (int i = 0; i < bins; ++i)
    cond.row(i) = loop_predictive(2.0 * M_PI * i / bins).probs();
  return joint_from_conditionals(cond);
}

ContinuousTask gaussian_channel_task(double sigma_z, double x_lo, double x_hi,
                                     int y_bins, double y_span) {
  if (!(sigma_z > 0.0))
    throw std::invalid_argument("gaussian_channel_task: sigma_z");
  ContinuousTask t;
  t.x_lo = x_lo;
  t.x_hi = x_hi;
  t.circular = false;
  t.predictive = [=](double x) {
    Eigen::VectorXd p(y_bins);
    for (int i = 0; i < y_bins; ++i) {
      const double y = -y_span + 2.0 * y_span * i / (y_bins - 1);
      const double z = (y - x) / sigma_z;
      p(i) = std::exp(-0.5 * z * z);
    }
    return SimplexPoint(p);
  };
  return t;
}

Eigen::VectorXd SyntheticClasses::posterior(const Eigen::VectorXd& x) const {
  Eigen::VectorXd logp(classes);
  for (int c = 0; c < classes; ++c)
    logp(c) = -(x - means.row(c).transpose()).squaredNorm() /
              (2.0 * sigma * sigma);
  const double m = logp.maxCoeff();
  Eigen::VectorXd p = (logp.array() - m).exp();
  return p / p.sum();
}

SyntheticClasses::Panel SyntheticClasses::sample_panel(
    int n_per_class, std::uint64_t seed) const {
  if (n_per_class < 1)
    throw std::invalid_argument("sample_panel: n_per_class");
  const CounterRng rng(seed);
  Panel panel;
  const int n = n_per_class * classes;
  panel.xs.resize(n, dim);
  panel.ys.resize(n);
  panel.post.resize(n, classes);
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      const int row = c * n_per_class + i;
      for (int d = 0; d < dim; ++d)
        panel.xs(row, d) =
            means(c, d) +
            sigma * rng.normal(static_cast<std::uint64_t>(row) * dim + d);
      panel.ys(row) = c;
      panel.post.row(row) = posterior(panel.xs.row(row).transpose());
    }
  return panel;
}

SyntheticClasses synthetic_classes_task(double sigma, std::uint64_t seed) {
  SyntheticClasses t;
  t.sigma = sigma;
  t.means.resize(t.classes, t.dim);
  const CounterRng rng(seed);
  for (int c = 0; c < t.classes; ++c) {
    for (int d = 0; d < t.dim; ++d)
      t.means(c, d) = rng.normal(static_cast<std::uint64_t>(c) * t.dim + d);
    t.means.row(c) *= 4.0 / t.means.row(c).norm();
  }
  return t;
}

JointPMF discrete_task_by_name(const std::string& name) {
  if (name == "binary") return binary_task();
  if (name == "ternary") return ternary_task();
  if (name == "deterministic") return deterministic_task();
  if (name == "discrete_clusters") return discrete_clusters_task();
  if (name == "continuous_loop") return discretized_loop_joint();
  std::ostringstream msg;
  msg << "unknown task '" << name << "'; valid tasks:";
  for (const auto& n : discrete_task_names()) msg << ' ' << n;
  throw std::invalid_argument(msg.str());
}

std::vector<std::string> discrete_task_names() {
  return {"binary", "ternary", "deterministic", "discrete_clusters",
          "continuous_loop"};
}

}  // namespace ibgeo
