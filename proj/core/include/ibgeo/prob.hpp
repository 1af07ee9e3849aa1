#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace ibgeo {

// All information quantities are in nats (natural log).

constexpr double kNormTol = 1e-12;

/// Thrown when a KL divergence is evaluated outside the support of its
/// second argument (p_i > 0 while q_i = 0).
struct support_error : std::domain_error {
  using std::domain_error::domain_error;
};

/// A probability vector: non-negative entries summing to one.
/// Renormalized on construction; throws on negative entries or zero mass.
class SimplexPoint {
 public:
  explicit SimplexPoint(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return p_; }
  int dim() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_(i); }

 private:
  Eigen::VectorXd p_;
};

/// Finite joint distribution p(x,y). Zero-mass rows/columns are dropped at
/// construction so both marginals are strictly positive.
class JointPMF {
 public:
  explicit JointPMF(Eigen::MatrixXd table,
                    std::vector<std::string> x_labels = {},
                    std::vector<std::string> y_labels = {});

  int nx() const { return static_cast<int>(table_.rows()); }
  int ny() const { return static_cast<int>(table_.cols()); }
  const Eigen::MatrixXd& table() const { return table_; }
  const Eigen::VectorXd& px() const { return px_; }
  const Eigen::VectorXd& py() const { return py_; }
  const std::vector<std::string>& x_labels() const { return x_labels_; }
  const std::vector<std::string>& y_labels() const { return y_labels_; }

  /// Row of the conditional p(y|x), as a probability vector.
  SimplexPoint conditional_y_given_x(int x) const;
  /// All conditionals stacked: rows are p(y|x).
  Eigen::MatrixXd conditional_table() const;

  std::string to_json_string() const;
  static JointPMF from_json_string(const std::string& text);

 private:
  Eigen::MatrixXd table_;
  Eigen::VectorXd px_, py_;
  std::vector<std::string> x_labels_, y_labels_;
};

/// Conditional kernel p(w|x): each row is a probability vector over W.
class EncoderKernel {
 public:
  explicit EncoderKernel(Eigen::MatrixXd rows);

  int nx() const { return static_cast<int>(rows_.rows()); }
  int nw() const { return static_cast<int>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const { return rows_; }
  SimplexPoint row(int x) const { return SimplexPoint(rows_.row(x)); }

 private:
  Eigen::MatrixXd rows_;
};

/// Conditional kernel p(y|w): each row is a probability vector over Y.
class DecoderMap {
 public:
  explicit DecoderMap(Eigen::MatrixXd rows);

  int nw() const { return static_cast<int>(rows_.rows()); }
  int ny() const { return static_cast<int>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const { return rows_; }
  SimplexPoint row(int w) const { return SimplexPoint(rows_.row(w)); }

 private:
  Eigen::MatrixXd rows_;
};

/// Shannon entropy -sum p log p, with 0 log 0 := 0. Result in [0, log K].
double entropy(const SimplexPoint& p);
double entropy(const Eigen::VectorXd& p);

/// KL divergence sum p log(p/q). Throws support_error when p puts mass
/// where q has none.
double kl_divergence(const SimplexPoint& p, const SimplexPoint& q);
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// KL divergence returning +infinity on support violation instead of
/// throwing. Used by iterative solvers where transient zeros are expected.
double kl_divergence_or_inf(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// I(X;Y) of a joint, computed as H(Y) - H(Y|X).
double mutual_information(const JointPMF& j);

/// Residual predictive information I(X;Y|W) = H(Y|W) - H(Y|X) under the
/// Markov chain Y - X - W induced by the encoder.
double conditional_mi_xy_given_w(const JointPMF& j, const EncoderKernel& enc);

/// Encoding rate I(X;W) of the joint p(x) p(w|x).
double rate(const JointPMF& j, const EncoderKernel& enc);

/// Predictive information I(W;Y) under the induced joint p(w,y).
double predictive_information(const JointPMF& j, const EncoderKernel& enc);

}  // namespace ibgeo
