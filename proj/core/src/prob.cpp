#include "ibgeo/prob.hpp"

#include <cmath>
#include <limits>

#include "nlohmann/json.hpp"

namespace ibgeo {

namespace {

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

SimplexPoint::SimplexPoint(Eigen::VectorXd probs) : p_(std::move(probs)) {
  if (p_.size() == 0) throw std::invalid_argument("SimplexPoint: empty vector");
  if ((p_.array() < 0.0).any())
    throw std::invalid_argument("SimplexPoint: negative entry");
  const double mass = p_.sum();
  if (!(mass > 0.0))
    throw std::invalid_argument("SimplexPoint: zero total mass");
  if (std::abs(mass - 1.0) > kNormTol) p_ /= mass;
}

JointPMF::JointPMF(Eigen::MatrixXd table, std::vector<std::string> x_labels,
                   std::vector<std::string> y_labels)
    : table_(std::move(table)),
      x_labels_(std::move(x_labels)),
      y_labels_(std::move(y_labels)) {
  if (table_.rows() == 0 || table_.cols() == 0)
    throw std::invalid_argument("JointPMF: empty table");
  if ((table_.array() < 0.0).any())
    throw std::invalid_argument("JointPMF: negative entry");
  const double mass = table_.sum();
  if (!(mass > 0.0)) throw std::invalid_argument("JointPMF: zero total mass");
  if (std::abs(mass - 1.0) > kNormTol) table_ /= mass;

  if (!x_labels_.empty() &&
      static_cast<int>(x_labels_.size()) != table_.rows())
    throw std::invalid_argument("JointPMF: x_labels size mismatch");
  if (!y_labels_.empty() &&
      static_cast<int>(y_labels_.size()) != table_.cols())
    throw std::invalid_argument("JointPMF: y_labels size mismatch");

  // Drop zero-mass rows and columns so both marginals are strictly positive.
  std::vector<int> keep_x, keep_y;
  for (int i = 0; i < table_.rows(); ++i)
    if (table_.row(i).sum() > 0.0) keep_x.push_back(i);
  for (int j = 0; j < table_.cols(); ++j)
    if (table_.col(j).sum() > 0.0) keep_y.push_back(j);
  if (static_cast<int>(keep_x.size()) != table_.rows() ||
      static_cast<int>(keep_y.size()) != table_.cols()) {
    Eigen::MatrixXd trimmed(keep_x.size(), keep_y.size());
    std::vector<std::string> xl, yl;
    for (size_t a = 0; a < keep_x.size(); ++a) {
      for (size_t b = 0; b < keep_y.size(); ++b)
        trimmed(a, b) = table_(keep_x[a], keep_y[b]);
      if (!x_labels_.empty()) xl.push_back(x_labels_[keep_x[a]]);
    }
    for (size_t b = 0; b < keep_y.size(); ++b)
      if (!y_labels_.empty()) yl.push_back(y_labels_[keep_y[b]]);
    table_ = std::move(trimmed);
    x_labels_ = std::move(xl);
    y_labels_ = std::move(yl);
  }

  px_ = table_.rowwise().sum();
  py_ = table_.colwise().sum();
}

SimplexPoint JointPMF::conditional_y_given_x(int x) const {
  return SimplexPoint(table_.row(x).transpose() / px_(x));
}

Eigen::MatrixXd JointPMF::conditional_table() const {
  return table_.array().colwise() / px_.array();
}

std::string JointPMF::to_json_string() const {
  nlohmann::json j;
  j["x_labels"] = x_labels_;
  j["y_labels"] = y_labels_;
  std::vector<double> flat(table_.size());
  for (int r = 0; r < table_.rows(); ++r)
    for (int c = 0; c < table_.cols(); ++c)
      flat[r * table_.cols() + c] = table_(r, c);
  j["rows"] = table_.rows();
  j["cols"] = table_.cols();
  j["table"] = flat;
  return j.dump();
}

JointPMF JointPMF::from_json_string(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto flat = j.at("table").get<std::vector<double>>();
  if (static_cast<int>(flat.size()) != rows * cols)
    throw std::invalid_argument("JointPMF: table size mismatch in JSON");
  Eigen::MatrixXd table(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) table(r, c) = flat[r * cols + c];
  return JointPMF(std::move(table),
                  j.at("x_labels").get<std::vector<std::string>>(),
                  j.at("y_labels").get<std::vector<std::string>>());
}

namespace {

Eigen::MatrixXd normalize_rows(Eigen::MatrixXd m, const char* what) {
  if (m.rows() == 0 || m.cols() == 0)
    throw std::invalid_argument(std::string(what) + ": empty table");
  if ((m.array() < 0.0).any())
    throw std::invalid_argument(std::string(what) + ": negative entry");
  for (int r = 0; r < m.rows(); ++r) {
    const double mass = m.row(r).sum();
    if (!(mass > 0.0))
      throw std::invalid_argument(std::string(what) + ": zero-mass row");
    if (std::abs(mass - 1.0) > kNormTol) m.row(r) /= mass;
  }
  return m;
}

}  // namespace

EncoderKernel::EncoderKernel(Eigen::MatrixXd rows)
    : rows_(normalize_rows(std::move(rows), "EncoderKernel")) {}

DecoderMap::DecoderMap(Eigen::MatrixXd rows)
    : rows_(normalize_rows(std::move(rows), "DecoderMap")) {}

double entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i) h -= plogp(p(i));
  return h;
}

double entropy(const SimplexPoint& p) { return entropy(p.probs()); }

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0)
      throw support_error("kl_divergence: p has mass outside supp(q)");
    d += p(i) * std::log(p(i) / q(i));
  }
  return d < 0.0 ? 0.0 : d;  // clamp tiny negative rounding
}

double kl_divergence(const SimplexPoint& p, const SimplexPoint& q) {
  return kl_divergence(p.probs(), q.probs());
}

double kl_divergence_or_inf(const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q) {
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return std::numeric_limits<double>::infinity();
    d += p(i) * std::log(p(i) / q(i));
  }
  return d < 0.0 ? 0.0 : d;
}

double mutual_information(const JointPMF& j) {
  // H(Y) - H(Y|X)
  double hy = entropy(j.py());
  double hyx = 0.0;
  for (int x = 0; x < j.nx(); ++x)
    hyx += j.px()(x) * entropy(Eigen::VectorXd(j.table().row(x) / j.px()(x)));
  const double mi = hy - hyx;
  return mi < 0.0 ? 0.0 : mi;
}

double conditional_mi_xy_given_w(const JointPMF& j, const EncoderKernel& enc) {
  if (enc.nx() != j.nx())
    throw std::invalid_argument("conditional_mi: alphabet mismatch");
  // p(w,y) = sum_x p(x) p(w|x) p(y|x); H(Y|W) - H(Y|X)
  Eigen::MatrixXd pwy = Eigen::MatrixXd::Zero(enc.nw(), j.ny());
  for (int x = 0; x < j.nx(); ++x)
    pwy += enc.rows().row(x).transpose() * j.table().row(x);
  double hyw = 0.0;
  for (int w = 0; w < enc.nw(); ++w) {
    const double pw = pwy.row(w).sum();
    if (pw <= 0.0) continue;
    hyw += pw * entropy(Eigen::VectorXd(pwy.row(w) / pw));
  }
  double hyx = 0.0;
  for (int x = 0; x < j.nx(); ++x)
    hyx += j.px()(x) * entropy(Eigen::VectorXd(j.table().row(x) / j.px()(x)));
  const double v = hyw - hyx;
  return v < 0.0 ? 0.0 : v;
}

double rate(const JointPMF& j, const EncoderKernel& enc) {
  if (enc.nx() != j.nx())
    throw std::invalid_argument("rate: alphabet mismatch");
  const Eigen::VectorXd pw = enc.rows().transpose() * j.px();
  double r = 0.0;
  for (int x = 0; x < j.nx(); ++x)
    for (int w = 0; w < enc.nw(); ++w) {
      const double pxw = j.px()(x) * enc.rows()(x, w);
      if (pxw > 0.0 && pw(w) > 0.0)
        r += pxw * std::log(enc.rows()(x, w) / pw(w));
    }
  return r < 0.0 ? 0.0 : r;
}

double predictive_information(const JointPMF& j, const EncoderKernel& enc) {
  if (enc.nx() != j.nx())
    throw std::invalid_argument("predictive_information: alphabet mismatch");
  Eigen::MatrixXd pwy = Eigen::MatrixXd::Zero(enc.nw(), j.ny());
  for (int x = 0; x < j.nx(); ++x)
    pwy += enc.rows().row(x).transpose() * j.table().row(x);
  const Eigen::VectorXd pw = pwy.rowwise().sum();
  const Eigen::VectorXd py = pwy.colwise().sum();
  double mi = 0.0;
  for (int w = 0; w < pwy.rows(); ++w)
    for (int y = 0; y < pwy.cols(); ++y) {
      const double pv = pwy(w, y);
      if (pv > 0.0) mi += pv * std::log(pv / (pw(w) * py(y)));
    }
  return mi < 0.0 ? 0.0 : mi;
}

}  // namespace ibgeo
