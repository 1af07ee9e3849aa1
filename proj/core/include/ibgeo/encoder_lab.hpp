#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibgeo/dirichlet.hpp"
#include "ibgeo/prob.hpp"
#include "ibgeo/sigreg.hpp"
#include "ibgeo/tasks.hpp"

namespace ibgeo {

// Trainable stochastic encoders and the non-parametric minibatch losses:
// leave-one-out (LOO) mixture rate estimators, CEB, VIB, the
// semi-/self-supervised variants, the decoder stage, and the toy
// training harness.

/// A batch of inputs as feature rows, with optional labels and optional
/// row weights (uniform when absent). Weighted batches express exact
/// population panels; sampled batches use uniform weights.
struct Minibatch {
  Eigen::MatrixXd xs;                        // N x F
  std::optional<Eigen::VectorXi> ys;         // N labels
  std::optional<Eigen::VectorXd> weights;    // N, positive, sums to 1

  int size() const { return static_cast<int>(xs.rows()); }
  Eigen::VectorXd effective_weights() const;
  /// Throws (naming the class) when some label class has fewer than two
  /// members, which starves the within-class LOO mixture.
  void require_class_pairs() const;
};

/// Linear map over a fixed feature basis into Dirichlet concentrations:
/// alpha(x) = softplus(V phi(x)) + alpha_min, elementwise.
class DirichletEncoder {
 public:
  DirichletEncoder(int k, int features, double alpha_min = 1e-3);

  static DirichletEncoder random_init(int k, int features, double scale,
                                      std::uint64_t seed,
                                      double alpha_min = 1e-3);
  /// One-hot-feature encoder reproducing the given concentration rows
  /// exactly (softplus inverted); rows of alphas are per-input alpha.
  static DirichletEncoder from_alphas(const Eigen::MatrixXd& alphas,
                                      double alpha_min = 1e-3);

  int k() const { return k_; }
  int features() const { return static_cast<int>(v_.cols()); }
  double alpha_min() const { return alpha_min_; }
  const Eigen::MatrixXd& weights() const { return v_; }
  Eigen::MatrixXd& weights() { return v_; }

  Eigen::VectorXd alpha(const Eigen::VectorXd& phi) const;
  /// alpha together with d alpha_k / d z_k (the softplus slope), needed
  /// to chain loss gradients back to the weights.
  void alpha_eval(const Eigen::VectorXd& phi, Eigen::VectorXd& alpha,
                  Eigen::VectorXd& dslope) const;

  std::string to_json_string() const;  // versioned checkpoint
  static DirichletEncoder from_json_string(const std::string& text);

 private:
  int k_;
  double alpha_min_;
  Eigen::MatrixXd v_;  // K x F
};

/// Diagonal Gaussian encoder w ~ N(mu(x), diag sigma^2(x)) over R^d, with
/// mu = Wm phi and log-variance = Wv phi.
class GaussianEncoder {
 public:
  GaussianEncoder(int d, int features);
  static GaussianEncoder random_init(int d, int features, double scale,
                                     std::uint64_t seed);

  int d() const { return d_; }
  int features() const { return static_cast<int>(wm_.cols()); }
  const Eigen::MatrixXd& w_mu() const { return wm_; }
  Eigen::MatrixXd& w_mu() { return wm_; }
  const Eigen::MatrixXd& w_logvar() const { return wv_; }
  Eigen::MatrixXd& w_logvar() { return wv_; }

  Eigen::VectorXd mu(const Eigen::VectorXd& phi) const { return wm_ * phi; }
  Eigen::VectorXd logvar(const Eigen::VectorXd& phi) const {
    return wv_ * phi;
  }

 private:
  int d_;
  Eigen::MatrixXd wm_, wv_;
};

struct EstimatorConfig {
  int s = 64;                // latent samples per input
  std::uint64_t seed = 101;  // noise stream for the pathwise samples
};

/// Scalar loss plus gradient with respect to the encoder weight matrix.
struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

/// LOO estimate of the total rate E_x[ KL(q(w|x) || q(w)) ], with the
/// marginal replaced by the leave-one-out mixture over the batch. The
/// conditional-entropy half is closed form; the mixture half is Monte
/// Carlo over s pathwise samples per input.
LossValue loo_total_rate(const DirichletEncoder& enc, const Minibatch& batch,
                         const EstimatorConfig& cfg = {});

/// LOO estimate of the conditional rate E_{x,y}[ KL(q(w|x) || q(w|y)) ]
/// with the class marginal replaced by the within-class LOO mixture.
LossValue loo_conditional_rate(const DirichletEncoder& enc,
                               const Minibatch& batch,
                               const EstimatorConfig& cfg = {});

/// CEB loss beta * conditional_rate + (1 - beta) * total_rate, both
/// mixtures scored on one shared set of latent samples.
struct CebValue {
  double value = 0.0;
  double conditional_rate = 0.0;
  double total_rate = 0.0;
  Eigen::MatrixXd grad;
};
CebValue ceb_loss(const DirichletEncoder& enc, const Minibatch& batch,
                  double beta, const EstimatorConfig& cfg = {});

/// Gaussian-encoder versions of the LOO rates (used by the
/// semi-supervised loss and its tests).
struct GaussLossValue {
  double value = 0.0;
  double first_term = 0.0;   // rate / spread term
  double sigreg_term = 0.0;  // 0 when not applicable
  Eigen::MatrixXd grad_mu, grad_logvar;
};
GaussLossValue loo_total_rate(const GaussianEncoder& enc,
                              const Minibatch& batch,
                              const EstimatorConfig& cfg = {});
GaussLossValue loo_conditional_rate(const GaussianEncoder& enc,
                                    const Minibatch& batch,
                                    const EstimatorConfig& cfg = {});

/// Linear softmax readout over the latent.
struct SoftmaxHead {
  Eigen::MatrixXd a;  // C x d
  Eigen::VectorXd b;  // C

  Eigen::VectorXd predict(const Eigen::VectorXd& w) const;
};

/// VIB objective beta * cross-entropy(through sampled latents) +
/// closed-form KL(q(w|x) || N(0, I)), jointly over encoder and head.
struct VibValue {
  double value = 0.0;
  double pred_term = 0.0;
  double kl_term = 0.0;
  Eigen::MatrixXd grad_mu, grad_logvar, grad_a;
  Eigen::VectorXd grad_b;
};
VibValue vib_loss(const GaussianEncoder& enc, const SoftmaxHead& head,
                  const Minibatch& batch, double beta,
                  const EstimatorConfig& cfg = {});

/// Semi-supervised loss: conditional rate on the labeled subset plus
/// lambda * SIGReg on sampled encoder outputs of all data.
GaussLossValue semi_loss(const GaussianEncoder& enc, const Minibatch& labeled,
                         const Minibatch& all_data, double lambda,
                         const SketchConfig& sketch,
                         const EstimatorConfig& cfg = {});

/// Self-supervised loss: mean pairwise squared distance between the view
/// embedding means (D_V) plus lambda * SIGReg over all embeddings.
GaussLossValue self_loss(const GaussianEncoder& enc,
                         const std::vector<Minibatch>& views, double lambda,
                         const SketchConfig& sketch);

/// Decoder stage: gradient-descent fit of a softmax readout on latents
/// sampled from a frozen encoder; cross-entropy per epoch is recorded.
struct DecoderStageResult {
  SoftmaxHead head;
  std::vector<double> ce_curve;
};
DecoderStageResult decoder_stage(const DirichletEncoder& enc,
                                 const Minibatch& labeled, int epochs,
                                 double lr = 1.0,
                                 const EstimatorConfig& cfg = {});

/// A discrete evaluation panel: distinct inputs with features, exact
/// predictive rows, and input masses. Used by the plug-in estimators.
struct DiscretePanel {
  Eigen::MatrixXd features;  // D x F
  Eigen::MatrixXd cond;      // D x C, rows p(y|x)
  Eigen::VectorXd px;        // D, sums to 1
};

DiscretePanel panel_from_joint(const JointPMF& j);

/// Plug-in information estimates of a Dirichlet encoder on a panel:
/// rate and conditional rate by LOO over an i.i.d. resample of size n,
/// epsilon by Monte Carlo KL against the exact mixture decoder
/// p(y|w) = sum_x p(x) q(w|x) p(y|x) / sum_x p(x) q(w|x).
struct PluginEstimates {
  double rate = 0.0;
  double cond_rate = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double ixy = 0.0;
};
PluginEstimates plugin_estimates(const DirichletEncoder& enc,
                                 const DiscretePanel& panel, int n,
                                 const EstimatorConfig& cfg = {});

enum class ToyTask {
  continuous_loop,
  discrete_clusters,
  binary,
  ternary,
  synthetic_classes
};
enum class ToyObjective { ib_known_py, ceb_loo };

struct TrainConfig {
  double lr = 0.05;
  int epochs = 3000;
  double clip_norm = 10.0;
  int s_train = 8;           // latent samples per input while training
  int batch_n = 256;         // resampled rows per epoch (CEB objective)
  double lr_min_frac = 1.0;  // linear lr decay floor (1 = constant lr)
  int k = 0;                 // 0 = auto (|Y| for discrete tasks)
  std::uint64_t seed = 42;
  int bins = 256;            // continuous_loop discretization
  int record_every = 100;
  double init_scale = 0.3;
  int plugin_n = 2048;       // resample size for final plug-ins
  int plugin_s = 64;
  double sigma_synth = 1.0;  // synthetic_classes overlap
  int n_per_class = 15;      // synthetic_classes panel size per class
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double pred_term = 0.0;   // distortion / conditional rate
  double shape_term = 0.0;  // rate / total rate
  double r = 0.0;           // information-plane coordinates at this epoch
  double delta = 0.0;
  double epsilon = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> curve;
  PluginEstimates final_estimates;
  bool diverged = false;
  int k = 0;
  double beta = 0.0;
  Eigen::MatrixXd encoder_weights;
  double encoder_alpha_min = 1e-3;

  std::string to_json_string() const;
  std::string trajectory_csv() const;  // epoch,pred_term,shape_term,...
};

TrainReport train_toy(ToyTask task, ToyObjective objective, double beta,
                      const TrainConfig& cfg = {});

/// Mean KL between the true loop conditionals and the trained Dirichlet
/// means, minimized over the 3! simplex-coordinate permutations (the IB
/// objective fixes W only up to such a gauge).
double gauge_matched_loop_kl(const DirichletEncoder& enc, int bins = 256);

/// Feature bases for the built-in tasks.
Eigen::MatrixXd one_hot_features(int n);
/// Rows [1, cos t, sin t, cos 2t, sin 2t, ...] for each angle.
Eigen::MatrixXd fourier_features(const Eigen::VectorXd& angles,
                                 int harmonics);

const char* toy_task_name(ToyTask t);
ToyTask toy_task_by_name(const std::string& name);

}  // namespace ibgeo
