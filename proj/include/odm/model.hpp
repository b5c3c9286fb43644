#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"
#include "odm/env.hpp"

namespace odm {

// Online Dirichlet-based GP classifier: each class is an independent GP
// regression on log-space pseudo-count targets with heteroskedastic noise,
// sharing one RBF kernel. Latent samples pushed through a softmax give the
// posterior predictive samples p(Y | x, w_i).

struct KernelSettings {
  /// Unset: median pairwise distance of the training contexts, refreshed on every insertion.
  std::optional<double> lengthscale;
  double signal_variance = 1.0;
  double jitter = 1e-6;
  double alpha_eps = 0.01;
};

struct DirichletTargets {
  Eigen::VectorXd targets;
  Eigen::VectorXd noise_vars;
};

/// alpha_k = alpha_eps + [k == label]; noise_k = log(1/alpha_k + 1); target_k = log(alpha_k) - noise_k / 2.
DirichletTargets dirichlet_transform(ActionId label, int m, double alpha_eps);

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, double jitter) : std::runtime_error(what), jitter_(jitter) {}
  double last_jitter() const { return jitter_; }

 private:
  double jitter_;
};

class MissingClassError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LatentPosterior {
  Eigen::MatrixXd mean;  // queries x classes
  Eigen::MatrixXd var;   // queries x classes, clamped at 0
  int clamped = 0;       // negative variances clamped
};

/// s x m; every row a probability vector.
struct PredictiveSampleSet {
  Eigen::MatrixXd probs;
  int clamped_variances = 0;

  Eigen::Index samples() const { return probs.rows(); }
  Eigen::Index classes() const { return probs.cols(); }
  Eigen::VectorXd mean() const { return probs.colwise().mean().transpose(); }
};

class ModelState {
 public:
  int num_classes() const { return m_; }
  Eigen::Index size() const { return inputs_.rows(); }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const std::vector<ActionId>& labels() const { return labels_; }
  const KernelSettings& settings() const { return settings_; }
  double lengthscale() const { return lengthscale_; }
  /// Diagonal jitter that made every class factorization succeed.
  double jitter() const { return jitter_; }

  LatentPosterior latent(const Eigen::Ref<const Eigen::MatrixXd>& queries) const;

 private:
  friend ModelState fit(const Dataset&, int, const KernelSettings&);
  friend ModelState update(const ModelState&, const LabeledExample&);
  friend void write_snapshot(std::ostream&, const ModelState&);

  void factorize();
  void solve_weights();
  bool try_extend(const LabeledExample& e);

  int m_ = 0;
  KernelSettings settings_;
  double lengthscale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd inputs_;        // N x d
  std::vector<ActionId> labels_;
  Eigen::MatrixXd targets_;       // N x m
  Eigen::MatrixXd noise_;         // N x m
  Eigen::RowVectorXd prior_mean_; // per-class constant mean
  std::vector<Eigen::MatrixXd> chol_;  // lower factor per class
  Eigen::MatrixXd weights_;       // N x m, (K + S_k)^-1 (y_k - mu_k)
};

ModelState fit(const Dataset& examples, int m, const KernelSettings& settings);

/// Equivalent to refitting on the enlarged set. Uses a Cholesky row extension
/// when the lengthscale is fixed, a full refit otherwise.
ModelState update(const ModelState& state, const LabeledExample& example);

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double lengthscale, double signal_variance);

/// Median pairwise Euclidean distance between rows; 1 when undefined or zero.
double median_heuristic(const Eigen::Ref<const Eigen::MatrixXd>& points);

/// Softmax of independent Gaussian latent draws per class.
PredictiveSampleSet sample_from_latent(const Eigen::Ref<const Eigen::VectorXd>& mean,
                                       const Eigen::Ref<const Eigen::VectorXd>& var, int s, Rng& rng);

PredictiveSampleSet sample_predictives(const ModelState& state, const ContextVector& x, int s, Rng& rng);

Eigen::VectorXd predict_marginal(const ModelState& state, const ContextVector& x, int s, Rng& rng);

/// Marginals for many queries (rows of `queries`), sampled in row order.
Eigen::MatrixXd predict_marginal_batch(const ModelState& state, const Eigen::Ref<const Eigen::MatrixXd>& queries, int s,
                                       Rng& rng);

/// Plain-text debugging dump (format "odm-model-snapshot v1"), see README.
void write_snapshot(std::ostream& out, const ModelState& state);

}  // namespace odm
