#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"
#include "odm/lambert_w.hpp"

namespace odm {

// ---------------------------------------------------------------------------
// Information estimate from posterior predictive samples.
// ---------------------------------------------------------------------------

/// Natural-log entropy with 0 log 0 = 0.
template <typename Derived>
typename Derived::Scalar entropy(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar v = p.derived().coeff(i);
    if (v > Scalar(0)) h -= v * std::log(v);
  }
  return h;
}

/// H(mean of rows) - mean of H(row). Rows of `probs` are the sampled
/// predictive distributions; each must sum to one within 1e-9.
template <typename Derived>
typename Derived::Scalar mutual_info(const Eigen::MatrixBase<Derived>& probs) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index s = probs.rows();
  if (s < 1 || probs.cols() < 1) throw std::invalid_argument("mutual_info: empty sample set");
  Scalar mean_entropy(0);
  for (Eigen::Index i = 0; i < s; ++i) {
    const auto row = probs.row(i);
    if (std::abs(row.sum() - Scalar(1)) > Scalar(1e-9) || (row.array() < Scalar(0)).any() ||
        (row.array() > Scalar(1)).any())
      throw std::invalid_argument("mutual_info: row " + std::to_string(i) + " is not a probability vector");
    mean_entropy += entropy(row.transpose());
  }
  mean_entropy /= static_cast<Scalar>(s);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean = probs.colwise().mean().transpose();
  const Scalar mi = entropy(mean) - mean_entropy;
  return (mi < Scalar(0) && mi >= Scalar(-1e-12)) ? Scalar(0) : mi;
}

// ---------------------------------------------------------------------------
// Decisions.
// ---------------------------------------------------------------------------

struct DecisionInputs {
  Eigen::VectorXd marginal;  // model predictive pi(.|x), length m
  Eigen::MatrixXd samples;   // s x m posterior predictive samples
  ActionId human_action;
  CostSpec costs;
  int t = 0;
  int m = 0;
};

struct ArmValues {
  double accept = 0.0;
  double intervene = 0.0;
  double request = 0.0;
};

struct MediatorOutcome {
  MediatorDecision decision = MediatorDecision::Accept;
  ActionId model_action;
  double mi_value = 0.0;
  double adjusted_k_req = 0.0;
};

/// Index of the largest entry; lowest index on exact ties.
ActionId argmax_action(const Eigen::Ref<const Eigen::VectorXd>& p);

/// Argmin over arm values, ties broken Accept < Intervene < Request.
MediatorDecision argmin_arm(const ArmValues& v);

/// One-step risk minimizer: accept 1 - p(human), intervene 1 - p(yhat) + k_int, request k_req.
MediatorOutcome greedy_decide(const DecisionInputs& in, double effective_k_req);

/// (1 - kappa g(mi)) k_req, clamped to [0, k_req].
double adjusted_request_cost(double mi, const CostSpec& costs);

/// Greedy mediator with the request cost lowered by the information the expert label would bring.
MediatorOutcome umpire_decide(const DecisionInputs& in);

enum class PolicyKind {
  Human,
  Random,
  Supervised,
  CostSensitive,
  Thompson,
  FullThompson,
  EpsilonGreedy,
  EpsilonRequest,
  PessimisticBayesianSampling,
  BayesianActiveRequest,
  MatchedDecayingRequest,
  Umpire,
  // Greedy mediator on the oracle model's marginal; the runner supplies that marginal.
  Oracle,
};

std::string_view to_string(PolicyKind kind);
/// Accepts the names printed by to_string (e.g. "cost-sensitive", "umpire").
PolicyKind policy_kind_from_string(std::string_view name);
std::vector<PolicyKind> all_policy_kinds();

// ---------------------------------------------------------------------------
// Hindsight-matched decaying request rate.
// ---------------------------------------------------------------------------

struct MatchedEpsilon {
  /// Cubic C(t) = c0 + c1 tau + c2 tau^2 + c3 tau^3 with tau = t / horizon.
  Eigen::Vector4d coefficients = Eigen::Vector4d::Zero();
  int horizon = 0;
  /// epsilon[t - 1] for t = 1..horizon.
  std::vector<double> epsilon;

  double cumulative(double t) const;
  /// Rounds past the horizon reuse the last rate.
  double at(int t) const;
};

/// Averages per-run cumulative request curves (entry t - 1 is the count after round t),
/// least-squares fits a cubic through (0, 0) and the averaged curve, and differences it.
MatchedEpsilon fit_matched_epsilon(const std::vector<std::vector<double>>& cumulative_requests);

struct PolicySpec {
  PolicyKind kind = PolicyKind::CostSensitive;
  std::optional<MatchedEpsilon> matched;
  /// UMPIRE only: request with probability costs.epsilon before the greedy step.
  bool epsilon_floor = false;
};

/// Every policy except UMPIRE and Oracle (see decide()).
MediatorOutcome benchmark_decide(PolicyKind kind, const DecisionInputs& in, Rng& rng,
                                 const MatchedEpsilon* matched = nullptr);

/// Single dispatch over all policy kinds.
MediatorOutcome decide(const PolicySpec& policy, const DecisionInputs& in, Rng& rng);

}  // namespace odm
