#include "odm/mediators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>

namespace odm {

ActionId argmax_action(const Eigen::Ref<const Eigen::VectorXd>& p) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p(i) > p(best)) best = i;
  return ActionId(static_cast<int>(best));
}

MediatorDecision argmin_arm(const ArmValues& v) {
  MediatorDecision z = MediatorDecision::Accept;
  double best = v.accept;
  if (v.intervene < best) {
    z = MediatorDecision::Intervene;
    best = v.intervene;
  }
  if (v.request < best) z = MediatorDecision::Request;
  return z;
}

namespace {

MediatorOutcome greedy_on(const Eigen::Ref<const Eigen::VectorXd>& p, ActionId human, const CostSpec& costs,
                          double k_req) {
  const ActionId yhat = argmax_action(p);
  const ArmValues v{1.0 - p(human.index), 1.0 - p(yhat.index) + costs.k_int, k_req};
  return {argmin_arm(v), yhat, 0.0, k_req};
}

double unit_draw(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

Eigen::Index sample_row(const DecisionInputs& in, Rng& rng) {
  if (in.samples.rows() < 1) throw std::invalid_argument("policy needs posterior samples");
  return std::uniform_int_distribution<Eigen::Index>(0, in.samples.rows() - 1)(rng);
}

void check_inputs(const DecisionInputs& in) {
  if (in.marginal.size() != in.m || in.m < 2) throw std::invalid_argument("marginal length must equal m >= 2");
  if (in.human_action.index < 0 || in.human_action.index >= in.m) throw std::out_of_range("human action out of range");
}

}  // namespace

MediatorOutcome greedy_decide(const DecisionInputs& in, double effective_k_req) {
  check_inputs(in);
  return greedy_on(in.marginal, in.human_action, in.costs, effective_k_req);
}

double adjusted_request_cost(double mi, const CostSpec& costs) {
  const double k = (1.0 - costs.kappa * g_transform(std::max(mi, 0.0), costs.b)) * costs.k_req;
  return std::clamp(k, 0.0, costs.k_req);
}

MediatorOutcome umpire_decide(const DecisionInputs& in) {
  check_inputs(in);
  const double mi = mutual_info(in.samples);
  const double k_bar = adjusted_request_cost(mi, in.costs);
  MediatorOutcome out = greedy_on(in.marginal, in.human_action, in.costs, k_bar);
  out.mi_value = mi;
  return out;
}

namespace {

constexpr std::array<std::pair<PolicyKind, std::string_view>, 13> kPolicyNames{{
    {PolicyKind::Human, "human"},
    {PolicyKind::Random, "random"},
    {PolicyKind::Supervised, "supervised"},
    {PolicyKind::CostSensitive, "cost-sensitive"},
    {PolicyKind::Thompson, "thompson"},
    {PolicyKind::FullThompson, "full-thompson"},
    {PolicyKind::EpsilonGreedy, "epsilon-greedy"},
    {PolicyKind::EpsilonRequest, "epsilon-request"},
    {PolicyKind::PessimisticBayesianSampling, "pessimistic-bayesian-sampling"},
    {PolicyKind::BayesianActiveRequest, "bayesian-active-request"},
    {PolicyKind::MatchedDecayingRequest, "matched-decaying-request"},
    {PolicyKind::Umpire, "umpire"},
    {PolicyKind::Oracle, "oracle"},
}};

}  // namespace

std::string_view to_string(PolicyKind kind) {
  for (const auto& [k, name] : kPolicyNames)
    if (k == kind) return name;
  return "?";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kPolicyNames)
    if (n == name) return k;
  throw std::invalid_argument("unknown policy: " + std::string(name));
}

std::vector<PolicyKind> all_policy_kinds() {
  std::vector<PolicyKind> out;
  for (const auto& [k, name] : kPolicyNames) out.push_back(k);
  return out;
}

double MatchedEpsilon::cumulative(double t) const {
  const double tau = horizon > 0 ? t / horizon : 0.0;
  return coefficients(0) + tau * (coefficients(1) + tau * (coefficients(2) + tau * coefficients(3)));
}

double MatchedEpsilon::at(int t) const {
  if (epsilon.empty()) return 0.0;
  const auto i = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(t, 1) - 1), 0, epsilon.size() - 1);
  return epsilon[i];
}

MatchedEpsilon fit_matched_epsilon(const std::vector<std::vector<double>>& cumulative_requests) {
  if (cumulative_requests.empty()) throw std::invalid_argument("fit_matched_epsilon: no request curves");
  const std::size_t n = cumulative_requests.front().size();
  if (n == 0) throw std::invalid_argument("fit_matched_epsilon: empty request curve");
  for (const auto& c : cumulative_requests)
    if (c.size() != n) throw std::invalid_argument("fit_matched_epsilon: curves differ in length");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) + 1);
  for (const auto& c : cumulative_requests)
    for (std::size_t t = 0; t < n; ++t) mean(static_cast<Eigen::Index>(t) + 1) += c[t];
  mean /= static_cast<double>(cumulative_requests.size());

  MatchedEpsilon out;
  out.horizon = static_cast<int>(n);
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n) + 1, 3);
  for (Eigen::Index t = 0; t <= static_cast<Eigen::Index>(n); ++t) {
    const double tau = static_cast<double>(t) / static_cast<double>(n);
    design.row(t) << tau, tau * tau, tau * tau * tau;
  }
  out.coefficients << 0.0, design.colPivHouseholderQr().solve(mean);
  out.epsilon.resize(n);
  for (std::size_t t = 1; t <= n; ++t)
    out.epsilon[t - 1] = std::clamp(out.cumulative(static_cast<double>(t)) - out.cumulative(static_cast<double>(t - 1)), 0.0, 1.0);
  return out;
}

MediatorOutcome benchmark_decide(PolicyKind kind, const DecisionInputs& in, Rng& rng, const MatchedEpsilon* matched) {
  check_inputs(in);
  const CostSpec& c = in.costs;
  const auto request_with = [&](const MediatorOutcome& greedy) {
    MediatorOutcome out = greedy;
    out.decision = MediatorDecision::Request;
    return out;
  };

  switch (kind) {
    case PolicyKind::Human:
      return {MediatorDecision::Accept, argmax_action(in.marginal), 0.0, c.k_req};

    case PolicyKind::Random: {
      const int z = std::uniform_int_distribution<int>(0, 2)(rng);
      return {decision_from_int(z), argmax_action(in.marginal), 0.0, c.k_req};
    }

    case PolicyKind::Supervised: {
      const ActionId yhat = argmax_action(in.marginal);
      if (unit_draw(rng) < c.epsilon) return {MediatorDecision::Request, yhat, 0.0, c.k_req};
      return {yhat == in.human_action ? MediatorDecision::Accept : MediatorDecision::Intervene, yhat, 0.0, c.k_req};
    }

    case PolicyKind::CostSensitive:
    case PolicyKind::Oracle:
      return greedy_on(in.marginal, in.human_action, c, c.k_req);

    case PolicyKind::Thompson:
    case PolicyKind::FullThompson: {
      const Eigen::VectorXd row = in.samples.row(sample_row(in, rng)).transpose();
      MediatorOutcome out = greedy_on(row, in.human_action, c, c.k_req);
      if (kind == PolicyKind::Thompson) out.model_action = argmax_action(in.marginal);
      return out;
    }

    case PolicyKind::EpsilonGreedy: {
      MediatorOutcome out = greedy_on(in.marginal, in.human_action, c, c.k_req);
      if (unit_draw(rng) < c.epsilon) out.decision = decision_from_int(std::uniform_int_distribution<int>(0, 2)(rng));
      return out;
    }

    case PolicyKind::EpsilonRequest: {
      const MediatorOutcome greedy = greedy_on(in.marginal, in.human_action, c, c.k_req);
      return unit_draw(rng) < c.epsilon ? request_with(greedy) : greedy;
    }

    case PolicyKind::PessimisticBayesianSampling: {
      const Eigen::VectorXd row = in.samples.row(sample_row(in, rng)).transpose();
      const Eigen::VectorXd pess = in.marginal.cwiseMin(row);
      const ActionId yhat = argmax_action(in.marginal);
      const ArmValues v{1.0 - pess(in.human_action.index), 1.0 - pess(yhat.index) + c.k_int, c.k_req};
      return {argmin_arm(v), yhat, 0.0, c.k_req};
    }

    case PolicyKind::BayesianActiveRequest: {
      const MediatorOutcome greedy = greedy_on(in.marginal, in.human_action, c, c.k_req);
      const double p = std::clamp(mutual_info(in.samples) / std::log(static_cast<double>(in.m)), 0.0, 1.0);
      return unit_draw(rng) < p ? request_with(greedy) : greedy;
    }

    case PolicyKind::MatchedDecayingRequest: {
      if (matched == nullptr) throw std::logic_error("matched-decaying-request used without fitted coefficients");
      const MediatorOutcome greedy = greedy_on(in.marginal, in.human_action, c, c.k_req);
      return unit_draw(rng) < matched->at(in.t) ? request_with(greedy) : greedy;
    }

    case PolicyKind::Umpire:
      throw std::logic_error("umpire is not a benchmark policy; use decide()");
  }
  throw std::logic_error("unhandled policy kind");
}

MediatorOutcome decide(const PolicySpec& policy, const DecisionInputs& in, Rng& rng) {
  if (policy.kind != PolicyKind::Umpire)
    return benchmark_decide(policy.kind, in, rng, policy.matched ? &*policy.matched : nullptr);
  MediatorOutcome out = umpire_decide(in);
  if (policy.epsilon_floor && unit_draw(rng) < in.costs.epsilon) out.decision = MediatorDecision::Request;
  return out;
}

}  // namespace odm
