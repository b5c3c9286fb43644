#include "odm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace odm {

OracleRound oracle_round(const Eigen::Ref<const Eigen::VectorXd>& oracle_marginal, ActionId human_action,
                         ActionId expert_action, const CostSpec& costs) {
  DecisionInputs in;
  in.marginal = oracle_marginal;
  in.human_action = human_action;
  in.costs = costs;
  in.m = static_cast<int>(oracle_marginal.size());
  const MediatorOutcome g = greedy_decide(in, costs.k_req);
  return {g.decision, g.model_action, realized_round_loss(g.decision, human_action, g.model_action, expert_action, costs)};
}

MetricSeries cumulative_regret(const MetricSeries& system_losses, const MetricSeries& oracle_losses) {
  if (system_losses.values.size() != oracle_losses.values.size())
    throw std::invalid_argument("cumulative_regret: series lengths differ");
  MetricSeries out{"regret", Eigen::VectorXd(system_losses.values.size()), Aggregation::Cumulative, 0};
  double acc = 0.0;
  for (Eigen::Index t = 0; t < out.values.size(); ++t) {
    acc += system_losses.values(t) - oracle_losses.values(t);
    out.values(t) = acc;
  }
  return out;
}

int system_mistake(const RoundRecord& r) { return r.system_action != r.expert_action ? 1 : 0; }

MediatorCounters counter_events(const RoundRecord& r) {
  MediatorCounters c;
  const bool human_wrong = r.human_action != r.expert_action;
  const bool model_wrong = r.model_action != r.expert_action;
  if (r.decision == MediatorDecision::Accept && human_wrong) c.erroneous_acceptances = 1;
  if (r.decision == MediatorDecision::Intervene && r.oracle_decision != MediatorDecision::Intervene)
    c.excessive_interventions = 1;
  if (r.decision != MediatorDecision::Request && human_wrong && model_wrong) c.abstention_shortfalls = 1;
  return c;
}

MediatorCounters mediator_counters(std::span<const RoundRecord> records) {
  MediatorCounters total;
  for (const auto& r : records) {
    const MediatorCounters c = counter_events(r);
    total.erroneous_acceptances += c.erroneous_acceptances;
    total.excessive_interventions += c.excessive_interventions;
    total.abstention_shortfalls += c.abstention_shortfalls;
  }
  return total;
}

namespace {

// Order by descending score; returns (tps, fps) at the end of each run of tied scores.
void threshold_counts(std::span<const double> scores, std::span<const int> positive, std::vector<double>& tps,
                      std::vector<double>& fps) {
  if (scores.size() != positive.size()) throw std::invalid_argument("scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0;
  tps.clear();
  fps.clear();
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (positive[order[k]]) tp += 1.0; else fp += 1.0;
    if (k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]]) {
      tps.push_back(tp);
      fps.push_back(fp);
    }
  }
}

}  // namespace

double binary_auroc(std::span<const double> scores, std::span<const int> positive) {
  std::vector<double> tps, fps;
  threshold_counts(scores, positive, tps, fps);
  if (tps.empty() || tps.back() == 0.0 || fps.back() == 0.0) return std::nan("");
  const double p = tps.back(), n = fps.back();
  double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  for (std::size_t i = 0; i < tps.size(); ++i) {
    const double tpr = tps[i] / p, fpr = fps[i] / n;
    area += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

double binary_auprc(std::span<const double> scores, std::span<const int> positive) {
  std::vector<double> tps, fps;
  threshold_counts(scores, positive, tps, fps);
  if (tps.empty() || tps.back() == 0.0) return std::nan("");
  const double p = tps.back();
  double area = 0.0, prev_recall = 0.0, prev_precision = 1.0;
  for (std::size_t i = 0; i < tps.size(); ++i) {
    const double recall = tps[i] / p;
    const double precision = tps[i] / (tps[i] + fps[i]);
    area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_recall = recall;
    prev_precision = precision;
  }
  return area;
}

HeldoutMetrics classification_metrics(const Eigen::Ref<const Eigen::MatrixXd>& probs, std::span<const ActionId> labels) {
  const auto n = probs.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw std::invalid_argument("heldout set is empty or mismatched");
  HeldoutMetrics out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)].index;
    if (argmax_action(probs.row(i).transpose()).index != y) out.mistake_rate += 1.0;
    out.cross_entropy -= std::log(std::max(probs(i, y), 1e-12));
  }
  out.mistake_rate /= static_cast<double>(n);
  out.cross_entropy /= static_cast<double>(n);

  double roc_sum = 0.0, pr_sum = 0.0;
  int used = 0;
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<int> positive(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = probs(i, c);
      positive[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)].index == c ? 1 : 0;
    }
    const double roc = binary_auroc(scores, positive);
    if (std::isnan(roc)) {
      ++out.skipped_classes;
      continue;
    }
    roc_sum += roc;
    pr_sum += binary_auprc(scores, positive);
    ++used;
  }
  out.auroc = used ? roc_sum / used : std::nan("");
  out.auprc = used ? pr_sum / used : std::nan("");
  return out;
}

HeldoutMetrics heldout_metrics(const ModelState& state, const Dataset& heldout, int s, Rng& rng) {
  if (heldout.empty()) throw std::invalid_argument("heldout set is empty");
  Eigen::MatrixXd queries(static_cast<Eigen::Index>(heldout.size()), heldout.front().x.size());
  std::vector<ActionId> labels;
  labels.reserve(heldout.size());
  for (std::size_t i = 0; i < heldout.size(); ++i) {
    queries.row(static_cast<Eigen::Index>(i)) = heldout[i].x.transpose();
    labels.push_back(heldout[i].y);
  }
  return classification_metrics(predict_marginal_batch(state, queries, s, rng), labels);
}

MetricSeries moving_average(const MetricSeries& series, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  MetricSeries out{series.name, Eigen::VectorXd(series.values.size()), Aggregation::MovingAverage, window};
  for (Eigen::Index t = 0; t < series.values.size(); ++t) {
    const auto count = std::min<Eigen::Index>(window, t + 1);
    out.values(t) = series.values.segment(t + 1 - count, count).mean();
  }
  return out;
}

}  // namespace odm
