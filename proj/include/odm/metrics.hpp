#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"
#include "odm/env.hpp"
#include "odm/mediators.hpp"
#include "odm/model.hpp"

namespace odm {

enum class Aggregation { PerRound, Cumulative, MovingAverage };

struct MetricSeries {
  std::string name;
  Eigen::VectorXd values;
  Aggregation aggregation = Aggregation::PerRound;
  int window = 0;  // MovingAverage only
};

struct MediatorCounters {
  int erroneous_acceptances = 0;  // z = 0 while human != expert
  int excessive_interventions = 0;  // z = 1 while the oracle mediator would not intervene
  int abstention_shortfalls = 0;  // z in {0, 1} while both human and model are wrong

  auto operator<=>(const MediatorCounters&) const = default;
};

struct OracleRound {
  MediatorDecision decision = MediatorDecision::Accept;
  ActionId model_action;
  double loss = 0.0;
};

/// Best-in-class round: greedy mediator on the oracle model's marginal, scored against the expert.
OracleRound oracle_round(const Eigen::Ref<const Eigen::VectorXd>& oracle_marginal, ActionId human_action,
                         ActionId expert_action, const CostSpec& costs);

/// Running sum of system minus oracle losses.
MetricSeries cumulative_regret(const MetricSeries& system_losses, const MetricSeries& oracle_losses);

int system_mistake(const RoundRecord& r);

/// Counter increments contributed by one round.
MediatorCounters counter_events(const RoundRecord& r);
MediatorCounters mediator_counters(std::span<const RoundRecord> records);

struct HeldoutMetrics {
  double mistake_rate = 0.0;
  double cross_entropy = 0.0;
  double auroc = 0.0;
  double auprc = 0.0;
  int skipped_classes = 0;  // classes without positives (or negatives) left out of the macro averages
};

/// Binary ROC area by trapezoidal integration over distinct score thresholds.
double binary_auroc(std::span<const double> scores, std::span<const int> positive);

/// Binary precision-recall area by trapezoidal integration, curve anchored at (recall 0, precision 1).
double binary_auprc(std::span<const double> scores, std::span<const int> positive);

/// Metrics of a fixed matrix of predicted class probabilities (rows) against labels.
HeldoutMetrics classification_metrics(const Eigen::Ref<const Eigen::MatrixXd>& probs, std::span<const ActionId> labels);

HeldoutMetrics heldout_metrics(const ModelState& state, const Dataset& heldout, int s, Rng& rng);

/// Mean of the last min(window, t + 1) entries at each t.
MetricSeries moving_average(const MetricSeries& series, int window);

}  // namespace odm
