#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

namespace odm {

using Rng = std::mt19937_64;
using ContextVector = Eigen::VectorXd;

/// Class label in [0, m).
struct ActionId {
  int index = 0;

  constexpr ActionId() = default;
  constexpr explicit ActionId(int i) : index(i) {}

  constexpr auto operator<=>(const ActionId&) const = default;
};

/// Mediator action. The integer values are the ones written to CSV logs.
enum class MediatorDecision : int { Accept = 0, Intervene = 1, Request = 2 };

constexpr int to_int(MediatorDecision z) { return static_cast<int>(z); }
MediatorDecision decision_from_int(int z);
std::string_view to_string(MediatorDecision z);

struct CostSpec {
  double k_int = 0.1;
  double k_req = 0.6;
  double epsilon = 0.1;
  double kappa = 0.0;  // resolved to kappa0(m, b) by the runner unless set explicitly
  double b = 0.5;

  void validate() const;
};

/// Everything that happened in one round, including the quantities the
/// learner never sees (expert action on non-request rounds, oracle round).
struct RoundRecord {
  int t = 0;
  ContextVector context;
  ActionId human_action;
  ActionId model_action;
  ActionId expert_action;
  MediatorDecision decision = MediatorDecision::Accept;
  ActionId system_action;
  double realized_loss = 0.0;
  MediatorDecision oracle_decision = MediatorDecision::Accept;
  double oracle_loss = 0.0;
  double mi_value = 0.0;
  double adjusted_k_req = 0.0;
};

/// Final action of the combined system for a given mediator decision.
ActionId system_action(MediatorDecision z, ActionId human, ActionId model, ActionId expert);

double realized_round_loss(MediatorDecision z, ActionId human, ActionId model, ActionId expert,
                           const CostSpec& costs);

inline double realized_round_loss(const RoundRecord& r, const CostSpec& costs) {
  return realized_round_loss(r.decision, r.human_action, r.model_action, r.expert_action, costs);
}

/// Zero-one loss centered and scaled to {-b, +b}.
double centered_loss(ActionId y, ActionId y_hat, double b);

enum class StreamTag : std::uint64_t {
  Environment = 1,
  Human = 2,
  ModelSampling = 3,
  Policy = 4,
  Seed = 5,
  Heldout = 6,
  Oracle = 7,
  Evaluation = 8,
};

struct SeedSpec {
  std::uint64_t master_seed = 0;
  int run_index = 0;

  /// Seed for one independent stream. Same (master, run, tag) -> same seed.
  std::uint64_t stream_seed(StreamTag tag) const;
  Rng stream(StreamTag tag) const { return Rng(stream_seed(tag)); }
};

}  // namespace odm
