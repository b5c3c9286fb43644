#include "odm/core.hpp"

#include <string>

namespace odm {

MediatorDecision decision_from_int(int z) {
  if (z < 0 || z > 2) throw std::invalid_argument("mediator decision out of range: " + std::to_string(z));
  return static_cast<MediatorDecision>(z);
}

std::string_view to_string(MediatorDecision z) {
  switch (z) {
    case MediatorDecision::Accept: return "accept";
    case MediatorDecision::Intervene: return "intervene";
    case MediatorDecision::Request: return "request";
  }
  return "?";
}

void CostSpec::validate() const {
  if (k_int < 0.0 || k_req < 0.0) throw std::invalid_argument("costs must be non-negative");
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  if (!(b > 0.0)) throw std::invalid_argument("b must be positive");
}

ActionId system_action(MediatorDecision z, ActionId human, ActionId model, ActionId expert) {
  switch (z) {
    case MediatorDecision::Accept: return human;
    case MediatorDecision::Intervene: return model;
    case MediatorDecision::Request: return expert;
  }
  return expert;
}

double realized_round_loss(MediatorDecision z, ActionId human, ActionId model, ActionId expert,
                           const CostSpec& costs) {
  switch (z) {
    case MediatorDecision::Accept: return human != expert ? 1.0 : 0.0;
    case MediatorDecision::Intervene: return (model != expert ? 1.0 : 0.0) + costs.k_int;
    case MediatorDecision::Request: return costs.k_req;
  }
  return costs.k_req;
}

double centered_loss(ActionId y, ActionId y_hat, double b) {
  return ((y != y_hat ? 1.0 : 0.0) - 0.5) * 2.0 * b;
}

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SeedSpec::stream_seed(StreamTag tag) const {
  std::uint64_t h = mix(master_seed);
  h = mix(h ^ static_cast<std::uint64_t>(run_index));
  h = mix(h ^ static_cast<std::uint64_t>(tag));
  return h;
}

}  // namespace odm
