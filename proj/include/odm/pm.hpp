#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"

namespace odm {

// Reward and feedback matrices of the decision-mediation instance viewed as a
// contextual partial-monitoring game. Rows are arms: 0 accepts the human,
// 1 + i intervenes with action i, m + 1 requests. Columns are expert outcomes.
struct PMGame {
  int m = 0;
  ActionId human_action;
  Eigen::MatrixXd reward;  // (m + 2) x m
  /// Feedback symbols; std::nullopt is the null symbol (no feedback).
  std::vector<std::vector<std::optional<ActionId>>> feedback;

  int accept_row() const { return 0; }
  int intervene_row(int action) const { return 1 + action; }
  int request_row() const { return m + 1; }
  /// Rows whose feedback is null in every column.
  int null_feedback_rows() const;
};

PMGame build_matrices(int m, ActionId human_action, const CostSpec& costs);

/// Aligned text, one reward block and one feedback block ("-" is the null symbol).
void print_aligned(std::ostream& out, const PMGame& game);

/// CSV rows: human_action,matrix,arm,outcome,value (value "-" for null feedback).
void print_csv(std::ostream& out, const PMGame& game, bool header);

}  // namespace odm
