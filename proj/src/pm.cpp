#include "odm/pm.hpp"

#include <iomanip>
#include <stdexcept>
#include <string>

#include "odm/csv.hpp"

namespace odm {

int PMGame::null_feedback_rows() const {
  int count = 0;
  for (const auto& row : feedback) {
    bool all_null = true;
    for (const auto& f : row) all_null = all_null && !f.has_value();
    count += all_null ? 1 : 0;
  }
  return count;
}

PMGame build_matrices(int m, ActionId human_action, const CostSpec& costs) {
  if (m < 2) throw std::invalid_argument("build_matrices: m must be at least 2");
  if (human_action.index < 0 || human_action.index >= m) throw std::out_of_range("human action out of range");
  PMGame g;
  g.m = m;
  g.human_action = human_action;
  g.reward.resize(m + 2, m);
  g.feedback.assign(static_cast<std::size_t>(m + 2), std::vector<std::optional<ActionId>>(static_cast<std::size_t>(m)));
  for (int j = 0; j < m; ++j) {
    g.reward(g.accept_row(), j) = j != human_action.index ? -1.0 : 0.0;
    for (int i = 0; i < m; ++i) g.reward(g.intervene_row(i), j) = (j != i ? -1.0 : 0.0) - costs.k_int;
    g.reward(g.request_row(), j) = -costs.k_req;
    g.feedback[static_cast<std::size_t>(g.request_row())][static_cast<std::size_t>(j)] = ActionId(j);
  }
  return g;
}

namespace {

std::string arm_name(const PMGame& g, int row) {
  if (row == g.accept_row()) return "accept";
  if (row == g.request_row()) return "request";
  return "intervene:" + std::to_string(row - 1);
}

}  // namespace

void print_aligned(std::ostream& out, const PMGame& g) {
  const int width = 12;
  out << "# human action " << g.human_action.index << "\n";
  out << "R" << std::string(width - 1, ' ');
  for (int j = 0; j < g.m; ++j) out << std::setw(width) << ("y=" + std::to_string(j));
  out << "\n";
  for (int r = 0; r < g.m + 2; ++r) {
    out << std::left << std::setw(width) << arm_name(g, r) << std::right;
    for (int j = 0; j < g.m; ++j) out << std::setw(width) << format_real(g.reward(r, j));
    out << "\n";
  }
  out << "F" << std::string(width - 1, ' ');
  for (int j = 0; j < g.m; ++j) out << std::setw(width) << ("y=" + std::to_string(j));
  out << "\n";
  for (int r = 0; r < g.m + 2; ++r) {
    out << std::left << std::setw(width) << arm_name(g, r) << std::right;
    for (const auto& f : g.feedback[static_cast<std::size_t>(r)])
      out << std::setw(width) << (f ? std::to_string(f->index) : std::string("-"));
    out << "\n";
  }
}

void print_csv(std::ostream& out, const PMGame& g, bool header) {
  if (header) out << "human_action,matrix,arm,outcome,value\n";
  for (int r = 0; r < g.m + 2; ++r)
    for (int j = 0; j < g.m; ++j)
      out << g.human_action.index << ",R," << arm_name(g, r) << "," << j << "," << format_real(g.reward(r, j)) << "\n";
  for (int r = 0; r < g.m + 2; ++r)
    for (int j = 0; j < g.m; ++j) {
      const auto& f = g.feedback[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
      out << g.human_action.index << ",F," << arm_name(g, r) << "," << j << "," << (f ? std::to_string(f->index) : "-")
          << "\n";
    }
}

}  // namespace odm
