#include "odm/env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "odm/csv.hpp"

namespace odm {

ActionId gauss_sine_label(double x1, double x2, double u, double noise) {
  const double f = std::sin(0.15 * std::numbers::pi * u + x1 + x2) + 1.0;
  const double y = std::clamp(std::round(f + noise), 0.0, 2.0);
  return ActionId(static_cast<int>(y));
}

LabeledExample gauss_sine_draw(const GaussSineParams& params, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x1 = gauss(rng);
  const double x2 = gauss(rng);
  const double u = unit(rng);
  // Always consume the noise draw so streams line up across noise levels.
  const double noise = (unit(rng) - 0.5) * params.noise_q;
  ContextVector x(2);
  x << x1, x2;
  return {std::move(x), gauss_sine_label(x1, x2, u, noise)};
}

namespace {

constexpr double kVarianceFloor = 1e-8;

std::vector<std::string> read_line_fields(std::istream& in, char delim, bool& ok) {
  std::string line;
  ok = static_cast<bool>(std::getline(in, line));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return ok ? split_delimited(line, delim) : std::vector<std::string>{};
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

TabularPool read_tabular_pool(const TabularSource& source) {
  std::ifstream in(source.path);
  if (!in) throw TabularError(TabularErrorKind::MissingFile, "cannot open data file: " + source.path.string());

  std::string header_line;
  if (!std::getline(in, header_line)) throw TabularError(TabularErrorKind::Malformed, "empty data file: " + source.path.string());
  if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0) header_line.erase(0, 3);
  if (!header_line.empty() && header_line.back() == '\r') header_line.pop_back();
  const char delim = source.delimiter != '\0' ? source.delimiter
                     : header_line.find('\t') != std::string::npos ? '\t'
                                                                   : ',';
  std::vector<std::string> header = split_delimited(header_line, delim);
  for (auto& h : header) h = trim(h);

  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw TabularError(TabularErrorKind::UnknownColumn, "unknown column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t label_col = column_index(source.label_column);
  std::vector<std::size_t> feature_cols;
  TabularPool pool;
  if (source.feature_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == label_col) continue;
      feature_cols.push_back(c);
      pool.feature_names.push_back(header[c]);
    }
  } else {
    for (const auto& name : source.feature_columns) {
      feature_cols.push_back(column_index(name));
      pool.feature_names.push_back(name);
    }
  }
  if (feature_cols.empty()) throw TabularError(TabularErrorKind::Malformed, "no feature columns selected");

  std::vector<std::vector<double>> rows;
  std::unordered_map<std::string, int> label_index;
  std::size_t line_no = 1;
  for (bool ok = true;;) {
    auto fields = read_line_fields(in, delim, ok);
    if (!ok) break;
    ++line_no;
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (fields.size() != header.size())
      throw TabularError(TabularErrorKind::Malformed, "line " + std::to_string(line_no) + ": expected " +
                                                          std::to_string(header.size()) + " fields, got " +
                                                          std::to_string(fields.size()));
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
      const std::string cell = trim(fields[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw TabularError(TabularErrorKind::NonFiniteValue, "line " + std::to_string(line_no) + ", column " +
                                                                 header[c] + ": non-finite value '" + cell + "'");
      row.push_back(v);
    }
    const std::string label = trim(fields[label_col]);
    auto [it, inserted] = label_index.try_emplace(label, static_cast<int>(pool.class_names.size()));
    if (inserted) pool.class_names.push_back(label);
    pool.labels.emplace_back(it->second);
    rows.push_back(std::move(row));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(feature_cols.size());
  pool.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) pool.features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  if (n > 0) {
    const Eigen::RowVectorXd mean = pool.features.colwise().mean();
    pool.features.rowwise() -= mean;
    const Eigen::RowVectorXd var = pool.features.array().square().colwise().mean();
    const Eigen::RowVectorXd sd = var.array().max(kVarianceFloor).sqrt();
    pool.features.array().rowwise() /= sd.array();
  }
  return pool;
}

TabularEnvironment sample_tabular(const TabularPool& pool, int sample_n, int heldout_n, Rng& rng) {
  const auto size = static_cast<int>(pool.size());
  if (sample_n < 1 || size < sample_n + 1)
    throw TabularError(TabularErrorKind::InsufficientExamples,
                       "insufficient examples: need " + std::to_string(sample_n) + " training plus at least 1 heldout, pool has " +
                           std::to_string(size));
  std::vector<int> order(static_cast<std::size_t>(size));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  TabularEnvironment env;
  env.m = pool.num_classes();
  env.feature_dim = static_cast<int>(pool.features.cols());
  const int heldout_count = std::min(heldout_n, size - sample_n);
  auto take = [&](int i) { return LabeledExample{pool.features.row(i).transpose(), pool.labels[static_cast<std::size_t>(i)]}; };
  env.examples.reserve(static_cast<std::size_t>(sample_n));
  for (int k = 0; k < sample_n; ++k) env.examples.push_back(take(order[static_cast<std::size_t>(k)]));
  env.heldout.reserve(static_cast<std::size_t>(heldout_count));
  for (int k = 0; k < heldout_count; ++k) env.heldout.push_back(take(order[static_cast<std::size_t>(sample_n + k)]));
  return env;
}

TabularEnvironment load_tabular(const TabularSource& source, int sample_n, int heldout_n, Rng& rng) {
  return sample_tabular(read_tabular_pool(source), sample_n, heldout_n, rng);
}

ActionId human_action(ActionId expert_action, const NoisyHumanParams& params, int m, Rng& rng) {
  if (m < 2) throw std::invalid_argument("human_action needs m >= 2");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) >= params.alpha) return expert_action;
  std::uniform_int_distribution<int> other(0, m - 2);
  const int k = other(rng);
  return ActionId(k < expert_action.index ? k : k + 1);
}

}  // namespace odm
