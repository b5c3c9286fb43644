#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "odm/core.hpp"
#include "odm/env.hpp"
#include "odm/mediators.hpp"
#include "odm/metrics.hpp"
#include "odm/model.hpp"

namespace odm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvironmentKind { GaussSine, Tabular };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::GaussSine;
  GaussSineParams gauss_sine;
  TabularSource tabular;
};

struct ModelSpec {
  KernelSettings kernel;
  int samples = 256;
};

enum class SweepAxis { NoiseQ, KReq, Samples, Alpha, KInt };

std::string_view to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(std::string_view name);

struct ExperimentConfig {
  EnvironmentSpec environment;
  ModelSpec model;
  std::vector<PolicySpec> policies;
  int horizon = 0;  // 0: 500 for GaussSine, 2000 otherwise
  int runs = 10;
  CostSpec costs;
  /// Unset: m / (m - 1) rounded down to one decimal.
  std::optional<double> k_req;
  /// Unset: kappa0(m, b).
  std::optional<double> kappa;
  double alpha = 0.5;
  int heldout_size = 2000;
  int eval_every = 0;  // 0: horizon / 10
  int ma_window = 0;   // 0: horizon / 5
  std::map<SweepAxis, std::vector<double>> sweep;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::filesystem::path output_dir = "odm-out";
  std::optional<std::filesystem::path> matched_epsilon_file;

  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

/// floor(10 m / (m - 1)) / 10.
double default_request_cost(int m);

struct ResolvedSettings {
  int m = 0;
  int horizon = 0;
  int eval_every = 0;
  int ma_window = 0;
  CostSpec costs;  // k_req and kappa resolved
};

ResolvedSettings resolve(const ExperimentConfig& config, int m);

/// Everything about one seeded run that is shared by all policies: the context
/// stream, expert and human actions, heldout set, seed set and oracle marginals.
struct PreparedRun {
  int run_index = 0;
  SeedSpec seeds;
  ResolvedSettings settings;
  Dataset stream;
  std::vector<ActionId> human;
  Dataset heldout;
  Dataset seed_set;  // one example per class
  Eigen::MatrixXd oracle_marginals;  // horizon x m
  std::shared_ptr<const ModelState> oracle_model;
};

/// Shared read-only pool for tabular environments; null for GaussSine.
std::shared_ptr<const TabularPool> load_pool(const ExperimentConfig& config);

PreparedRun prepare_run(const ExperimentConfig& config, const TabularPool* pool, int run_index);

struct HeldoutRow {
  int t = 0;
  HeldoutMetrics metrics;
};

struct RunSummary {
  double final_regret = 0.0;
  MediatorCounters counters;
  int requests = 0;
};

struct RunArtifacts {
  std::string policy;
  int run_index = 0;
  std::vector<RoundRecord> records;
  std::vector<double> cum_regret;
  std::vector<HeldoutRow> heldout;
  RunSummary summary;
  int training_set_size = 0;  // |D_n| at the end of the run
  std::optional<std::string> error;
};

RunArtifacts simulate(const ExperimentConfig& config, const PreparedRun& run, const PolicySpec& policy);

RunArtifacts run_single(const ExperimentConfig& config, const PolicySpec& policy, int run_index);

/// Per-round CSV files exactly as written to disk.
std::string rounds_csv(const RunArtifacts& a);
std::string heldout_csv(const RunArtifacts& a);
std::string counters_csv(const RunArtifacts& a);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation, 0 for a single run
  int runs = 0;
};

/// Pointwise mean and sample std over equal-length series.
SeriesStats series_stats(const std::vector<std::vector<double>>& series);

struct PolicyAggregate {
  std::string policy;
  int runs = 0;
  int failed_runs = 0;
  std::map<std::string, SeriesStats> rounds;   // loss_ma, mistake_ma, regret, requests, err_acc, exc_int, abs_shf
  std::vector<int> heldout_t;
  std::map<std::string, SeriesStats> heldout;  // mistake_rate, cross_entropy, auroc, auprc
  std::map<std::string, SeriesStats> actions;  // accept, intervene, request (moving average, window 10)
  std::map<std::string, std::pair<double, double>> final_values;  // mean, std
};

struct SuiteResult {
  std::filesystem::path output_dir;
  std::vector<PolicyAggregate> policies;
  std::vector<RunArtifacts> runs;  // empty unless kept
  int failed_runs = 0;
  const PolicyAggregate* find(std::string_view policy) const;
};

struct SuiteOptions {
  bool keep_runs = false;
  bool write_files = true;
};

SuiteResult run_suite(const ExperimentConfig& config, const SuiteOptions& options = {});

/// Recombines per-run files under `dir` into aggregate files.
SuiteResult aggregate_directory(const std::filesystem::path& dir, int ma_window = 0, int action_window = 10);

struct SweepRow {
  double value = 0.0;
  std::string policy;
  int runs = 0;
  double avg_loss_mean = 0.0;
  double avg_loss_std = 0.0;
  double final_regret_mean = 0.0;
  double final_regret_std = 0.0;
};

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<double>& values,
                                const SuiteOptions& options = {});

void apply_axis(ExperimentConfig& config, SweepAxis axis, double value);

MatchedEpsilon load_matched_epsilon(const std::filesystem::path& path);
void save_matched_epsilon(const std::filesystem::path& path, const MatchedEpsilon& fit);

/// Cumulative request curves from every run_*/rounds.csv under `policy_dir`.
std::vector<std::vector<double>> read_request_curves(const std::filesystem::path& policy_dir);

}  // namespace odm
