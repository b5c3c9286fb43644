#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "odm/pm.hpp"
#include "odm/runner.hpp"

namespace {

void apply_env_override(odm::ExperimentConfig& config) {
  if (const char* dir = std::getenv("ODM_OUTPUT_DIR"); dir != nullptr && *dir != '\0') config.output_dir = dir;
}

void print_suite(const odm::SuiteResult& suite) {
  std::cout << "policy,runs,failed_runs,final_regret_mean,final_regret_std,avg_loss_mean,requests_mean\n";
  for (const auto& p : suite.policies) {
    std::cout << p.policy << ',' << p.runs << ',' << p.failed_runs << ',' << p.final_values.at("final_regret").first
              << ',' << p.final_values.at("final_regret").second << ',' << p.final_values.at("avg_loss").first << ','
              << p.final_values.at("requests").first << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online decision mediation simulation lab"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run every configured policy over all seeded runs");
  run->add_option("-c,--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);

  std::string sweep_config, axis_name;
  std::vector<double> sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Repeat the experiment over one parameter axis");
  sweep->add_option("-c,--config", sweep_config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis_name, "noise_q, k_req, s, alpha or k_int")->required();
  sweep->add_option("--values", sweep_values, "Axis values (default: the config's sweep entry)");

  std::string agg_dir;
  int agg_window = 0;
  auto* aggregate = app.add_subcommand("aggregate", "Recompute aggregate CSVs from per-run files");
  aggregate->add_option("-d,--dir", agg_dir, "Output directory of a previous run")->required();
  aggregate->add_option("--ma-window", agg_window, "Moving-average window (default: horizon / 5)");

  int pm_m = 3;
  double pm_kint = 0.1, pm_kreq = 0.6;
  bool pm_csv = false;
  auto* pm = app.add_subcommand("pm-matrices", "Print reward and feedback matrices for every human action");
  pm->add_option("-m", pm_m, "Number of classes")->check(CLI::Range(2, 1000));
  pm->add_option("--k-int", pm_kint, "Intervention cost");
  pm->add_option("--k-req", pm_kreq, "Request cost");
  pm->add_flag("--csv", pm_csv, "CSV output");

  std::string fit_dir, fit_out;
  auto* fit = app.add_subcommand("fit-matched-eps", "Fit the matched decaying-request schedule to request curves");
  fit->add_option("-d,--dir,--policy-dir", fit_dir, "Policy directory holding run_*/rounds.csv")->required();
  fit->add_option("-o,--out", fit_out, "Output JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = odm::load_config(config_path);
      apply_env_override(config);
      const auto suite = odm::run_suite(config);
      print_suite(suite);
      std::cerr << "wrote " << config.output_dir.string() << "\n";
      return suite.failed_runs > 0 ? 2 : 0;
    }
    if (*sweep) {
      auto config = odm::load_config(sweep_config);
      apply_env_override(config);
      const auto axis = odm::sweep_axis_from_string(axis_name);
      if (sweep_values.empty()) {
        const auto it = config.sweep.find(axis);
        if (it == config.sweep.end()) throw odm::ConfigError("no values given for axis " + axis_name);
        sweep_values = it->second;
      }
      const auto rows = odm::run_sweep(config, axis, sweep_values);
      std::cout << "value,policy,runs,avg_loss_mean,final_regret_mean\n";
      for (const auto& r : rows)
        std::cout << r.value << ',' << r.policy << ',' << r.runs << ',' << r.avg_loss_mean << ','
                  << r.final_regret_mean << '\n';
      return 0;
    }
    if (*aggregate) {
      print_suite(odm::aggregate_directory(agg_dir, agg_window));
      return 0;
    }
    if (*pm) {
      odm::CostSpec costs;
      costs.k_int = pm_kint;
      costs.k_req = pm_kreq;
      costs.validate();
      for (int h = 0; h < pm_m; ++h) {
        const auto game = odm::build_matrices(pm_m, odm::ActionId(h), costs);
        if (pm_csv) {
          odm::print_csv(std::cout, game, h == 0);
        } else {
          if (h > 0) std::cout << "\n";
          odm::print_aligned(std::cout, game);
        }
      }
      return 0;
    }
    if (*fit) {
      const auto curves = odm::read_request_curves(fit_dir);
      if (curves.empty()) throw std::runtime_error("no run_*/rounds.csv under " + fit_dir);
      const auto m = odm::fit_matched_epsilon(curves);
      odm::save_matched_epsilon(fit_out, m);
      std::cout << "coefficients " << m.coefficients.transpose() << "\nhorizon " << m.horizon << "\n";
      return 0;
    }
  } catch (const odm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
