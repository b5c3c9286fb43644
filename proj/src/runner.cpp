#include "odm/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include "odm/csv.hpp"

namespace odm {

namespace fs = std::filesystem;

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
}

Eigen::MatrixXd stack_contexts(const Dataset& data) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data.size()), data.empty() ? 0 : data.front().x.size());
  for (std::size_t i = 0; i < data.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = data[i].x.transpose();
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string run_dir_name(int run_index) { return "run_" + std::to_string(run_index); }

}  // namespace

std::shared_ptr<const TabularPool> load_pool(const ExperimentConfig& config) {
  if (config.environment.kind != EnvironmentKind::Tabular) return nullptr;
  return std::make_shared<const TabularPool>(read_tabular_pool(config.environment.tabular));
}

PreparedRun prepare_run(const ExperimentConfig& config, const TabularPool* pool, int run_index) {
  PreparedRun run;
  run.run_index = run_index;
  run.seeds = SeedSpec{config.master_seed, run_index};
  Rng env_rng = run.seeds.stream(StreamTag::Environment);
  Rng seed_rng = run.seeds.stream(StreamTag::Seed);

  int m = 0;
  if (config.environment.kind == EnvironmentKind::GaussSine) {
    m = GaussSineParams::num_classes;
    run.settings = resolve(config, m);
    const GaussSineParams& gp = config.environment.gauss_sine;
    run.stream.reserve(static_cast<std::size_t>(run.settings.horizon));
    for (int t = 0; t < run.settings.horizon; ++t) run.stream.push_back(gauss_sine_draw(gp, env_rng));
    Rng heldout_rng = run.seeds.stream(StreamTag::Heldout);
    run.heldout.reserve(static_cast<std::size_t>(config.heldout_size));
    for (int i = 0; i < config.heldout_size; ++i) run.heldout.push_back(gauss_sine_draw(gp, heldout_rng));
    std::vector<std::optional<LabeledExample>> first(static_cast<std::size_t>(m));
    for (int found = 0; found < m;) {
      LabeledExample e = gauss_sine_draw(gp, seed_rng);
      auto& slot = first[static_cast<std::size_t>(e.y.index)];
      if (!slot) {
        slot = std::move(e);
        ++found;
      }
    }
    for (auto& e : first) run.seed_set.push_back(std::move(*e));
  } else {
    if (pool == nullptr) throw std::logic_error("tabular environment without a loaded pool");
    m = pool->num_classes();
    if (m < 2) throw TabularError(TabularErrorKind::Malformed, "label column has fewer than two classes");
    run.settings = resolve(config, m);
    TabularEnvironment env = sample_tabular(*pool, run.settings.horizon, config.heldout_size, env_rng);
    run.stream = std::move(env.examples);
    run.heldout = std::move(env.heldout);
    for (int c = 0; c < m; ++c) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < run.stream.size(); ++i)
        if (run.stream[i].y.index == c) idx.push_back(i);
      if (idx.empty()) throw MissingClassError("class " + pool->class_names[static_cast<std::size_t>(c)] +
                                               " does not occur in the sampled stream");
      const std::size_t pick = idx[std::uniform_int_distribution<std::size_t>(0, idx.size() - 1)(seed_rng)];
      run.seed_set.push_back(run.stream[pick]);
    }
  }

  Rng human_rng = run.seeds.stream(StreamTag::Human);
  const NoisyHumanParams hp{config.alpha};
  run.human.reserve(run.stream.size());
  for (const auto& e : run.stream) run.human.push_back(human_action(e.y, hp, m, human_rng));

  // Oracle model: fit once on the run's full training stream.
  Rng oracle_rng = run.seeds.stream(StreamTag::Oracle);
  const ModelState oracle = fit(run.stream, m, config.model.kernel);
  run.oracle_marginals = predict_marginal_batch(oracle, stack_contexts(run.stream), config.model.samples, oracle_rng);
  run.oracle_model = std::make_shared<const ModelState>(oracle);
  return run;
}

RunArtifacts simulate(const ExperimentConfig& config, const PreparedRun& run, const PolicySpec& policy) {
  RunArtifacts a;
  a.policy = std::string(to_string(policy.kind));
  a.run_index = run.run_index;
  try {
    const ResolvedSettings& st = run.settings;
    const int m = st.m;
    const int s = config.model.samples;
    Rng model_rng = run.seeds.stream(StreamTag::ModelSampling);
    Rng policy_rng = run.seeds.stream(StreamTag::Policy);
    Rng eval_rng = run.seeds.stream(StreamTag::Evaluation);
    const bool oracle_policy = policy.kind == PolicyKind::Oracle;

    ModelState model = fit(run.seed_set, m, config.model.kernel);
    a.records.reserve(run.stream.size());
    a.cum_regret.reserve(run.stream.size());
    double regret = 0.0;

    for (int t = 1; t <= st.horizon; ++t) {
      const LabeledExample& e = run.stream[static_cast<std::size_t>(t - 1)];
      const Eigen::VectorXd oracle_marginal = run.oracle_marginals.row(t - 1).transpose();

      DecisionInputs in;
      in.human_action = run.human[static_cast<std::size_t>(t - 1)];
      in.costs = st.costs;
      in.t = t;
      in.m = m;
      if (oracle_policy) {
        in.marginal = oracle_marginal;
        in.samples = oracle_marginal.transpose();
      } else {
        PredictiveSampleSet samples = sample_predictives(model, e.x, s, model_rng);
        in.marginal = samples.mean();
        in.samples = std::move(samples.probs);
      }

      const MediatorOutcome out = decide(policy, in, policy_rng);
      const OracleRound oracle = oracle_round(oracle_marginal, in.human_action, e.y, st.costs);

      RoundRecord r;
      r.t = t;
      r.context = e.x;
      r.human_action = in.human_action;
      r.model_action = out.model_action;
      r.expert_action = e.y;
      r.decision = out.decision;
      r.system_action = system_action(out.decision, r.human_action, r.model_action, r.expert_action);
      r.realized_loss = realized_round_loss(r, st.costs);
      r.oracle_decision = oracle.decision;
      r.oracle_loss = oracle.loss;
      r.mi_value = out.mi_value;
      r.adjusted_k_req = out.adjusted_k_req;
      regret += r.realized_loss - r.oracle_loss;

      if (r.decision == MediatorDecision::Request) {
        ++a.summary.requests;
        model = update(model, e);  // the expert label is only revealed here
      }
      a.records.push_back(std::move(r));
      a.cum_regret.push_back(regret);

      if (t % st.eval_every == 0) {
        const ModelState& evaluated = oracle_policy ? *run.oracle_model : model;
        a.heldout.push_back({t, heldout_metrics(evaluated, run.heldout, s, eval_rng)});
      }
    }
    a.summary.final_regret = regret;
    a.summary.counters = mediator_counters(a.records);
    a.training_set_size = static_cast<int>(model.size());
  } catch (const std::exception& ex) {
    a.error = ex.what();
  }
  return a;
}

RunArtifacts run_single(const ExperimentConfig& config, const PolicySpec& policy, int run_index) {
  const auto pool = load_pool(config);
  PolicySpec p = policy;
  if (p.kind == PolicyKind::MatchedDecayingRequest && !p.matched && config.matched_epsilon_file)
    p.matched = load_matched_epsilon(*config.matched_epsilon_file);
  return simulate(config, prepare_run(config, pool.get(), run_index), p);
}

std::string rounds_csv(const RunArtifacts& a) {
  std::ostringstream out;
  out << "run_id,t,z,human_correct,model_correct,system_mistake,realized_loss,oracle_loss,cum_regret,mi_value,adjusted_k_req\n";
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const RoundRecord& r = a.records[i];
    out << a.run_index << ',' << r.t << ',' << to_int(r.decision) << ',' << (r.human_action == r.expert_action) << ','
        << (r.model_action == r.expert_action) << ',' << system_mistake(r) << ',' << format_real(r.realized_loss) << ','
        << format_real(r.oracle_loss) << ',' << format_real(a.cum_regret[i]) << ',' << format_real(r.mi_value) << ','
        << format_real(r.adjusted_k_req) << '\n';
  }
  return out.str();
}

std::string heldout_csv(const RunArtifacts& a) {
  std::ostringstream out;
  out << "run_id,t,mistake_rate,cross_entropy,auroc,auprc\n";
  for (const auto& h : a.heldout)
    out << a.run_index << ',' << h.t << ',' << format_real(h.metrics.mistake_rate) << ','
        << format_real(h.metrics.cross_entropy) << ',' << format_real(h.metrics.auroc) << ','
        << format_real(h.metrics.auprc) << '\n';
  return out.str();
}

std::string counters_csv(const RunArtifacts& a) {
  std::ostringstream out;
  out << "run_id,t,err_acc,exc_int,abs_shf\n";
  MediatorCounters c;
  for (const auto& r : a.records) {
    const MediatorCounters d = counter_events(r);
    c.erroneous_acceptances += d.erroneous_acceptances;
    c.excessive_interventions += d.excessive_interventions;
    c.abstention_shortfalls += d.abstention_shortfalls;
    out << a.run_index << ',' << r.t << ',' << c.erroneous_acceptances << ',' << c.excessive_interventions << ','
        << c.abstention_shortfalls << '\n';
  }
  return out.str();
}

SeriesStats series_stats(const std::vector<std::vector<double>>& series) {
  SeriesStats s;
  s.runs = static_cast<int>(series.size());
  if (series.empty()) return s;
  std::size_t len = series.front().size();
  for (const auto& v : series) len = std::min(len, v.size());
  s.mean.assign(len, 0.0);
  s.std.assign(len, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    double sum = 0.0;
    for (const auto& v : series) sum += v[t];
    const double mean = sum / static_cast<double>(series.size());
    double ss = 0.0;
    for (const auto& v : series) ss += (v[t] - mean) * (v[t] - mean);
    s.mean[t] = mean;
    s.std[t] = series.size() > 1 ? std::sqrt(ss / static_cast<double>(series.size() - 1)) : 0.0;
  }
  return s;
}

const PolicyAggregate* SuiteResult::find(std::string_view policy) const {
  for (const auto& p : policies)
    if (p.policy == policy) return &p;
  return nullptr;
}

namespace {

// Column data of one completed run, either straight from memory or parsed back from disk.
struct RunColumns {
  std::string policy;
  int run_index = 0;
  bool failed = false;
  std::vector<double> z, loss, mistake, regret, err_acc, exc_int, abs_shf;
  std::vector<int> heldout_t;
  std::vector<double> mistake_rate, cross_entropy, auroc, auprc;
  double requests = 0.0;
};

RunColumns columns_from(const RunArtifacts& a) {
  RunColumns c;
  c.policy = a.policy;
  c.run_index = a.run_index;
  c.failed = a.error.has_value();
  if (c.failed) return c;
  MediatorCounters acc;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const RoundRecord& r = a.records[i];
    c.z.push_back(to_int(r.decision));
    c.loss.push_back(r.realized_loss);
    c.mistake.push_back(system_mistake(r));
    c.regret.push_back(a.cum_regret[i]);
    const MediatorCounters d = counter_events(r);
    acc.erroneous_acceptances += d.erroneous_acceptances;
    acc.excessive_interventions += d.excessive_interventions;
    acc.abstention_shortfalls += d.abstention_shortfalls;
    c.err_acc.push_back(acc.erroneous_acceptances);
    c.exc_int.push_back(acc.excessive_interventions);
    c.abs_shf.push_back(acc.abstention_shortfalls);
  }
  for (const auto& h : a.heldout) {
    c.heldout_t.push_back(h.t);
    c.mistake_rate.push_back(h.metrics.mistake_rate);
    c.cross_entropy.push_back(h.metrics.cross_entropy);
    c.auroc.push_back(h.metrics.auroc);
    c.auprc.push_back(h.metrics.auprc);
  }
  c.requests = a.summary.requests;
  return c;
}

RunColumns columns_from(const fs::path& run_dir, const std::string& policy, int run_index) {
  RunColumns c;
  c.policy = policy;
  c.run_index = run_index;
  if (fs::exists(run_dir / "error.txt") || !fs::exists(run_dir / "rounds.csv")) {
    c.failed = true;
    return c;
  }
  const CsvTable rounds = read_csv(run_dir / "rounds.csv");
  c.z = rounds.real_column("z");
  c.loss = rounds.real_column("realized_loss");
  c.mistake = rounds.real_column("system_mistake");
  c.regret = rounds.real_column("cum_regret");
  for (double z : c.z) c.requests += z == 2.0 ? 1.0 : 0.0;
  if (fs::exists(run_dir / "counters.csv")) {
    const CsvTable counters = read_csv(run_dir / "counters.csv");
    c.err_acc = counters.real_column("err_acc");
    c.exc_int = counters.real_column("exc_int");
    c.abs_shf = counters.real_column("abs_shf");
  }
  if (fs::exists(run_dir / "heldout.csv")) {
    const CsvTable held = read_csv(run_dir / "heldout.csv");
    for (double t : held.real_column("t")) c.heldout_t.push_back(static_cast<int>(t));
    c.mistake_rate = held.real_column("mistake_rate");
    c.cross_entropy = held.real_column("cross_entropy");
    c.auroc = held.real_column("auroc");
    c.auprc = held.real_column("auprc");
  }
  return c;
}

std::vector<double> cumulative(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = acc += v[i];
  return out;
}

std::vector<double> smoothed(const std::vector<double>& v, int window) {
  MetricSeries s{"", Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())),
                 Aggregation::PerRound, 0};
  const MetricSeries ma = moving_average(s, window);
  return {ma.values.data(), ma.values.data() + ma.values.size()};
}

PolicyAggregate aggregate_policy(const std::string& policy, const std::vector<RunColumns>& runs, int ma_window,
                                 int action_window) {
  PolicyAggregate agg;
  agg.policy = policy;
  std::map<std::string, std::vector<std::vector<double>>> rounds, held, actions;
  std::vector<double> final_regret, avg_loss, requests, err, exc, abs;
  for (const auto& r : runs) {
    if (r.failed) {
      ++agg.failed_runs;
      continue;
    }
    ++agg.runs;
    const int window = ma_window > 0 ? ma_window : std::max<int>(1, static_cast<int>(r.loss.size()) / 5);
    rounds["loss_ma"].push_back(smoothed(r.loss, window));
    rounds["mistake_ma"].push_back(smoothed(r.mistake, window));
    rounds["regret"].push_back(r.regret);
    std::vector<double> is_req(r.z.size()), is_acc(r.z.size()), is_int(r.z.size());
    for (std::size_t i = 0; i < r.z.size(); ++i) {
      is_acc[i] = r.z[i] == 0.0;
      is_int[i] = r.z[i] == 1.0;
      is_req[i] = r.z[i] == 2.0;
    }
    rounds["requests"].push_back(cumulative(is_req));
    if (!r.err_acc.empty()) {
      rounds["err_acc"].push_back(r.err_acc);
      rounds["exc_int"].push_back(r.exc_int);
      rounds["abs_shf"].push_back(r.abs_shf);
      err.push_back(r.err_acc.back());
      exc.push_back(r.exc_int.back());
      abs.push_back(r.abs_shf.back());
    }
    actions["accept"].push_back(smoothed(is_acc, action_window));
    actions["intervene"].push_back(smoothed(is_int, action_window));
    actions["request"].push_back(smoothed(is_req, action_window));
    if (!r.heldout_t.empty()) {
      if (agg.heldout_t.empty()) agg.heldout_t = r.heldout_t;
      held["mistake_rate"].push_back(r.mistake_rate);
      held["cross_entropy"].push_back(r.cross_entropy);
      held["auroc"].push_back(r.auroc);
      held["auprc"].push_back(r.auprc);
    }
    final_regret.push_back(r.regret.empty() ? 0.0 : r.regret.back());
    double sum = 0.0;
    for (double l : r.loss) sum += l;
    avg_loss.push_back(r.loss.empty() ? 0.0 : sum / static_cast<double>(r.loss.size()));
    requests.push_back(r.requests);
  }
  for (auto& [k, v] : rounds) agg.rounds[k] = series_stats(v);
  for (auto& [k, v] : held) agg.heldout[k] = series_stats(v);
  for (auto& [k, v] : actions) agg.actions[k] = series_stats(v);
  auto scalar = [&](const std::string& name, const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean = v.empty() ? std::nan("") : mean / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    agg.final_values[name] = {mean, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
  };
  scalar("final_regret", final_regret);
  scalar("avg_loss", avg_loss);
  scalar("requests", requests);
  scalar("err_acc", err);
  scalar("exc_int", exc);
  scalar("abs_shf", abs);
  return agg;
}

void write_series_file(const fs::path& path, const std::vector<int>& t_values, const std::vector<std::string>& names,
                       const std::map<std::string, SeriesStats>& stats, int runs) {
  std::ostringstream out;
  out << "t,runs";
  for (const auto& n : names) out << ',' << n << "_mean," << n << "_std";
  out << '\n';
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    out << t_values[i] << ',' << runs;
    for (const auto& n : names) {
      const auto it = stats.find(n);
      const bool has = it != stats.end() && i < it->second.mean.size();
      out << ',' << (has ? format_real(it->second.mean[i]) : "nan") << ','
          << (has ? format_real(it->second.std[i]) : "nan");
    }
    out << '\n';
  }
  write_text(path, out.str());
}

void write_aggregates(const fs::path& dir, const std::vector<PolicyAggregate>& aggs) {
  std::ostringstream summary;
  const std::vector<std::string> finals{"final_regret", "avg_loss", "requests", "err_acc", "exc_int", "abs_shf"};
  summary << "policy,runs,failed_runs";
  for (const auto& f : finals) summary << ',' << f << "_mean," << f << "_std";
  summary << '\n';
  for (const auto& a : aggs) {
    summary << a.policy << ',' << a.runs << ',' << a.failed_runs;
    for (const auto& f : finals) {
      const auto& [mean, sd] = a.final_values.at(f);
      summary << ',' << format_real(mean) << ',' << format_real(sd);
    }
    summary << '\n';

    std::size_t n = 0;
    if (const auto it = a.rounds.find("regret"); it != a.rounds.end()) n = it->second.mean.size();
    std::vector<int> ts(n);
    for (std::size_t i = 0; i < n; ++i) ts[i] = static_cast<int>(i) + 1;
    write_series_file(dir / a.policy / "aggregate_rounds.csv", ts,
                      {"loss_ma", "mistake_ma", "regret", "requests", "err_acc", "exc_int", "abs_shf"}, a.rounds, a.runs);
    write_series_file(dir / a.policy / "actions.csv", ts, {"accept", "intervene", "request"}, a.actions, a.runs);
    write_series_file(dir / a.policy / "aggregate_heldout.csv", a.heldout_t,
                      {"mistake_rate", "cross_entropy", "auroc", "auprc"}, a.heldout, a.runs);
  }
  write_text(dir / "aggregate_summary.csv", summary.str());
}

std::string summary_row(const RunArtifacts& a) {
  std::ostringstream out;
  out << a.policy << ',' << a.run_index << ',';
  if (a.error) {
    out << "nan,nan,nan,nan,nan\n";
  } else {
    const MediatorCounters& c = a.summary.counters;
    out << format_real(a.summary.final_regret) << ',' << c.erroneous_acceptances << ',' << c.excessive_interventions
        << ',' << c.abstention_shortfalls << ',' << a.summary.requests << '\n';
  }
  return out.str();
}

void write_run_files(const fs::path& dir, const RunArtifacts& a) {
  const fs::path run_dir = dir / a.policy / run_dir_name(a.run_index);
  fs::create_directories(run_dir);
  if (a.error) {
    write_text(run_dir / "error.txt", *a.error + "\n");
    return;
  }
  write_text(run_dir / "rounds.csv", rounds_csv(a));
  write_text(run_dir / "heldout.csv", heldout_csv(a));
  write_text(run_dir / "counters.csv", counters_csv(a));
}

std::vector<std::vector<double>> request_curves(const std::vector<RunArtifacts>& runs) {
  std::vector<std::vector<double>> curves;
  for (const auto& a : runs) {
    if (a.error) continue;
    std::vector<double> c;
    double acc = 0.0;
    for (const auto& r : a.records) c.push_back(acc += r.decision == MediatorDecision::Request ? 1.0 : 0.0);
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace

SuiteResult run_suite(const ExperimentConfig& config, const SuiteOptions& options) {
  config.validate();
  const auto pool = load_pool(config);

  std::vector<std::optional<PreparedRun>> prepared(static_cast<std::size_t>(config.runs));
  std::vector<std::string> prepare_errors(static_cast<std::size_t>(config.runs));
  parallel_for(config.runs, config.threads, [&](int k) {
    try {
      prepared[static_cast<std::size_t>(k)] = prepare_run(config, pool.get(), k);
    } catch (const std::exception& e) {
      prepare_errors[static_cast<std::size_t>(k)] = e.what();
    }
  });

  auto run_policy_jobs = [&](const std::vector<PolicySpec>& policies) {
    const int jobs = static_cast<int>(policies.size()) * config.runs;
    std::vector<RunArtifacts> out(static_cast<std::size_t>(jobs));
    parallel_for(jobs, config.threads, [&](int j) {
      const PolicySpec& p = policies[static_cast<std::size_t>(j / config.runs)];
      const int k = j % config.runs;
      RunArtifacts& a = out[static_cast<std::size_t>(j)];
      if (prepared[static_cast<std::size_t>(k)]) {
        a = simulate(config, *prepared[static_cast<std::size_t>(k)], p);
      } else {
        a.policy = std::string(to_string(p.kind));
        a.run_index = k;
        a.error = "run preparation failed: " + prepare_errors[static_cast<std::size_t>(k)];
      }
    });
    return out;
  };

  std::vector<PolicySpec> first_phase, matched_phase;
  bool has_umpire = false;
  for (const auto& p : config.policies) {
    has_umpire = has_umpire || p.kind == PolicyKind::Umpire;
    (p.kind == PolicyKind::MatchedDecayingRequest && !p.matched ? matched_phase : first_phase).push_back(p);
  }
  std::vector<RunArtifacts> results = run_policy_jobs(first_phase);

  if (!matched_phase.empty()) {
    MatchedEpsilon fit;
    if (config.matched_epsilon_file) {
      fit = load_matched_epsilon(*config.matched_epsilon_file);
    } else {
      std::vector<RunArtifacts> umpire_runs;
      for (const auto& a : results)
        if (a.policy == to_string(PolicyKind::Umpire)) umpire_runs.push_back(a);
      if (!has_umpire) umpire_runs = run_policy_jobs({PolicySpec{PolicyKind::Umpire, std::nullopt, false}});
      fit = fit_matched_epsilon(request_curves(umpire_runs));
    }
    for (auto& p : matched_phase) p.matched = fit;
    if (options.write_files) {
      fs::create_directories(config.output_dir);
      save_matched_epsilon(config.output_dir / "matched_epsilon.json", fit);
    }
    auto more = run_policy_jobs(matched_phase);
    std::move(more.begin(), more.end(), std::back_inserter(results));
  }

  SuiteResult suite;
  suite.output_dir = config.output_dir;
  std::vector<std::string> order;
  std::map<std::string, std::vector<RunColumns>> by_policy;
  for (const auto& a : results) {
    if (!by_policy.contains(a.policy)) order.push_back(a.policy);
    by_policy[a.policy].push_back(columns_from(a));
    if (a.error) {
      ++suite.failed_runs;
      std::cerr << "run " << a.run_index << " (" << a.policy << ") failed: " << *a.error << "\n";
    }
  }
  int ma_window = config.ma_window;
  if (!prepared.empty() && prepared.front()) ma_window = prepared.front()->settings.ma_window;
  for (const auto& name : order) suite.policies.push_back(aggregate_policy(name, by_policy[name], ma_window, 10));

  if (options.write_files) {
    fs::create_directories(config.output_dir);
    write_text(config.output_dir / "config.resolved.json", config_to_json(config) + "\n");
    std::ostringstream summary;
    summary << "policy,run_id,final_regret,err_acc,exc_int,abs_shf,requests\n";
    for (const auto& a : results) {
      write_run_files(config.output_dir, a);
      summary << summary_row(a);
    }
    write_text(config.output_dir / "summary.csv", summary.str());
    write_aggregates(config.output_dir, suite.policies);
  }
  if (options.keep_runs) suite.runs = std::move(results);
  return suite;
}

SuiteResult aggregate_directory(const fs::path& dir, int ma_window, int action_window) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  SuiteResult suite;
  suite.output_dir = dir;
  std::vector<fs::path> policy_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) policy_dirs.push_back(entry.path());
  std::sort(policy_dirs.begin(), policy_dirs.end());
  for (const auto& pdir : policy_dirs) {
    std::vector<std::pair<int, fs::path>> run_dirs;
    for (const auto& entry : fs::directory_iterator(pdir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_directory() && name.rfind("run_", 0) == 0) run_dirs.emplace_back(std::stoi(name.substr(4)), entry.path());
    }
    if (run_dirs.empty()) continue;
    std::sort(run_dirs.begin(), run_dirs.end());
    std::vector<RunColumns> cols;
    const std::string policy = pdir.filename().string();
    for (const auto& [k, rd] : run_dirs) {
      cols.push_back(columns_from(rd, policy, k));
      if (cols.back().failed) ++suite.failed_runs;
    }
    suite.policies.push_back(aggregate_policy(policy, cols, ma_window, action_window));
  }
  if (suite.policies.empty()) throw std::runtime_error("no run directories found under " + dir.string());
  write_aggregates(dir, suite.policies);
  return suite;
}

void apply_axis(ExperimentConfig& config, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::NoiseQ:
      if (config.environment.kind != EnvironmentKind::GaussSine) throw ConfigError("noise_q sweeps need gauss_sine");
      config.environment.gauss_sine.noise_q = value;
      break;
    case SweepAxis::KReq: config.k_req = value; break;
    case SweepAxis::Samples: config.model.samples = static_cast<int>(std::lround(value)); break;
    case SweepAxis::Alpha: config.alpha = value; break;
    case SweepAxis::KInt: config.costs.k_int = value; break;
  }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, SweepAxis axis, const std::vector<double>& values,
                                const SuiteOptions& options) {
  if (values.empty()) throw ConfigError("sweep axis has no values");
  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentConfig c = config;
    apply_axis(c, axis, v);
    c.output_dir = config.output_dir / ("sweep_" + std::string(to_string(axis))) / format_real(v);
    const SuiteResult suite = run_suite(c, options);
    for (const auto& p : suite.policies) {
      SweepRow row;
      row.value = v;
      row.policy = p.policy;
      row.runs = p.runs;
      std::tie(row.avg_loss_mean, row.avg_loss_std) = p.final_values.at("avg_loss");
      std::tie(row.final_regret_mean, row.final_regret_std) = p.final_values.at("final_regret");
      rows.push_back(row);
    }
  }
  if (options.write_files) {
    std::ostringstream out;
    out << "axis,value,policy,runs,avg_loss_mean,avg_loss_std,final_regret_mean,final_regret_std\n";
    for (const auto& r : rows)
      out << to_string(axis) << ',' << format_real(r.value) << ',' << r.policy << ',' << r.runs << ','
          << format_real(r.avg_loss_mean) << ',' << format_real(r.avg_loss_std) << ','
          << format_real(r.final_regret_mean) << ',' << format_real(r.final_regret_std) << '\n';
    write_text(config.output_dir / ("sweep_" + std::string(to_string(axis)) + ".csv"), out.str());
  }
  return rows;
}

std::vector<std::vector<double>> read_request_curves(const fs::path& policy_dir) {
  std::vector<std::pair<int, fs::path>> run_dirs;
  for (const auto& entry : fs::directory_iterator(policy_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && name.rfind("run_", 0) == 0 && fs::exists(entry.path() / "rounds.csv"))
      run_dirs.emplace_back(std::stoi(name.substr(4)), entry.path());
  }
  std::sort(run_dirs.begin(), run_dirs.end());
  std::vector<std::vector<double>> curves;
  for (const auto& [k, rd] : run_dirs) {
    const auto z = read_csv(rd / "rounds.csv").real_column("z");
    std::vector<double> c;
    double acc = 0.0;
    for (double v : z) c.push_back(acc += v == 2.0 ? 1.0 : 0.0);
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace odm
