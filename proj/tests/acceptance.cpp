#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "odm/lambert_w.hpp"
#include "odm/mediators.hpp"
#include "odm/pm.hpp"
#include "odm/runner.hpp"

namespace fs = std::filesystem;
using odm::ActionId;
using odm::MediatorDecision;
using odm::PolicyKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd random_rows(int s, int m, odm::Rng& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  Eigen::MatrixXd p(s, m);
  for (int i = 0; i < s; ++i) {
    for (int k = 0; k < m; ++k) p(i, k) = g(rng) + 1e-300;
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

odm::ExperimentConfig gauss_sine_config(std::vector<PolicyKind> kinds, int horizon, int runs, int samples) {
  odm::ExperimentConfig c;
  for (auto k : kinds) c.policies.push_back({k, std::nullopt, false});
  c.horizon = horizon;
  c.runs = runs;
  c.model.samples = samples;
  c.master_seed = 2024;
  c.threads = 0;
  return c;
}

Outcome lambert_w() {
  const auto t0 = std::chrono::steady_clock::now();
  const double lo = -1.0 / std::numbers::e;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = lo + (10.0 - lo) * i / 999.0;
    const double w = odm::lambert_w0(x);
    worst = std::max(worst, std::abs(w * std::exp(w) - x));
  }
  const double b0 = std::abs(odm::lambert_w0(0.0));
  const double b1 = std::abs(odm::lambert_w0(std::numbers::e) - 1.0);
  const double b2 = std::abs(odm::lambert_w0(lo) + 1.0);
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && b0 <= 1e-12 && b1 <= 1e-12 && b2 <= 1e-12 && secs < 1.0,
          fmt("max residual %.2e, branch errors %.1e/%.1e/%.1e, %.4f s", worst, b0, b1, b2, secs)};
}

Outcome kappa_normalization() {
  double worst = 0.0;
  for (int m = 2; m <= 10; ++m)
    worst = std::max(worst, std::abs(odm::kappa0(m, 0.5) * odm::g_transform(std::log(double(m)), 0.5) - 1.0));
  odm::Rng rng(1);
  int outside = 0;
  for (int i = 0; i < 10000; ++i) {
    const int m = 2 + i % 9;
    odm::CostSpec c;
    c.k_req = 0.1 + (i % 15) * 0.1;
    c.kappa = odm::kappa0(m, 0.5);
    const Eigen::MatrixXd p = (i % 50 == 0) ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(m, m))
                                            : random_rows(1 + i % 32, m, rng);
    const double k = odm::adjusted_request_cost(odm::mutual_info(p), c);
    outside += (k < 0.0 || k > c.k_req);
  }
  return {worst <= 1e-12 && outside == 0, fmt("max |kappa0 g(log m) - 1| = %.2e, %d of 10000 outside [0, k_req]",
                                              worst, outside)};
}

Outcome mutual_information() {
  odm::Rng rng(2);
  double worst = 0.0;
  bool bounded = true;
  for (int i = 0; i < 100; ++i) {
    const int s = 1 + i % 8, m = 2 + i % 3;
    const Eigen::MatrixXd p = random_rows(s, m, rng);
    double h_mean = 0.0, mean_h = 0.0;
    for (int k = 0; k < m; ++k) {
      double pk = 0.0;
      for (int r = 0; r < s; ++r) pk += p(r, k) / s;
      if (pk > 0) h_mean -= pk * std::log(pk);
      for (int r = 0; r < s; ++r)
        if (p(r, k) > 0) mean_h -= p(r, k) * std::log(p(r, k)) / s;
    }
    const double mi = odm::mutual_info(p);
    worst = std::max(worst, std::abs(mi - (h_mean - mean_h)));
    bounded = bounded && mi >= 0.0 && mi <= std::log(double(m)) + 1e-12;
  }
  Eigen::MatrixXd same(4, 3);
  same.rowwise() = Eigen::RowVector3d(0.1, 0.6, 0.3);
  const double zero = odm::mutual_info(same);
  const double log2 = odm::mutual_info(Eigen::Matrix2d::Identity());
  const bool ok = worst <= 1e-12 && bounded && zero == 0.0 && std::abs(log2 - std::log(2.0)) <= 1e-15;
  return {ok, fmt("max oracle error %.2e, identical rows %.1e, disagreement %.15f", worst, zero, log2)};
}

Outcome greedy_and_trace() {
  odm::Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0, ties = 0;
  for (int i = 0; i < 100000; ++i) {
    const int m = 2 + i % 4;
    odm::DecisionInputs in;
    in.m = m;
    in.marginal = (i % 5 == 0) ? Eigen::VectorXd(Eigen::VectorXd::Constant(m, 1.0 / m))
                               : Eigen::VectorXd(random_rows(1, m, rng).row(0).transpose());
    in.samples = in.marginal.transpose();
    in.human_action = ActionId(i % m);
    in.costs.k_int = (i % 7 == 0) ? 0.0 : 0.3 * u(rng);
    in.costs.k_req = (i % 3 == 0) ? 1.0 - in.marginal(i % m) : u(rng);
    int best = 0;
    for (int k = 1; k < m; ++k)
      if (in.marginal(k) > in.marginal(best)) best = k;
    const double v[3] = {1.0 - in.marginal(i % m), 1.0 - in.marginal(best) + in.costs.k_int, in.costs.k_req};
    int z = 0;
    for (int a = 1; a < 3; ++a)
      if (v[a] < v[z]) z = a;
    ties += (v[0] == v[1] || v[0] == v[2] || v[1] == v[2]);
    const auto out = odm::greedy_decide(in, in.costs.k_req);
    mismatches += (odm::to_int(out.decision) != z || out.model_action != ActionId(best));
  }

  auto config = gauss_sine_config({PolicyKind::Umpire, PolicyKind::CostSensitive}, 500, 1, 64);
  config.kappa = 0.0;
  config.k_req = 0.6;
  const auto umpire = odm::run_single(config, config.policies[0], 0);
  const auto greedy = odm::run_single(config, config.policies[1], 0);
  int differing = umpire.error || greedy.error || umpire.records.size() != greedy.records.size() ? -1 : 0;
  if (differing == 0)
    for (std::size_t t = 0; t < umpire.records.size(); ++t) {
      const auto& a = umpire.records[t];
      const auto& b = greedy.records[t];
      differing += (a.decision != b.decision || a.model_action != b.model_action || a.system_action != b.system_action ||
                    a.realized_loss != b.realized_loss || umpire.cum_regret[t] != greedy.cum_regret[t]);
    }
  return {mismatches == 0 && differing == 0,
          fmt("%d of 100000 mismatches (%d tie cases); kappa=0 trace differs in %d of 500 rounds", mismatches, ties,
              differing)};
}

Outcome oracle_regret() {
  auto config = gauss_sine_config({PolicyKind::Oracle}, 300, 3, 64);
  const auto gs = odm::run_suite(config, {true, false});
  double worst = 0.0;
  int failed = gs.failed_runs;
  for (const auto& a : gs.runs)
    for (double r : a.cum_regret) worst = std::max(worst, std::abs(r));

  const fs::path dir = fs::temp_directory_path() / "odm_acceptance_tabular";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    odm::Rng rng(5);
    std::normal_distribution<double> z;
    std::ofstream out(dir / "toy.csv");
    out << "f1,f2,f3,f4,label\n";
    for (int i = 0; i < 800; ++i) {
      const double a = z(rng), b = z(rng), c = z(rng), d = z(rng);
      const int y = (a + 0.5 * b > 0.6) ? 2 : (a - c > 0.0 ? 1 : 0);
      out << a << ',' << b << ',' << c << ',' << d << ',' << "cls" << y << '\n';
    }
  }
  auto tab = gauss_sine_config({PolicyKind::Oracle}, 300, 3, 64);
  tab.environment.kind = odm::EnvironmentKind::Tabular;
  tab.environment.tabular = {dir / "toy.csv", "label", {}, '\0'};
  tab.heldout_size = 200;
  const auto tr = odm::run_suite(tab, {true, false});
  failed += tr.failed_runs;
  double worst_tab = 0.0;
  for (const auto& a : tr.runs)
    for (double r : a.cum_regret) worst_tab = std::max(worst_tab, std::abs(r));
  return {failed == 0 && worst == 0.0 && worst_tab == 0.0,
          fmt("max |regret| GaussSine %.1e, tabular %.1e over 3 runs each, %d failed runs", worst, worst_tab, failed)};
}

struct RegretSuite {
  odm::SuiteResult suite;
  double seconds = 0.0;
};

RegretSuite regret_suite() {
  auto config = gauss_sine_config({PolicyKind::Umpire, PolicyKind::CostSensitive, PolicyKind::Human}, 500, 10, 64);
  config.costs.k_int = 0.1;
  config.alpha = 0.5;
  config.k_req = 0.6;
  const auto t0 = std::chrono::steady_clock::now();
  RegretSuite r{odm::run_suite(config, {false, false}), 0.0};
  r.seconds = seconds_since(t0);
  return r;
}

Outcome regret_ordering(const RegretSuite& r) {
  const auto* u = r.suite.find("umpire");
  const auto* c = r.suite.find("cost-sensitive");
  const auto* h = r.suite.find("human");
  if (!u || !c || !h || r.suite.failed_runs > 0) return {false, "suite incomplete"};
  const auto [um, us] = u->final_values.at("final_regret");
  const auto [cm, cs] = c->final_values.at("final_regret");
  const auto [hm, hs] = h->final_values.at("final_regret");
  const double se_c = std::sqrt((us * us + cs * cs) / 10.0);
  const double se_h = std::sqrt((us * us + hs * hs) / 10.0);
  const bool ok = (cm - um) > se_c && (hm - um) > se_h && r.seconds < 900.0;
  return {ok, fmt("final regret umpire %.2f, cost-sensitive %.2f (gap %.2f, SE %.2f), human %.2f (gap %.2f, SE %.2f), "
                  "k_req=0.6, %.1f s",
                  um, cm, cm - um, se_c, hm, hm - um, se_h, r.seconds)};
}

Outcome heldout_trend(const RegretSuite& r) {
  const auto* u = r.suite.find("umpire");
  if (!u || u->heldout_t.empty()) return {false, "no heldout series"};
  const auto& mistakes = u->heldout.at("mistake_rate").mean;
  const double first = mistakes.front(), last = mistakes.back();
  return {last < first, fmt("umpire heldout mistake rate t=%d: %.4f, t=%d: %.4f", u->heldout_t.front(), first,
                            u->heldout_t.back(), last)};
}

odm::RoundRecord rec(MediatorDecision z, int h, int mo, int y, MediatorDecision oracle) {
  odm::RoundRecord r;
  r.decision = z;
  r.human_action = ActionId(h);
  r.model_action = ActionId(mo);
  r.expert_action = ActionId(y);
  r.system_action = odm::system_action(z, r.human_action, r.model_action, r.expert_action);
  r.oracle_decision = oracle;
  return r;
}

Outcome counters() {
  using Z = MediatorDecision;
  const std::vector<odm::RoundRecord> each{rec(Z::Accept, 0, 1, 1, Z::Intervene),
                                           rec(Z::Intervene, 1, 1, 1, Z::Accept),
                                           rec(Z::Intervene, 0, 2, 1, Z::Intervene)};
  const std::vector<odm::RoundRecord> mixed{rec(Z::Accept, 0, 2, 1, Z::Request), rec(Z::Intervene, 2, 2, 2, Z::Request),
                                            rec(Z::Accept, 1, 1, 1, Z::Accept), rec(Z::Intervene, 0, 1, 1, Z::Intervene),
                                            rec(Z::Request, 0, 2, 1, Z::Accept)};
  std::vector<odm::RoundRecord> requests;
  for (int i = 0; i < 12; ++i) requests.push_back(rec(Z::Request, i % 3, (i + 1) % 3, (i + 2) % 3, Z::Intervene));
  const auto a = odm::mediator_counters(each);
  const auto b = odm::mediator_counters(mixed);
  const auto c = odm::mediator_counters(requests);
  const bool ok = a == odm::MediatorCounters{1, 1, 1} && b == odm::MediatorCounters{1, 1, 1} &&
                  c == odm::MediatorCounters{0, 0, 0};
  return {ok, fmt("single events (%d,%d,%d), mixed trace (%d,%d,%d), all-request (%d,%d,%d)",
                  a.erroneous_acceptances, a.excessive_interventions, a.abstention_shortfalls,
                  b.erroneous_acceptances, b.excessive_interventions, b.abstention_shortfalls,
                  c.erroneous_acceptances, c.excessive_interventions, c.abstention_shortfalls)};
}

Outcome cost_sweep() {
  // Frozen inputs: marginals of a seed-only model at fixed contexts, plus random marginals for m != 3.
  odm::Rng rng(9);
  odm::Dataset d0;
  std::array<bool, 3> seen{};
  while (!(seen[0] && seen[1] && seen[2])) {
    auto e = odm::gauss_sine_draw({0.0}, rng);
    if (!seen[static_cast<std::size_t>(e.y.index)]) {
      seen[static_cast<std::size_t>(e.y.index)] = true;
      d0.push_back(e);
    }
  }
  const auto model = odm::fit(d0, 3, {});
  int violations = 0, grids = 0;
  for (int m : {2, 3, 5}) {
    std::vector<odm::DecisionInputs> frozen;
    for (int i = 0; i < 2000; ++i) {
      odm::DecisionInputs in;
      in.m = m;
      in.marginal = m == 3 ? odm::predict_marginal(model, odm::gauss_sine_draw({0.0}, rng).x, 64, rng)
                           : Eigen::VectorXd(random_rows(1, m, rng).row(0).transpose());
      in.samples = in.marginal.transpose();
      in.human_action = ActionId(i % m);
      in.costs.k_int = 0.1;
      frozen.push_back(in);
    }
    int prev = std::numeric_limits<int>::max();
    const double top = double(m) / (m - 1) + 0.05;
    for (int step = 0; step * 0.1 <= top + 1e-12; ++step) {
      const double k = std::min(step * 0.1, top);
      int count = 0;
      for (const auto& in : frozen) count += odm::greedy_decide(in, k).decision == MediatorDecision::Request;
      violations += count > prev;
      prev = count;
      ++grids;
    }
  }
  return {violations == 0, fmt("%d monotonicity violations over %d grid points (m = 2, 3, 5)", violations, grids)};
}

Outcome determinism() {
  auto config = gauss_sine_config({PolicyKind::Umpire, PolicyKind::Thompson, PolicyKind::EpsilonGreedy,
                                   PolicyKind::MatchedDecayingRequest},
                                  120, 4, 32);
  config.k_req = 0.6;
  config.heldout_size = 200;
  const fs::path base = fs::temp_directory_path() / "odm_acceptance_determinism";
  fs::remove_all(base);
  auto serial = config;
  serial.threads = 1;
  serial.output_dir = base / "serial";
  auto parallel = config;
  parallel.threads = 8;
  parallel.output_dir = base / "parallel";
  odm::run_suite(serial);
  odm::run_suite(parallel);
  int files = 0, differing = 0;
  for (const auto& entry : fs::recursive_directory_iterator(serial.output_dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
    const auto rel = fs::relative(entry.path(), serial.output_dir);
    ++files;
    differing += slurp(entry.path()) != slurp(parallel.output_dir / rel);
  }
  return {files > 0 && differing == 0, fmt("%d CSV files compared, %d differ (1 vs 8 threads)", files, differing)};
}

Outcome pm_matrices() {
  int bad_nullity = 0, bad_loss = 0, cells = 0;
  odm::CostSpec c;
  c.k_int = 0.1;
  c.k_req = 0.6;
  for (int m : {2, 3, 5})
    for (int h = 0; h < m; ++h) {
      const auto g = odm::build_matrices(m, ActionId(h), c);
      bad_nullity += g.null_feedback_rows() != m + 1;
      for (int j = 0; j < m; ++j) {
        const ActionId y(j), human(h);
        auto check = [&](int row, MediatorDecision z, int model) {
          ++cells;
          bad_loss += -g.reward(row, j) != odm::realized_round_loss(z, human, ActionId(model), y, c);
        };
        check(g.accept_row(), MediatorDecision::Accept, 0);
        for (int i = 0; i < m; ++i) check(g.intervene_row(i), MediatorDecision::Intervene, i);
        check(g.request_row(), MediatorDecision::Request, 0);
      }
    }
  return {bad_nullity == 0 && bad_loss == 0,
          fmt("%d nullity failures, %d of %d reward cells disagree with the round loss", bad_nullity, bad_loss, cells)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %2d %-28s %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "lambert-w", lambert_w);
  report(2, "kappa0-normalization", kappa_normalization);
  report(3, "mutual-information", mutual_information);
  report(4, "greedy-selection", greedy_and_trace);
  report(5, "oracle-regret", oracle_regret);
  std::optional<RegretSuite> suite;
  auto shared = [&]() -> const RegretSuite& {
    if (!suite) suite = regret_suite();
    return *suite;
  };
  report(6, "regret-ordering", [&] { return regret_ordering(shared()); });
  report(7, "heldout-learning-trend", [&] { return heldout_trend(shared()); });
  report(8, "mediator-counters", counters);
  report(9, "cost-sweep-monotonicity", cost_sweep);
  report(10, "determinism", determinism);
  report(11, "partial-monitoring-matrices", pm_matrices);
  std::printf("%d of 11 criteria passed\n", 11 - failures);
  return failures == 0 ? 0 : 1;
}
