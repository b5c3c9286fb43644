#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "odm/runner.hpp"

namespace odm {

using nlohmann::json;

namespace {

constexpr std::pair<SweepAxis, std::string_view> kAxisNames[] = {
    {SweepAxis::NoiseQ, "noise_q"}, {SweepAxis::KReq, "k_req"}, {SweepAxis::Samples, "s"},
    {SweepAxis::Alpha, "alpha"},    {SweepAxis::KInt, "k_int"},
};

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <typename T>
void read_optional(const json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  T v{};
  read(obj, key, v);
  out = v;
}

PolicySpec parse_policy(const json& p) {
  PolicySpec spec;
  try {
    if (p.is_string()) {
      spec.kind = policy_kind_from_string(p.get<std::string>());
      return spec;
    }
    check_keys(p, "policy", {"kind", "epsilon_floor"});
    spec.kind = policy_kind_from_string(p.at("kind").get<std::string>());
    read(p, "epsilon_floor", spec.epsilon_floor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad policy entry: ") + e.what());
  }
  if (spec.epsilon_floor && spec.kind != PolicyKind::Umpire) throw ConfigError("epsilon_floor applies to umpire only");
  return spec;
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  for (const auto& [a, name] : kAxisNames)
    if (a == axis) return name;
  return "?";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
  for (const auto& [a, n] : kAxisNames)
    if (n == name) return a;
  throw ConfigError("unknown sweep axis: " + std::string(name));
}

double default_request_cost(int m) {
  if (m < 2) throw std::invalid_argument("default_request_cost: m must be at least 2");
  // The small offset keeps exact decimals such as 1.5 from rounding down a step.
  return std::floor(10.0 * m / (m - 1) + 1e-9) / 10.0;
}

void ExperimentConfig::validate() const {
  if (policies.empty()) throw ConfigError("no policies configured");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (model.samples < 1) throw ConfigError("model.samples must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0, 1]");
  if (heldout_size < 1) throw ConfigError("heldout_size must be >= 1");
  if (eval_every < 0 || ma_window < 0) throw ConfigError("eval_every and ma_window must be >= 0");
  if (environment.kind == EnvironmentKind::GaussSine &&
      (environment.gauss_sine.noise_q < 0.0 || environment.gauss_sine.noise_q > 0.5))
    throw ConfigError("noise_q must lie in [0, 0.5]");
  if (environment.kind == EnvironmentKind::Tabular &&
      (environment.tabular.path.empty() || environment.tabular.label_column.empty()))
    throw ConfigError("tabular environment needs path and label_column");
  try {
    CostSpec c = costs;
    if (k_req) c.k_req = *k_req;
    if (kappa) c.kappa = *kappa;
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"environment", "model", "policies", "horizon", "runs", "costs", "alpha", "heldout_size", "eval_every",
              "ma_window", "sweep", "master_seed", "threads", "output_dir", "matched_epsilon_file"});

  ExperimentConfig c;
  if (root.contains("environment")) {
    const json& e = root.at("environment");
    check_keys(e, "environment", {"kind", "noise_q", "path", "label_column", "feature_columns", "delimiter"});
    std::string kind = "gauss_sine";
    read(e, "kind", kind);
    if (kind == "gauss_sine") {
      c.environment.kind = EnvironmentKind::GaussSine;
      read(e, "noise_q", c.environment.gauss_sine.noise_q);
    } else if (kind == "tabular") {
      c.environment.kind = EnvironmentKind::Tabular;
      std::string path, delim;
      read(e, "path", path);
      c.environment.tabular.path = path;
      read(e, "label_column", c.environment.tabular.label_column);
      read(e, "feature_columns", c.environment.tabular.feature_columns);
      read(e, "delimiter", delim);
      if (delim == "\\t" || delim == "tab") delim = "\t";
      if (delim.size() > 1) throw ConfigError("delimiter must be a single character");
      c.environment.tabular.delimiter = delim.empty() ? '\0' : delim[0];
    } else {
      throw ConfigError("unknown environment kind: " + kind);
    }
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    check_keys(m, "model", {"lengthscale", "signal_variance", "jitter", "alpha_eps", "samples"});
    read_optional(m, "lengthscale", c.model.kernel.lengthscale);
    read(m, "signal_variance", c.model.kernel.signal_variance);
    read(m, "jitter", c.model.kernel.jitter);
    read(m, "alpha_eps", c.model.kernel.alpha_eps);
    read(m, "samples", c.model.samples);
  }
  if (root.contains("policies")) {
    const json& ps = root.at("policies");
    if (!ps.is_array()) throw ConfigError("policies must be an array");
    for (const auto& p : ps) c.policies.push_back(parse_policy(p));
  } else {
    for (PolicyKind k : all_policy_kinds())
      if (k != PolicyKind::Oracle) c.policies.push_back({k, std::nullopt, false});
  }
  read(root, "horizon", c.horizon);
  read(root, "runs", c.runs);
  if (root.contains("costs")) {
    const json& k = root.at("costs");
    check_keys(k, "costs", {"k_int", "k_req", "epsilon", "kappa", "b"});
    read(k, "k_int", c.costs.k_int);
    if (k.contains("k_req") && !k.at("k_req").is_null()) {
      if (k.at("k_req").is_string()) {
        if (k.at("k_req").get<std::string>() != "default-rule") throw ConfigError("k_req must be a number or \"default-rule\"");
      } else {
        read_optional(k, "k_req", c.k_req);
      }
    }
    read(k, "epsilon", c.costs.epsilon);
    read_optional(k, "kappa", c.kappa);
    read(k, "b", c.costs.b);
  }
  read(root, "alpha", c.alpha);
  read(root, "heldout_size", c.heldout_size);
  read(root, "eval_every", c.eval_every);
  read(root, "ma_window", c.ma_window);
  if (root.contains("sweep")) {
    const json& s = root.at("sweep");
    if (!s.is_object()) throw ConfigError("sweep must be an object");
    for (const auto& [key, values] : s.items()) {
      try {
        c.sweep[sweep_axis_from_string(key)] = values.get<std::vector<double>>();
      } catch (const json::exception& e) {
        throw ConfigError("sweep." + key + ": " + e.what());
      }
    }
  }
  read(root, "master_seed", c.master_seed);
  read(root, "threads", c.threads);
  std::string out;
  read(root, "output_dir", out);
  if (!out.empty()) c.output_dir = out;
  std::string eps_file;
  read(root, "matched_epsilon_file", eps_file);
  if (!eps_file.empty()) c.matched_epsilon_file = eps_file;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig c = parse_config(ss.str());
  // Relative data paths are taken relative to the config file.
  if (c.environment.kind == EnvironmentKind::Tabular && c.environment.tabular.path.is_relative() &&
      !std::filesystem::exists(c.environment.tabular.path))
    c.environment.tabular.path = path.parent_path() / c.environment.tabular.path;
  return c;
}

std::string config_to_json(const ExperimentConfig& c) {
  json root;
  json env;
  if (c.environment.kind == EnvironmentKind::GaussSine) {
    env["kind"] = "gauss_sine";
    env["noise_q"] = c.environment.gauss_sine.noise_q;
  } else {
    env["kind"] = "tabular";
    env["path"] = c.environment.tabular.path.string();
    env["label_column"] = c.environment.tabular.label_column;
    env["feature_columns"] = c.environment.tabular.feature_columns;
    env["delimiter"] = c.environment.tabular.delimiter ? std::string(1, c.environment.tabular.delimiter) : "";
  }
  root["environment"] = env;
  root["model"] = {{"lengthscale", c.model.kernel.lengthscale ? json(*c.model.kernel.lengthscale) : json(nullptr)},
                   {"signal_variance", c.model.kernel.signal_variance},
                   {"jitter", c.model.kernel.jitter},
                   {"alpha_eps", c.model.kernel.alpha_eps},
                   {"samples", c.model.samples}};
  json policies = json::array();
  for (const auto& p : c.policies) {
    if (p.epsilon_floor)
      policies.push_back({{"kind", std::string(to_string(p.kind))}, {"epsilon_floor", true}});
    else
      policies.push_back(std::string(to_string(p.kind)));
  }
  root["policies"] = policies;
  root["horizon"] = c.horizon;
  root["runs"] = c.runs;
  root["costs"] = {{"k_int", c.costs.k_int},
                   {"k_req", c.k_req ? json(*c.k_req) : json("default-rule")},
                   {"epsilon", c.costs.epsilon},
                   {"kappa", c.kappa ? json(*c.kappa) : json(nullptr)},
                   {"b", c.costs.b}};
  root["alpha"] = c.alpha;
  root["heldout_size"] = c.heldout_size;
  root["eval_every"] = c.eval_every;
  root["ma_window"] = c.ma_window;
  json sweep = json::object();
  for (const auto& [axis, values] : c.sweep) sweep[std::string(to_string(axis))] = values;
  root["sweep"] = sweep;
  root["master_seed"] = c.master_seed;
  root["threads"] = c.threads;
  root["output_dir"] = c.output_dir.string();
  if (c.matched_epsilon_file) root["matched_epsilon_file"] = c.matched_epsilon_file->string();
  return root.dump(2);
}

ResolvedSettings resolve(const ExperimentConfig& config, int m) {
  ResolvedSettings r;
  r.m = m;
  r.horizon = config.horizon > 0 ? config.horizon : (config.environment.kind == EnvironmentKind::GaussSine ? 500 : 2000);
  r.eval_every = config.eval_every > 0 ? config.eval_every : std::max(1, r.horizon / 10);
  r.ma_window = config.ma_window > 0 ? config.ma_window : std::max(1, r.horizon / 5);
  r.costs = config.costs;
  r.costs.k_req = config.k_req.value_or(default_request_cost(m));
  r.costs.kappa = config.kappa.value_or(kappa0(m, config.costs.b));
  return r;
}

MatchedEpsilon load_matched_epsilon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matched epsilon file: " + path.string());
  try {
    const json j = json::parse(in);
    MatchedEpsilon fit;
    fit.horizon = j.at("horizon").get<int>();
    const auto coeffs = j.at("coefficients").get<std::vector<double>>();
    if (coeffs.size() != 4) throw ConfigError("matched epsilon file needs 4 coefficients");
    for (int i = 0; i < 4; ++i) fit.coefficients(i) = coeffs[static_cast<std::size_t>(i)];
    fit.epsilon = j.at("epsilon").get<std::vector<double>>();
    return fit;
  } catch (const json::exception& e) {
    throw ConfigError("bad matched epsilon file: " + std::string(e.what()));
  }
}

void save_matched_epsilon(const std::filesystem::path& path, const MatchedEpsilon& fit) {
  json j;
  j["horizon"] = fit.horizon;
  j["coefficients"] = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + 4);
  j["epsilon"] = fit.epsilon;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace odm
