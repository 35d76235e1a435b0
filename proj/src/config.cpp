#include "ordcausal/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include "ordcausal/errors.hpp"

namespace ordcausal {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& path,
                       const std::string& what) {
  throw ConfigError(source + ": key '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& source, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const auto a : allowed) known = known || key == a;
    if (!known) fail(source, path.empty() ? key : path + "." + key, "unknown key");
  }
}

const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_double(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_number()) fail(source, path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(source, path, "expected a finite number");
  return d;
}

int as_int(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_number_integer()) fail(source, path, "expected an integer");
  return v.get<int>();
}

std::string as_string(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_string()) fail(source, path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& source, const std::string& path) {
  if (!v.is_boolean()) fail(source, path, "expected a boolean");
  return v.get<bool>();
}

std::vector<double> as_double_array(const json& v, const std::string& source,
                                    const std::string& path) {
  if (!v.is_array()) fail(source, path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_double(v[i], source, path + "[" + std::to_string(i) + "]"));
  return out;
}

EstimatorMode mode_from_name(const std::string& name, const std::string& source,
                             const std::string& path) {
  if (name == "one_step") return EstimatorMode::OneStep;
  if (name == "cross_fit") return EstimatorMode::CrossFit;
  if (name == "unconditional_dr") return EstimatorMode::UnconditionalDR;
  fail(source, path, "unknown mode '" + name + "' (expected one_step, cross_fit, or unconditional_dr)");
}

CopulaChoice parse_copula(const json& obj, const std::string& source, const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object {family, tau|rho}");
  check_keys(obj, source, path, {"family", "tau", "rho"});
  CopulaChoice choice;
  const json* fam = find(obj, "family");
  if (!fam) fail(source, path + ".family", "missing");
  choice.family = family_from_name(as_string(*fam, source, path + ".family"));
  if (const json* t = find(obj, "tau")) choice.tau = as_double(*t, source, path + ".tau");
  if (const json* r = find(obj, "rho")) choice.rho = as_double(*r, source, path + ".rho");
  const bool takes_param = choice.family != CopulaFamily::Independence &&
                           choice.family != CopulaFamily::FrechetLower &&
                           choice.family != CopulaFamily::FrechetUpper;
  if (choice.tau && choice.rho) fail(source, path, "give exactly one of tau/rho, not both");
  if (!takes_param && (choice.tau || choice.rho))
    fail(source, path, "this family takes no tau/rho parameter");
  // parametric families without tau/rho stay unresolved here: the curve
  // subcommand supplies taus from the grid, the others fail in resolve()
  return choice;
}

std::vector<Estimand> parse_estimands(const json& v, const std::string& source,
                                      const std::string& path) {
  std::vector<Estimand> out;
  if (v.is_string()) {
    out.push_back(estimand_from_name(v.get<std::string>()));
    return out;
  }
  if (!v.is_array() || v.empty()) fail(source, path, "expected a name or non-empty array");
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string item = as_string(v[i], source, path + "[" + std::to_string(i) + "]");
    out.push_back(estimand_from_name(item));
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      if (out[i] == out[j]) fail(source, path, "duplicate estimand");
  return out;
}

PropensityChoice parse_propensity(const json& obj, const std::string& source,
                                  const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object {model, value?}");
  check_keys(obj, source, path, {"model", "value"});
  PropensityChoice choice;
  if (const json* m = find(obj, "model")) choice.model = as_string(*m, source, path + ".model");
  if (choice.model != "logistic" && choice.model != "stratified" && choice.model != "known")
    fail(source, path + ".model", "unknown model '" + choice.model +
                                      "' (expected logistic, stratified, or known)");
  const json* v = find(obj, "value");
  if (choice.model == "known") {
    if (!v) fail(source, path + ".value", "missing (known propensity needs a value)");
    choice.known_value = as_double(*v, source, path + ".value");
    if (!(choice.known_value > 0.0 && choice.known_value < 1.0))
      fail(source, path + ".value", "must lie strictly inside (0,1)");
  } else if (v) {
    fail(source, path + ".value", "only the known model takes a value");
  }
  return choice;
}

OutcomeChoice parse_outcome(const json& obj, const std::string& source, const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object {model, design?}");
  check_keys(obj, source, path, {"model", "design"});
  OutcomeChoice choice;
  if (const json* m = find(obj, "model")) choice.model = as_string(*m, source, path + ".model");
  if (choice.model != "proportional_odds" && choice.model != "stratified")
    fail(source, path + ".model",
         "unknown model '" + choice.model + "' (expected proportional_odds or stratified)");
  if (const json* d = find(obj, "design")) {
    choice.design = as_string(*d, source, path + ".design");
    if (choice.model != "proportional_odds")
      fail(source, path + ".design", "only proportional_odds takes a design");
  }
  if (choice.design != "pooled" && choice.design != "per_arm")
    fail(source, path + ".design", "expected pooled or per_arm");
  return choice;
}

SimulateBlock parse_simulate(const json& obj, const std::string& source,
                             const std::string& path) {
  if (!obj.is_object()) fail(source, path, "expected an object");
  check_keys(obj, source, path,
             {"n", "n_reps", "truth_draws", "delta", "copula", "estimators"});
  SimulateBlock block;
  if (const json* v = find(obj, "n")) block.n = as_int(*v, source, path + ".n");
  if (block.n < 1) fail(source, path + ".n", "must be >= 1");
  if (const json* v = find(obj, "n_reps")) block.n_reps = as_int(*v, source, path + ".n_reps");
  if (block.n_reps < 1) fail(source, path + ".n_reps", "must be >= 1");
  if (const json* v = find(obj, "truth_draws"))
    block.truth_draws = as_int(*v, source, path + ".truth_draws");
  if (block.truth_draws < 1) fail(source, path + ".truth_draws", "must be >= 1");
  if (const json* v = find(obj, "delta"))
    block.delta = as_double(*v, source, path + ".delta");
  if (const json* v = find(obj, "copula"))
    block.copula = parse_copula(*v, source, path + ".copula");
  const json* est = find(obj, "estimators");
  if (!est || !est->is_array() || est->empty())
    fail(source, path + ".estimators", "expected a non-empty array");
  for (std::size_t i = 0; i < est->size(); ++i) {
    const std::string row_path = path + ".estimators[" + std::to_string(i) + "]";
    const json& row = (*est)[i];
    if (!row.is_object()) fail(source, row_path, "expected an object");
    check_keys(row, source, row_path, {"label", "copula", "estimand", "mode", "folds"});
    SimulateEstimatorRow parsed;
    const json* label = find(row, "label");
    if (!label) fail(source, row_path + ".label", "missing");
    parsed.label = as_string(*label, source, row_path + ".label");
    const json* cop = find(row, "copula");
    if (!cop) fail(source, row_path + ".copula", "missing");
    parsed.copula = parse_copula(*cop, source, row_path + ".copula");
    if (const json* v = find(row, "estimand"))
      parsed.estimand = estimand_from_name(as_string(*v, source, row_path + ".estimand"));
    if (const json* v = find(row, "mode"))
      parsed.mode = mode_from_name(as_string(*v, source, row_path + ".mode"), source,
                                   row_path + ".mode");
    if (const json* v = find(row, "folds")) parsed.folds = as_int(*v, source, row_path + ".folds");
    block.estimators.push_back(std::move(parsed));
  }
  return block;
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

CopulaSpec CopulaChoice::resolve() const {
  const bool takes_param = family != CopulaFamily::Independence &&
                           family != CopulaFamily::FrechetLower &&
                           family != CopulaFamily::FrechetUpper;
  if (takes_param && !tau && !rho)
    throw ConfigError(std::string("copula family ") + family_name(family) +
                      " needs exactly one of tau/rho");
  // out-of-domain parameters come from the configuration, so they surface as
  // config errors rather than numeric ones
  try {
    if (tau) return spec_from_tau(family, *tau);
    CopulaSpec spec{family, rho ? *rho : 0.0};
    cdf(spec, 0.5, 0.5);  // parameter-domain probe
    return spec;
  } catch (const NumericError& e) {
    throw ConfigError(std::string("copula: ") + e.what());
  }
}

AnalysisConfig parse_config(const std::string& json_text, const std::string& source_name) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source_name + " line " + std::to_string(line_of_byte(json_text, e.byte)) +
                      ": " + e.what());
  }
  const std::string& src = source_name;
  if (!root.is_object()) throw ConfigError(src + ": top level must be a JSON object");
  check_keys(root, src, "",
             {"schema", "input", "outcome_column", "treatment_column", "covariate_columns",
              "map_levels", "estimand", "copula", "tau_grid", "gamma_grid", "breakeven_null",
              "gamma_max", "alpha", "mode", "folds", "propensity", "outcome", "seed", "out",
              "format", "influence_out", "simulate"});

  const json* schema = find(root, "schema");
  if (!schema) fail(src, "schema", "missing (this tool reads schema 1)");
  if (as_int(*schema, src, "schema") != 1)
    fail(src, "schema", "unsupported version (this tool reads schema 1)");

  AnalysisConfig cfg;
  if (const json* v = find(root, "input")) cfg.input = as_string(*v, src, "input");
  if (const json* v = find(root, "outcome_column"))
    cfg.outcome_column = as_string(*v, src, "outcome_column");
  if (const json* v = find(root, "treatment_column"))
    cfg.treatment_column = as_string(*v, src, "treatment_column");
  if (const json* v = find(root, "covariate_columns")) {
    if (!v->is_array()) fail(src, "covariate_columns", "expected an array of column names");
    cfg.covariate_columns.emplace();
    for (std::size_t i = 0; i < v->size(); ++i)
      cfg.covariate_columns->push_back(
          as_string((*v)[i], src, "covariate_columns[" + std::to_string(i) + "]"));
  }
  if (const json* v = find(root, "map_levels")) cfg.map_levels = as_bool(*v, src, "map_levels");
  if (const json* v = find(root, "estimand")) cfg.estimands = parse_estimands(*v, src, "estimand");
  if (const json* v = find(root, "copula")) cfg.copula = parse_copula(*v, src, "copula");
  if (const json* v = find(root, "tau_grid")) {
    cfg.tau_grid = as_double_array(*v, src, "tau_grid");
    for (std::size_t i = 1; i < cfg.tau_grid.size(); ++i)
      if (cfg.tau_grid[i] <= cfg.tau_grid[i - 1])
        fail(src, "tau_grid", "must be strictly increasing");
  }
  if (const json* v = find(root, "gamma_grid")) {
    cfg.gamma_grid = as_double_array(*v, src, "gamma_grid");
    for (std::size_t i = 0; i < cfg.gamma_grid.size(); ++i) {
      if (cfg.gamma_grid[i] < 1.0) fail(src, "gamma_grid", "values must be >= 1");
      if (i > 0 && cfg.gamma_grid[i] <= cfg.gamma_grid[i - 1])
        fail(src, "gamma_grid", "must be strictly increasing");
    }
  }
  if (const json* v = find(root, "breakeven_null"))
    cfg.breakeven_null = as_double(*v, src, "breakeven_null");
  if (const json* v = find(root, "gamma_max")) {
    cfg.gamma_max = as_double(*v, src, "gamma_max");
    if (cfg.gamma_max < 1.0) fail(src, "gamma_max", "must be >= 1");
  }
  if (const json* v = find(root, "alpha")) {
    cfg.alpha = as_double(*v, src, "alpha");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 0.5)) fail(src, "alpha", "must lie in (0, 0.5)");
  }
  if (const json* v = find(root, "mode"))
    cfg.mode = mode_from_name(as_string(*v, src, "mode"), src, "mode");
  if (const json* v = find(root, "folds")) {
    cfg.folds = as_int(*v, src, "folds");
    if (cfg.folds < 2) fail(src, "folds", "must be >= 2");
  }
  if (const json* v = find(root, "propensity"))
    cfg.propensity = parse_propensity(*v, src, "propensity");
  if (const json* v = find(root, "outcome")) cfg.outcome_model = parse_outcome(*v, src, "outcome");
  if (const json* v = find(root, "seed")) {
    if (!v->is_number_unsigned()) fail(src, "seed", "expected a non-negative integer");
    cfg.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(root, "out")) cfg.out = as_string(*v, src, "out");
  if (const json* v = find(root, "format")) {
    cfg.format = as_string(*v, src, "format");
    if (cfg.format != "csv" && cfg.format != "json")
      fail(src, "format", "expected csv or json");
  }
  if (const json* v = find(root, "influence_out"))
    cfg.influence_out = as_string(*v, src, "influence_out");
  if (const json* v = find(root, "simulate")) cfg.simulate = parse_simulate(*v, src, "simulate");
  return cfg;
}

AnalysisConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw ConfigError(path + ": read failed");
  return parse_config(buf.str(), path);
}

}  // namespace ordcausal
