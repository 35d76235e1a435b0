// Command-line front end: estimate | curve | gamma | simulate.
// Exit codes: 0 ok, 2 configuration/input error, 3 model-fit error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ordcausal/config.hpp"
#include "ordcausal/csv.hpp"
#include "ordcausal/errors.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/io.hpp"
#include "ordcausal/nuisance.hpp"
#include "ordcausal/sensitivity.hpp"
#include "ordcausal/simulation.hpp"

namespace {

using namespace ordcausal;

struct Flags {
  std::string config_path;
  std::string input;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

// Flag values override their config-file counterparts.
AnalysisConfig load_config(const Flags& flags) {
  AnalysisConfig cfg = read_config(flags.config_path);
  if (!flags.input.empty()) cfg.input = flags.input;
  if (!flags.out.empty()) cfg.out = flags.out;
  if (!flags.format.empty()) cfg.format = flags.format;
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
  } else {
    write_file_atomic(path, content);
  }
}

std::unique_ptr<PropensityModel> make_propensity(const AnalysisConfig& cfg) {
  if (cfg.propensity.model == "logistic") return std::make_unique<LogisticPropensity>();
  if (cfg.propensity.model == "stratified") return std::make_unique<StratifiedPropensity>();
  const double value = cfg.propensity.known_value;
  return std::make_unique<KnownPropensity>([value](std::span<const double>) { return value; });
}

std::unique_ptr<OutcomeModel> make_outcome(const AnalysisConfig& cfg) {
  if (cfg.outcome_model.model == "stratified") return std::make_unique<StratifiedOutcome>();
  const OutcomeDesign design = cfg.outcome_model.design == "per_arm"
                                   ? OutcomeDesign::PerArm
                                   : OutcomeDesign::PooledTreatment;
  return std::make_unique<ProportionalOddsOutcome>(design);
}

LoadedData load_input(const AnalysisConfig& cfg) {
  if (cfg.input.empty())
    throw ConfigError("input: required (config \"input\" or --input)");
  return load_dataset(read_csv(cfg.input), cfg);
}

NuisanceFit fit_nuisance(const Dataset& data, const AnalysisConfig& cfg) {
  auto propensity = make_propensity(cfg);
  auto outcome = make_outcome(cfg);
  if (cfg.mode == EstimatorMode::CrossFit)
    return fit_crossfit(data, *propensity, *outcome, cfg.folds, cfg.seed).fit;
  propensity->fit(data);
  outcome->fit(data);
  return predict_nuisance(*propensity, *outcome, data);
}

EstimateResult run_estimator(const Dataset& data, const NuisanceFit& fit, const CopulaSpec& spec,
                             Estimand est, const AnalysisConfig& cfg) {
  switch (cfg.mode) {
    case EstimatorMode::OneStep: return one_step(data, fit, spec, est, cfg.alpha);
    case EstimatorMode::CrossFit: return cross_fit(data, fit, spec, est, cfg.alpha);
    case EstimatorMode::UnconditionalDR:
      return unconditional_dr(data, fit, spec, est, cfg.alpha);
  }
  throw ConfigError("unknown estimator mode");
}

int cmd_estimate(const Flags& flags) {
  const AnalysisConfig cfg = load_config(flags);
  const LoadedData loaded = load_input(cfg);
  const CopulaSpec spec = cfg.copula.resolve();
  const NuisanceFit fit = fit_nuisance(loaded.data, cfg);

  std::vector<EstimateResult> results;
  for (const Estimand est : cfg.estimands)
    results.push_back(run_estimator(loaded.data, fit, spec, est, cfg));

  const RunMeta meta{loaded.data.n, loaded.data.L};
  const std::string body =
      cfg.format == "json" ? estimate_json(results, meta) : estimate_csv(results, meta);
  const std::string influence = cfg.influence_out.empty() ? "" : influence_csv(results);
  emit(cfg.out, body);
  if (!cfg.influence_out.empty()) write_file_atomic(cfg.influence_out, influence);
  return 0;
}

int cmd_curve(const Flags& flags) {
  const AnalysisConfig cfg = load_config(flags);
  if (cfg.tau_grid.empty()) throw ConfigError("tau_grid: required for the curve subcommand");
  if (cfg.estimands.size() != 1)
    throw ConfigError("estimand: the curve subcommand takes exactly one estimand");
  if (cfg.copula.tau || cfg.copula.rho)
    throw ConfigError("copula: the curve reads taus from tau_grid; drop copula.tau/rho");

  const LoadedData loaded = load_input(cfg);
  const NuisanceFit fit = fit_nuisance(loaded.data, cfg);
  const SensitivityCurve curve = tau_curve(loaded.data, fit, cfg.copula.family, cfg.tau_grid,
                                           cfg.estimands[0], cfg.alpha, cfg.mode);

  const RunMeta meta{loaded.data.n, loaded.data.L};
  emit(cfg.out, cfg.format == "json" ? curve_json(curve, meta) : curve_csv(curve));
  return 0;
}

int cmd_gamma(const Flags& flags) {
  const AnalysisConfig cfg = load_config(flags);
  if (cfg.gamma_grid.empty()) throw ConfigError("gamma_grid: required for the gamma subcommand");
  if (cfg.estimands.size() != 1)
    throw ConfigError("estimand: the gamma subcommand takes exactly one estimand");
  if (cfg.mode != EstimatorMode::OneStep)
    throw ConfigError("mode: gamma bound endpoints are one-step only");

  const LoadedData loaded = load_input(cfg);
  const CopulaSpec spec = cfg.copula.resolve();
  const NuisanceFit fit = fit_nuisance(loaded.data, cfg);
  const Estimand est = cfg.estimands[0];

  GammaReport report;
  report.estimand = est;
  report.copula = spec;
  for (const double gamma : cfg.gamma_grid)
    report.rows.push_back(endpoint_one_step(loaded.data, fit, spec, gamma, est, cfg.alpha));
  if (cfg.breakeven_null) {
    report.null_value = cfg.breakeven_null;
    report.breakeven = breakeven_gamma(loaded.data, fit, spec, est, *cfg.breakeven_null,
                                       cfg.gamma_max, 1e-3, cfg.alpha);
  }

  const RunMeta meta{loaded.data.n, loaded.data.L};
  emit(cfg.out, cfg.format == "json" ? gamma_json(report, meta) : gamma_csv(report));
  if (report.breakeven && cfg.format != "json") {
    // keep the CSV sink pure: the report line goes to the other stream
    std::ostream& side = cfg.out.empty() ? std::cerr : std::cout;
    side << "breakeven gamma_star=" << report.breakeven->gamma_star
         << " flag=" << (report.breakeven->flag == BreakevenFlag::Ok
                             ? "ok"
                             : report.breakeven->flag == BreakevenFlag::NotIdentifiedAtOne
                                   ? "not_identified_at_one"
                                   : "exceeds_max")
         << " null=" << *report.null_value << "\n";
  }
  return 0;
}

int cmd_simulate(const Flags& flags) {
  const AnalysisConfig cfg = load_config(flags);
  if (!cfg.simulate) throw ConfigError("simulate: block required for the simulate subcommand");
  const SimulateBlock& block = *cfg.simulate;

  DgpSpec spec = make_reference_dgp();
  spec.n = block.n;
  spec.seed = cfg.seed;
  if (block.delta) spec.delta = *block.delta;
  if (block.copula) spec.copula = block.copula->resolve();

  std::vector<EstimatorConfig> estimators;
  for (const SimulateEstimatorRow& row : block.estimators) {
    EstimatorConfig est;
    est.label = row.label;
    est.copula = row.copula.resolve();
    est.estimand = row.estimand;
    est.mode = row.mode;
    est.folds = row.folds;
    estimators.push_back(std::move(est));
  }

  const StudyTable table = run_study(spec, estimators, block.n_reps, cfg.alpha, flags.threads,
                                     block.truth_draws);
  emit(cfg.out, cfg.format == "json" ? study_json(table) : study_csv(table));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula-linked causal estimation for ordinal outcomes"};
  app.require_subcommand(1);

  Flags flags;
  int subcommand = 0;
  const auto add_common = [&](CLI::App* sub, int id) {
    sub->add_option("--config", flags.config_path, "JSON configuration file")
        ->required();
    sub->add_option("--input", flags.input, "input CSV (overrides config)");
    sub->add_option("--out", flags.out, "output path (overrides config; default stdout)");
    sub->add_option("--format", flags.format, "output format (overrides config)")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", flags.seed, "RNG seed (overrides config)");
    sub->add_option("--threads", flags.threads, "worker threads (0 = all cores)")
        ->envname("ORDINAL_CAUSAL_THREADS")
        ->check(CLI::NonNegativeNumber);
    sub->callback([&subcommand, id] { subcommand = id; });
  };
  add_common(app.add_subcommand("estimate", "point estimates with influence-based CIs"), 1);
  add_common(app.add_subcommand("curve", "sensitivity curve over a Kendall tau grid"), 2);
  add_common(app.add_subcommand("gamma", "hidden-confounding bounds over a gamma grid"), 3);
  add_common(app.add_subcommand("simulate", "replication study on the reference process"), 4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    switch (subcommand) {
      case 1: return cmd_estimate(flags);
      case 2: return cmd_curve(flags);
      case 3: return cmd_gamma(flags);
      case 4: return cmd_simulate(flags);
    }
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
