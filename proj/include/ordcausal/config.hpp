#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ordcausal/copula.hpp"
#include "ordcausal/estimands.hpp"

namespace ordcausal {

// Copula request carrying at most one of tau/rho (both given rejects on
// parse). resolve() maps tau through the family's inversion and requires a
// parameter for the parametric families; the curve subcommand instead takes
// the family alone and supplies taus from its grid.
struct CopulaChoice {
  CopulaFamily family = CopulaFamily::Independence;
  std::optional<double> tau;
  std::optional<double> rho;

  CopulaSpec resolve() const;
};

struct PropensityChoice {
  std::string model = "logistic";  // logistic | stratified | known
  double known_value = 0.5;        // used by "known" only
};

struct OutcomeChoice {
  std::string model = "proportional_odds";  // proportional_odds | stratified
  std::string design = "pooled";            // pooled | per_arm
};

// Simulation-study block: the reference data-generating process with a few
// overridable knobs plus the estimator rows to compare.
struct SimulateEstimatorRow {
  std::string label;
  CopulaChoice copula;
  Estimand estimand = Estimand::Psi;
  EstimatorMode mode = EstimatorMode::OneStep;
  int folds = 10;
};

struct SimulateBlock {
  int n = 1000;
  int n_reps = 200;
  int truth_draws = 500000;
  std::optional<double> delta;        // treatment shift override
  std::optional<CopulaChoice> copula;  // dependence override
  std::vector<SimulateEstimatorRow> estimators;
};

// Parsed analysis configuration; one file drives every subcommand, and each
// subcommand reads the fields it needs (curve needs tau_grid, gamma needs
// gamma_grid, simulate needs the simulate block).
struct AnalysisConfig {
  std::string input;  // CSV path; --input overrides
  std::string outcome_column = "y";
  std::string treatment_column = "a";
  // absent = every remaining column; [] = no covariates (intercept-only)
  std::optional<std::vector<std::string>> covariate_columns;
  bool map_levels = false;

  std::vector<Estimand> estimands = {Estimand::Psi};
  CopulaChoice copula;
  std::vector<double> tau_grid;
  std::vector<double> gamma_grid;
  std::optional<double> breakeven_null;  // enables the breakeven report
  double gamma_max = 10.0;

  double alpha = 0.05;
  EstimatorMode mode = EstimatorMode::OneStep;
  int folds = 10;
  PropensityChoice propensity;
  OutcomeChoice outcome_model;
  std::uint64_t seed = 1;

  std::string out;  // output path; --out overrides; empty = stdout
  std::string format = "csv";
  std::string influence_out;  // per-unit influence CSV, written when non-empty

  std::optional<SimulateBlock> simulate;
};

// Parses and validates a JSON configuration. The schema is versioned
// ("schema" must equal 1) and closed: unknown keys are rejected with their
// JSON path. Syntax errors report the source line. Throws ConfigError.
AnalysisConfig parse_config(const std::string& json_text, const std::string& source_name);
AnalysisConfig read_config(const std::string& path);

}  // namespace ordcausal
