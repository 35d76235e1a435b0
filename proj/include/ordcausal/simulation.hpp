#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ordcausal/copula.hpp"
#include "ordcausal/dataset.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/nuisance.hpp"
#include "ordcausal/rng.hpp"

namespace ordcausal {

// Latent-threshold data-generating process:
//   X_j ~ iid Unif(-1,1), j = 1..p with p = beta1.size()-1
//   A | X ~ Bernoulli(expit(beta1 . (1,X)))
//   eta_a(X) = beta2 . (1,X) + delta*a
//   Y(a) = smallest k with U_a <= expit(thresholds[k] - eta_a(X)), else L-1
//   (U1, U0) | X ~ copula, or spec_from_tau(copula.family, tau_fn(X)) when
//   tau_fn is set (heterogeneous dependence; copula.rho is then ignored).
// The margins satisfy logit pr{Y(a) <= k | X} = thresholds[k] - eta_a(X).
struct DgpSpec {
  std::size_t n = 1000;
  int L = 5;
  std::vector<double> beta1;       // propensity: intercept first, then slopes
  std::vector<double> beta2;       // outcome: intercept first, then slopes
  double delta = 0.4;              // treatment shift added to eta_1
  std::vector<double> thresholds;  // L-1 strictly increasing cutpoints
  CopulaSpec copula;
  std::function<double(std::span<const double>)> tau_fn;  // optional tau(x)
  std::uint64_t seed = 0;
};

// Throws ConfigError on inconsistent sizes, non-increasing thresholds, or an
// unusable copula family.
void validate(const DgpSpec& spec);

// Reference design: 3 uniform covariates, L = 5 with cutpoints
// logit{(k+1)/5}, beta1 = (0.5,-0.2,0.2,-0.2), beta2 = (0.6,0.15,0.15,0.15),
// delta = 0.4, Gumbel copula at rho = 2 (Kendall tau 0.5). True psi ~ 0.370.
DgpSpec make_reference_dgp();

// True nuisance values implied by a spec; usable with KnownPropensity /
// KnownOutcome for known-nuisance analyses.
double dgp_propensity(const DgpSpec& spec, std::span<const double> x);
double dgp_margin(const DgpSpec& spec, int arm, int k, std::span<const double> x);

// One draw of (U, V) from the copula by conditional inversion: U ~ Unif(0,1),
// then V solves dC/du(U, v) = W for W ~ Unif(0,1) by bisection to width
// 1e-10. Independence and the Frechet bounds short-circuit exactly.
std::pair<double, double> sample_copula_pair(const CopulaSpec& spec, Rng& rng);

// Observed data plus the latent potential outcomes that generated it
// (y = a*y1 + (1-a)*y0 elementwise).
struct GeneratedData {
  Dataset data;
  std::vector<int> y1;
  std::vector<int> y0;
};

GeneratedData generate(const DgpSpec& spec);

// Monte Carlo ground truth over fresh latent draws (the stream is derived
// from spec.seed and does not collide with generate's). se_* are the Monte
// Carlo standard errors of the reported values.
struct TruthResult {
  double psi = 0.0;
  double phi = 0.0;
  double xi = 0.0;
  double se_psi = 0.0;
  double se_phi = 0.0;
  double se_xi = 0.0;
  std::size_t n_draws = 0;
};

TruthResult truth(const DgpSpec& spec, std::size_t n_draws = 500000);

// One estimator arm of a replication study. Null model prototypes default to
// LogisticPropensity and pooled ProportionalOddsOutcome; prototypes are
// cloned per replication, so a config can be shared across threads.
struct EstimatorConfig {
  std::string label;
  CopulaSpec copula;
  Estimand estimand = Estimand::Psi;
  EstimatorMode mode = EstimatorMode::OneStep;
  int folds = 10;  // CrossFit only
  std::shared_ptr<const PropensityModel> propensity;
  std::shared_ptr<const OutcomeModel> outcome;
};

// Replication summary for one estimator. bias/sd/rmse are on the estimate
// scale (reports conventionally multiply by 1e3); sd is the population
// standard deviation across successful replications, so rmse^2 = bias^2 +
// sd^2 exactly (the sample-SD convention would carry a factor
// (n_reps-1)/n_reps). coverage is the percent of CIs containing the truth;
// envelope is the percent of CIs lying inside the coupling bounds of the
// fitted margins (the attainable range over joint couplings).
struct StudyResult {
  std::string label;
  Estimand estimand = Estimand::Psi;
  double truth_value = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;  // percent
  double envelope = 0.0;  // percent
  int n_reps = 0;         // successful replications
  int n_failures = 0;
};

struct StudyTable {
  TruthResult truth;
  std::vector<StudyResult> rows;
  std::size_t n = 0;
  int n_reps = 0;  // requested replications
};

// Runs n_reps independent replications of spec (per-replication seeds derived
// from spec.seed by a counter scheme, so the table is identical for any
// thread count). Per-replication fit failures are counted per estimator and
// rethrown only if an estimator fails in more than 2% of replications.
// rep_seeds, when nonempty, overrides the derived seeds (size must equal
// n_reps). n_threads <= 0 uses the hardware concurrency.
StudyTable run_study(const DgpSpec& spec, std::span<const EstimatorConfig> estimators,
                     int n_reps = 200, double alpha = 0.05, int n_threads = 0,
                     std::size_t truth_draws = 500000,
                     std::span<const std::uint64_t> rep_seeds = {});

// Study table serializers (raw estimate scale, not x1e3).
std::string study_csv(const StudyTable& table);
std::string study_json(const StudyTable& table);

}  // namespace ordcausal
