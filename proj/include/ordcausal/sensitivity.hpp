#pragma once

#include <span>
#include <string>
#include <vector>

#include "ordcausal/copula.hpp"
#include "ordcausal/dataset.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/matrix.hpp"
#include "ordcausal/nuisance.hpp"

namespace ordcausal {

// --- hidden-confounding (odds-ratio) analysis ------------------------------
//
// The confounding model bounds the treatment-odds ratio between units sharing
// covariates by gamma >= 1. Each observed conditional margin p then brackets
// the unidentified counterfactual margin inside [lower(p), upper(p)], and the
// causal margins inside mixture transforms of those brackets.

// Value of the lower/upper bounding transform (r_gamma) or its derivative in
// p (r_gamma_deriv), evaluated at one probability.
struct TransformPair {
  double lower = 0.0;
  double upper = 0.0;
};

// lower = p / {p + gamma (1-p)}, upper = gamma p / {gamma p + 1 - p}.
// Both fix 0 and 1; lower <= p <= upper with equality iff gamma = 1 (returned
// as the exact identity, no arithmetic). Throws InvalidGamma for gamma < 1.
TransformPair r_gamma(double p, double gamma);
TransformPair r_gamma_deriv(double p, double gamma);

// Bracketing causal margins: arm-1 rows e p + (1-e) r(p), arm-0 rows
// (1-e) p + e r(p), applied elementwise to the fitted margins. At gamma = 1
// all four matrices equal the fitted margins bit for bit.
struct MarginBounds {
  Matrix f1_lower, f1_upper;  // n x (L-1)
  Matrix f0_lower, f0_upper;
};

MarginBounds margin_bounds(const NuisanceFit& fit, double gamma);

// Per-unit plug-in range of the estimand over the margin brackets: the lower
// endpoint couples the upper arm-1 margins with the lower arm-0 margins (the
// functional decreases in the former, increases in the latter), the upper
// endpoint the reverse. Xi endpoints add the matched Psi and Phi endpoints.
// Throws UnsupportedCopula for the Frechet bound families.
Interval endpoint_m(Estimand est, std::span<const double> f1_lower,
                    std::span<const double> f1_upper, std::span<const double> f0_lower,
                    std::span<const double> f0_upper, const CopulaSpec& spec);

// One-step interval for the estimand under the confounding model.
struct GammaBoundResult {
  double gamma = 1.0;
  double tau = 0.0;  // Kendall's tau of the copula used
  EstimateResult lower, upper;
};

// Efficient one-step estimators of both bound endpoints, with influence-based
// CIs per endpoint. Scores extend the plain one-step score with a propensity
// augmentation (the endpoints depend on e through the mixture transforms) and
// chain-rule margin coefficients; residuals center at the fitted margins. At
// gamma = 1 both endpoints reproduce one_step exactly, bit for bit.
GammaBoundResult endpoint_one_step(const Dataset& data, const NuisanceFit& fit,
                                   const CopulaSpec& spec, double gamma, Estimand est,
                                   double alpha = 0.05);

// --- dependence-parameter sensitivity curve --------------------------------

// Kendall's tau grid for one family; strictly increasing and fully
// representable (construction validates both).
struct TauGrid {
  CopulaFamily family = CopulaFamily::Independence;
  std::vector<double> taus;
};

TauGrid make_tau_grid(CopulaFamily family, std::span<const double> taus);

struct SkippedTau {
  double tau = 0.0;
  std::string reason;
};

// Estimates indexed by tau, with the sharp coupling bounds of the fitted
// margins attached (coupling_bounds); every curve point lies inside that
// band. grid and estimates align; grid points whose tau has no parameter
// value in the family land in skipped instead.
struct SensitivityCurve {
  TauGrid grid;
  std::vector<EstimateResult> estimates;
  Interval envelope;
  std::vector<SkippedTau> skipped;
};

// One estimate per tau over a shared nuisance fit. mode picks the estimator
// (for CrossFit pass the out-of-fold fit). Requested taus must be strictly
// increasing; unsupported ones are reported per point, other errors abort.
SensitivityCurve tau_curve(const Dataset& data, const NuisanceFit& fit, CopulaFamily family,
                           std::span<const double> taus, Estimand est, double alpha = 0.05,
                           EstimatorMode mode = EstimatorMode::OneStep);

// --- breakeven confounding strength ----------------------------------------

enum class BreakevenFlag {
  Ok,                  // threshold located inside [1, gamma_max]
  NotIdentifiedAtOne,  // the gamma = 1 interval already contains the null
  ExceedsMax,          // still excluded at gamma_max
};

struct BreakevenResult {
  double gamma_star = 1.0;
  BreakevenFlag flag = BreakevenFlag::Ok;
};

// Largest gamma at which the union interval [lower endpoint's lower CI, upper
// endpoint's upper CI] still excludes null_value, by bisection on
// [1, gamma_max] to within tol (the interval widens monotonically in gamma).
BreakevenResult breakeven_gamma(const Dataset& data, const NuisanceFit& fit,
                                const CopulaSpec& spec, Estimand est, double null_value,
                                double gamma_max = 10.0, double tol = 1e-3, double alpha = 0.05);

// Curve-level robustness over a tau grid: the smallest per-tau breakeven
// (with that point's flag).
BreakevenResult min_breakeven(const Dataset& data, const NuisanceFit& fit, CopulaFamily family,
                              std::span<const double> taus, Estimand est, double null_value,
                              double gamma_max = 10.0, double tol = 1e-3, double alpha = 0.05);

}  // namespace ordcausal
