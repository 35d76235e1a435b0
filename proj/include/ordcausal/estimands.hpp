#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ordcausal/copula.hpp"
#include "ordcausal/dataset.hpp"
#include "ordcausal/matrix.hpp"
#include "ordcausal/nuisance.hpp"

namespace ordcausal {

// Psi: pr{Y(1) > Y(0)}; Phi: pr{Y(1) >= Y(0)}; Xi: Psi + Phi - 1.
enum class Estimand { Psi, Phi, Xi };

enum class EstimatorMode { OneStep, CrossFit, UnconditionalDR };

std::string estimand_name(Estimand est);
Estimand estimand_from_name(const std::string& name);
std::string mode_name(EstimatorMode mode);

struct EstimateResult {
  Estimand estimand = Estimand::Psi;
  CopulaSpec copula;
  EstimatorMode mode = EstimatorMode::OneStep;
  double point = 0.0;      // point_raw clipped to the estimand's logical range
  double point_raw = 0.0;  // uncorrected value; the CI is centered here
  double se = 0.0;
  double alpha = 0.05;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> if_values;  // centered per-unit influence contributions
};

// Joint cell probabilities pi(k, j) = pr{Y(1)=k, Y(0)=j | x} for one unit,
// obtained by rectangle increments of the copula over the margin grid.
struct CellGrid {
  int L = 0;
  Matrix pi;  // L x L; rows index the treated level k, columns the control level j
};

// Margins are the L-1 interior cumulative probabilities (boundaries 0 and 1
// appended internally). Cells are floored at zero and the grid renormalized;
// negative cells or totals off by more than 1e-8 raise NumericFailure, and
// rows non-monotone beyond 1e-12 raise InconsistentMargins.
CellGrid cell_grid(std::span<const double> f1_row, std::span<const double> f0_row,
                   const CopulaSpec& spec);

// Lower-triangle sum (Psi), triangle-plus-diagonal sum (Phi), or their
// combination minus one (Xi).
double m_value(Estimand est, const CellGrid& grid);

// Partial derivatives of the per-unit functional with respect to each interior
// margin value. d1[k] = dm/dF1(k), d0[k] = dm/dF0(k), k = 0..L-2. Throws
// UnsupportedCopula for the Frechet bounds (not differentiable).
struct DeltaCoeffs {
  std::vector<double> d1;
  std::vector<double> d0;
};

DeltaCoeffs delta_coeffs(Estimand est, std::span<const double> f1_row,
                         std::span<const double> f0_row, const CopulaSpec& spec);

// One unit's plug-in score: m + h (a - e) + ipw * sum_k w[k] {1(y<=k) - p[k]},
// where ipw = 1/e for a=1 and 1/(1-e) for a=0, and w/p are the observed arm's
// coefficient and margin rows. Shared by the one-step estimator and the
// sensitivity endpoint scores so the endpoints reproduce the one-step values
// bit for bit when the bias bound is trivial.
double unit_plugin_score(double m, double h, int a, double e, int y,
                         std::span<const double> w_obs, std::span<const double> p_obs);

// Efficient one-step estimator: the empirical mean of per-unit plug-in scores,
// with a normal-quantile CI from the influence-function variance (se =
// sqrt(Var_n(if)/n)). Xi results are formed by combining the Psi and Phi
// scores per unit, so xi = psi + phi - 1 holds exactly.
EstimateResult one_step(const Dataset& data, const NuisanceFit& fit, const CopulaSpec& spec,
                        Estimand est, double alpha = 0.05);

// Cross-fitted variant: nuisances are evaluated out-of-fold, the score form
// and variance are unchanged. The overload taking models performs the fold
// fitting internally.
EstimateResult cross_fit(const Dataset& data, const NuisanceFit& out_of_fold_fit,
                         const CopulaSpec& spec, Estimand est, double alpha = 0.05);

EstimateResult cross_fit(const Dataset& data, const PropensityModel& propensity,
                         const OutcomeModel& outcome, int K, std::uint64_t seed,
                         const CopulaSpec& spec, Estimand est, double alpha = 0.05,
                         double trim = kDefaultTrim, double eps_f = kDefaultMarginEps);

// Doubly robust marginal cumulative probabilities (AIPW form), k = 0..L-2,
// before any clipping or monotonization.
struct DrMargins {
  std::vector<double> f1;
  std::vector<double> f0;
};

DrMargins dr_margins(const Dataset& data, const NuisanceFit& fit);

// Estimator that applies the copula to marginal (unconditional) cumulative
// probabilities: the AIPW margins are clipped to [0,1] and monotonized, then
// plugged into the copula functional; the variance comes from the chain-rule
// influence function with the raw margins as centering constants.
EstimateResult unconditional_dr(const Dataset& data, const NuisanceFit& fit,
                                const CopulaSpec& spec, Estimand est, double alpha = 0.05);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Plug-in functional evaluated under the two Frechet bound copulas, averaged
// over units (no influence correction; a reference band, not a CI). The bound
// copulas cap every copula pointwise, but the estimand is not monotone in
// that order for ordinal margins, so this band need not contain the plug-in
// at intermediate dependence (curves exit it under negative tau). The band
// that does contain every curve point is coupling_bounds.
Interval frechet_envelope(const Dataset& data, const NuisanceFit& fit, Estimand est);

// Attainable range of the estimand over all joint couplings of the fitted
// margins, letting the coupling vary freely with the unit. Per unit the sharp
// limits have closed forms: with F(-1) = 0 and F(L-1) = 1,
//   min pr{Y(1) > Y(0)} = max(0, max_k {F0(k) - F1(k)})
//   max pr{Y(1) > Y(0)} = 1 - max_k {F1(k) - F0(k-1)}
// and symmetrically for pr{Y(1) >= Y(0)} with the arms swapped. The Xi
// interval combines the Psi and Phi limits and is an outer bound: one coupling
// cannot in general extremize both at once.
Interval coupling_bounds(const Dataset& data, const NuisanceFit& fit, Estimand est);

}  // namespace ordcausal
