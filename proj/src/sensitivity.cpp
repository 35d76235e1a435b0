#include "ordcausal/sensitivity.hpp"

#include <cmath>
#include <utility>

#include "estimate_internal.hpp"
#include "ordcausal/errors.hpp"

namespace ordcausal {

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 1.0) || !std::isfinite(gamma))
    throw InvalidGamma("confounding bound must be a finite value >= 1, got " +
                       std::to_string(gamma));
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ConfigError("probability argument " + std::to_string(p) + " outside [0,1]");
}

void check_endpoint_spec(const CopulaSpec& spec) {
  if (!is_differentiable(spec.family))
    throw UnsupportedCopula("confounding bounds require a differentiable copula family");
}

// Per-unit transform values feeding the endpoint scores. ge* hold the
// propensity sensitivities of the margin brackets, gp* the margin
// sensitivities; *_lo rows use the lower bounding transform, *_hi the upper.
// At gamma = 1 the brackets collapse onto the fitted margins exactly and the
// sensitivities are the exact constants 0 and 1, so downstream arithmetic
// reproduces the plain one-step score bit for bit.
struct UnitTransforms {
  std::vector<double> f1_lo, f1_hi, f0_lo, f0_hi;
  std::vector<double> ge1_lo, ge1_hi, ge0_lo, ge0_hi;
  std::vector<double> gp1_lo, gp1_hi, gp0_lo, gp0_hi;

  explicit UnitTransforms(int d)
      : f1_lo(d), f1_hi(d), f0_lo(d), f0_hi(d), ge1_lo(d), ge1_hi(d), ge0_lo(d), ge0_hi(d),
        gp1_lo(d), gp1_hi(d), gp0_lo(d), gp0_hi(d) {}

  void fill(double e, std::span<const double> p1, std::span<const double> p0, double gamma) {
    for (std::size_t k = 0; k < p1.size(); ++k) {
      if (gamma == 1.0) {
        f1_lo[k] = f1_hi[k] = p1[k];
        f0_lo[k] = f0_hi[k] = p0[k];
        ge1_lo[k] = ge1_hi[k] = ge0_lo[k] = ge0_hi[k] = 0.0;
        gp1_lo[k] = gp1_hi[k] = gp0_lo[k] = gp0_hi[k] = 1.0;
        continue;
      }
      const TransformPair r1 = r_gamma(p1[k], gamma);
      const TransformPair r0 = r_gamma(p0[k], gamma);
      const TransformPair s1 = r_gamma_deriv(p1[k], gamma);
      const TransformPair s0 = r_gamma_deriv(p0[k], gamma);
      f1_lo[k] = e * p1[k] + (1.0 - e) * r1.lower;
      f1_hi[k] = e * p1[k] + (1.0 - e) * r1.upper;
      f0_lo[k] = (1.0 - e) * p0[k] + e * r0.lower;
      f0_hi[k] = (1.0 - e) * p0[k] + e * r0.upper;
      ge1_lo[k] = p1[k] - r1.lower;
      ge1_hi[k] = p1[k] - r1.upper;
      ge0_lo[k] = r0.lower - p0[k];
      ge0_hi[k] = r0.upper - p0[k];
      gp1_lo[k] = e + (1.0 - e) * s1.lower;
      gp1_hi[k] = e + (1.0 - e) * s1.upper;
      gp0_lo[k] = (1.0 - e) + e * s0.lower;
      gp0_hi[k] = (1.0 - e) + e * s0.upper;
    }
  }
};

// Score of one endpoint for one unit: the plug-in endpoint value, the
// propensity augmentation summed over levels, and the margin residual with
// chain-rule coefficients, all through the shared score form.
double endpoint_score(Estimand est, const CopulaSpec& spec, int a, double e, int y,
                      std::span<const double> p1, std::span<const double> p0,
                      std::span<const double> b1, std::span<const double> b0,
                      std::span<const double> ge1, std::span<const double> ge0,
                      std::span<const double> gp1, std::span<const double> gp0,
                      std::vector<double>& w) {
  const double m = m_value(est, cell_grid(b1, b0, spec));
  const DeltaCoeffs delta = delta_coeffs(est, b1, b0, spec);
  double h = 0.0;
  for (std::size_t k = 0; k < delta.d1.size(); ++k)
    h += delta.d1[k] * ge1[k] + delta.d0[k] * ge0[k];
  const bool treated = a == 1;
  const auto& d_obs = treated ? delta.d1 : delta.d0;
  const auto& g_obs = treated ? gp1 : gp0;
  for (std::size_t k = 0; k < d_obs.size(); ++k) w[k] = d_obs[k] * g_obs[k];
  return unit_plugin_score(m, h, a, e, y, w, treated ? p1 : p0);
}

GammaBoundResult endpoint_impl(const Dataset& data, const NuisanceFit& fit, const CopulaSpec& spec,
                               double gamma, Estimand est, double alpha) {
  if (est == Estimand::Xi) {
    GammaBoundResult psi = endpoint_impl(data, fit, spec, gamma, Estimand::Psi, alpha);
    const GammaBoundResult phi = endpoint_impl(data, fit, spec, gamma, Estimand::Phi, alpha);
    psi.lower = detail::combine_xi(std::move(psi.lower), phi.lower);
    psi.upper = detail::combine_xi(std::move(psi.upper), phi.upper);
    return psi;
  }

  const std::size_t n = data.n;
  const int d = data.L - 1;
  std::vector<double> lower_scores(n), upper_scores(n);
  UnitTransforms t(d);
  std::vector<double> w(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = fit.e[i];
    const auto p1 = fit.f1.row(i);
    const auto p0 = fit.f0.row(i);
    t.fill(e, p1, p0, gamma);
    // lower endpoint: upper arm-1 bracket with lower arm-0 bracket
    lower_scores[i] = endpoint_score(est, spec, data.a[i], e, data.y[i], p1, p0, t.f1_hi,
                                     t.f0_lo, t.ge1_hi, t.ge0_lo, t.gp1_hi, t.gp0_lo, w);
    upper_scores[i] = endpoint_score(est, spec, data.a[i], e, data.y[i], p1, p0, t.f1_lo,
                                     t.f0_hi, t.ge1_lo, t.ge0_hi, t.gp1_lo, t.gp0_hi, w);
  }

  GammaBoundResult out;
  out.gamma = gamma;
  out.tau = rho_to_tau(spec.family, spec.rho);
  out.lower =
      detail::finalize_scores(est, spec, EstimatorMode::OneStep, alpha, std::move(lower_scores));
  out.upper =
      detail::finalize_scores(est, spec, EstimatorMode::OneStep, alpha, std::move(upper_scores));
  return out;
}

}  // namespace

TransformPair r_gamma(double p, double gamma) {
  check_gamma(gamma);
  check_probability(p);
  if (gamma == 1.0) return {p, p};
  return {p / (p + gamma * (1.0 - p)), gamma * p / (gamma * p + 1.0 - p)};
}

TransformPair r_gamma_deriv(double p, double gamma) {
  check_gamma(gamma);
  check_probability(p);
  if (gamma == 1.0) return {1.0, 1.0};
  const double dm = gamma - (gamma - 1.0) * p;
  const double dp = 1.0 + (gamma - 1.0) * p;
  return {gamma / (dm * dm), gamma / (dp * dp)};
}

MarginBounds margin_bounds(const NuisanceFit& fit, double gamma) {
  check_gamma(gamma);
  MarginBounds out{fit.f1, fit.f1, fit.f0, fit.f0};
  if (gamma == 1.0) return out;
  for (std::size_t i = 0; i < fit.f1.rows(); ++i) {
    const double e = fit.e[i];
    for (std::size_t k = 0; k < fit.f1.cols(); ++k) {
      const TransformPair r1 = r_gamma(fit.f1(i, k), gamma);
      const TransformPair r0 = r_gamma(fit.f0(i, k), gamma);
      out.f1_lower(i, k) = e * fit.f1(i, k) + (1.0 - e) * r1.lower;
      out.f1_upper(i, k) = e * fit.f1(i, k) + (1.0 - e) * r1.upper;
      out.f0_lower(i, k) = (1.0 - e) * fit.f0(i, k) + e * r0.lower;
      out.f0_upper(i, k) = (1.0 - e) * fit.f0(i, k) + e * r0.upper;
    }
  }
  return out;
}

Interval endpoint_m(Estimand est, std::span<const double> f1_lower,
                    std::span<const double> f1_upper, std::span<const double> f0_lower,
                    std::span<const double> f0_upper, const CopulaSpec& spec) {
  check_endpoint_spec(spec);
  if (est == Estimand::Xi) {
    const Interval psi = endpoint_m(Estimand::Psi, f1_lower, f1_upper, f0_lower, f0_upper, spec);
    const Interval phi = endpoint_m(Estimand::Phi, f1_lower, f1_upper, f0_lower, f0_upper, spec);
    return {psi.lower + phi.lower - 1.0, psi.upper + phi.upper - 1.0};
  }
  return {m_value(est, cell_grid(f1_upper, f0_lower, spec)),
          m_value(est, cell_grid(f1_lower, f0_upper, spec))};
}

GammaBoundResult endpoint_one_step(const Dataset& data, const NuisanceFit& fit,
                                   const CopulaSpec& spec, double gamma, Estimand est,
                                   double alpha) {
  detail::check_fit_shape(data, fit);
  check_gamma(gamma);
  check_endpoint_spec(spec);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  return endpoint_impl(data, fit, spec, gamma, est, alpha);
}

TauGrid make_tau_grid(CopulaFamily family, std::span<const double> taus) {
  if (taus.empty()) throw ConfigError("tau grid is empty");
  TauGrid grid;
  grid.family = family;
  grid.taus.assign(taus.begin(), taus.end());
  for (std::size_t i = 0; i < grid.taus.size(); ++i) {
    if (i > 0 && !(grid.taus[i] > grid.taus[i - 1]))
      throw ConfigError("tau grid must be strictly increasing");
    tau_to_rho(family, grid.taus[i]);  // representability check
  }
  return grid;
}

SensitivityCurve tau_curve(const Dataset& data, const NuisanceFit& fit, CopulaFamily family,
                           std::span<const double> taus, Estimand est, double alpha,
                           EstimatorMode mode) {
  detail::check_fit_shape(data, fit);
  if (taus.empty()) throw ConfigError("tau grid is empty");
  for (std::size_t i = 1; i < taus.size(); ++i) {
    if (!(taus[i] > taus[i - 1])) throw ConfigError("tau grid must be strictly increasing");
  }

  SensitivityCurve curve;
  curve.grid.family = family;
  // Attach the sharp coupling bounds: every copula induces a per-unit coupling
  // of the fitted margins, so each curve point lies inside this band.  The
  // bound-copula plug-ins (frechet_envelope) do not have that property for
  // ordinal outcomes; curve points can exit them under negative dependence.
  curve.envelope = coupling_bounds(data, fit, est);
  for (const double tau : taus) {
    CopulaSpec spec;
    try {
      spec = spec_from_tau(family, tau);
    } catch (const UnsupportedTau& err) {
      curve.skipped.push_back({tau, err.what()});
      continue;
    }
    EstimateResult est_result;
    switch (mode) {
      case EstimatorMode::OneStep: est_result = one_step(data, fit, spec, est, alpha); break;
      case EstimatorMode::CrossFit: est_result = cross_fit(data, fit, spec, est, alpha); break;
      case EstimatorMode::UnconditionalDR:
        est_result = unconditional_dr(data, fit, spec, est, alpha);
        break;
    }
    curve.grid.taus.push_back(tau);
    curve.estimates.push_back(std::move(est_result));
  }
  return curve;
}

BreakevenResult breakeven_gamma(const Dataset& data, const NuisanceFit& fit,
                                const CopulaSpec& spec, Estimand est, double null_value,
                                double gamma_max, double tol, double alpha) {
  check_gamma(gamma_max);
  if (!(tol > 0.0)) throw ConfigError("bisection tolerance must be positive");
  const auto excludes = [&](double gamma) {
    const GammaBoundResult b = endpoint_one_step(data, fit, spec, gamma, est, alpha);
    return null_value < b.lower.ci_low || null_value > b.upper.ci_high;
  };
  if (!excludes(1.0)) return {1.0, BreakevenFlag::NotIdentifiedAtOne};
  if (excludes(gamma_max)) return {gamma_max, BreakevenFlag::ExceedsMax};
  double lo = 1.0, hi = gamma_max;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (excludes(mid) ? lo : hi) = mid;
  }
  return {lo, BreakevenFlag::Ok};
}

BreakevenResult min_breakeven(const Dataset& data, const NuisanceFit& fit, CopulaFamily family,
                              std::span<const double> taus, Estimand est, double null_value,
                              double gamma_max, double tol, double alpha) {
  const TauGrid grid = make_tau_grid(family, taus);
  BreakevenResult best;
  bool first = true;
  for (const double tau : grid.taus) {
    const BreakevenResult r = breakeven_gamma(data, fit, spec_from_tau(family, tau), est,
                                              null_value, gamma_max, tol, alpha);
    if (first || r.gamma_star < best.gamma_star) {
      best = r;
      first = false;
    }
  }
  return best;
}

}  // namespace ordcausal
