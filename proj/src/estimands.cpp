#include "ordcausal/estimands.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "estimate_internal.hpp"
#include "ordcausal/errors.hpp"
#include "ordcausal/stats.hpp"

namespace ordcausal {

namespace {

// Interior margins extended with the implicit boundary values: out[0] = 0,
// out[k+1] = F(k) for k = 0..L-2, out[L] = 1. Validates monotonicity.
std::vector<double> extend_margins(std::span<const double> row) {
  std::vector<double> f(row.size() + 2);
  f[0] = 0.0;
  f[row.size() + 1] = 1.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    double v = row[k];
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      throw InconsistentMargins("margin value " + std::to_string(v) + " outside [0,1]");
    if (v < prev - 1e-12)
      throw InconsistentMargins("margins decrease at level " + std::to_string(k));
    v = std::clamp(v, 0.0, 1.0);
    v = std::max(v, prev);
    f[k + 1] = v;
    prev = v;
  }
  return f;
}

EstimateResult plugin_score_estimate(const Dataset& data, const NuisanceFit& fit,
                                     const CopulaSpec& spec, Estimand est, double alpha,
                                     EstimatorMode mode) {
  const std::size_t n = data.n;
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f1r = fit.f1.row(i);
    const auto f0r = fit.f0.row(i);
    const double m = m_value(est, cell_grid(f1r, f0r, spec));
    const DeltaCoeffs delta = delta_coeffs(est, f1r, f0r, spec);
    const bool treated = data.a[i] == 1;
    scores[i] = unit_plugin_score(m, 0.0, data.a[i], fit.e[i], data.y[i],
                                  treated ? delta.d1 : delta.d0, treated ? f1r : f0r);
  }
  return detail::finalize_scores(est, spec, mode, alpha, std::move(scores));
}

EstimateResult one_step_impl(const Dataset& data, const NuisanceFit& fit, const CopulaSpec& spec,
                             Estimand est, double alpha, EstimatorMode mode) {
  detail::check_fit_shape(data, fit);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  if (est == Estimand::Xi) {
    EstimateResult psi = plugin_score_estimate(data, fit, spec, Estimand::Psi, alpha, mode);
    const EstimateResult phi = plugin_score_estimate(data, fit, spec, Estimand::Phi, alpha, mode);
    return detail::combine_xi(std::move(psi), phi);
  }
  return plugin_score_estimate(data, fit, spec, est, alpha, mode);
}

std::vector<double> clip_monotone(const std::vector<double>& raw) {
  std::vector<double> out(raw.size());
  double running = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    running = std::max(running, std::clamp(raw[k], 0.0, 1.0));
    out[k] = running;
  }
  return out;
}

EstimateResult unconditional_dr_impl(const Dataset& data, const NuisanceFit& fit,
                                     const CopulaSpec& spec, Estimand est, double alpha,
                                     const DrMargins& raw) {
  const std::vector<double> f1 = clip_monotone(raw.f1);
  const std::vector<double> f0 = clip_monotone(raw.f0);
  const double m = m_value(est, cell_grid(f1, f0, spec));
  const DeltaCoeffs delta = delta_coeffs(est, f1, f0, spec);

  const std::size_t n = data.n;
  const int d = data.L - 1;
  EstimateResult r;
  r.estimand = est;
  r.copula = spec;
  r.mode = EstimatorMode::UnconditionalDR;
  r.alpha = alpha;
  r.point_raw = m;
  r.if_values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool treated = data.a[i] == 1;
    const double ipw = treated ? 1.0 / fit.e[i] : 1.0 / (1.0 - fit.e[i]);
    double v = 0.0;
    for (int k = 0; k < d; ++k) {
      const double ind = (data.y[i] <= k) ? 1.0 : 0.0;
      double d1k = fit.f1(i, k) - raw.f1[k];
      if (treated) d1k += ipw * (ind - fit.f1(i, k));
      double d0k = fit.f0(i, k) - raw.f0[k];
      if (!treated) d0k += ipw * (ind - fit.f0(i, k));
      v += delta.d1[k] * d1k + delta.d0[k] * d0k;
    }
    r.if_values[i] = v;
  }
  detail::finalize(r, 0.0, 1.0);
  return r;
}

}  // namespace

std::string estimand_name(Estimand est) {
  switch (est) {
    case Estimand::Psi: return "psi";
    case Estimand::Phi: return "phi";
    case Estimand::Xi: return "xi";
  }
  throw ConfigError("unknown estimand");
}

Estimand estimand_from_name(const std::string& name) {
  if (name == "psi") return Estimand::Psi;
  if (name == "phi") return Estimand::Phi;
  if (name == "xi") return Estimand::Xi;
  throw ConfigError("unknown estimand '" + name + "' (expected psi, phi, or xi)");
}

std::string mode_name(EstimatorMode mode) {
  switch (mode) {
    case EstimatorMode::OneStep: return "one_step";
    case EstimatorMode::CrossFit: return "cross_fit";
    case EstimatorMode::UnconditionalDR: return "unconditional_dr";
  }
  throw ConfigError("unknown estimator mode");
}

CellGrid cell_grid(std::span<const double> f1_row, std::span<const double> f0_row,
                   const CopulaSpec& spec) {
  if (f1_row.size() != f0_row.size()) throw InconsistentMargins("margin rows differ in length");
  const std::vector<double> f1 = extend_margins(f1_row);
  const std::vector<double> f0 = extend_margins(f0_row);
  const int L = static_cast<int>(f1_row.size()) + 1;

  Matrix table(L + 1, L + 1);
  for (int i = 0; i <= L; ++i) {
    for (int j = 0; j <= L; ++j) table(i, j) = cdf(spec, f1[i], f0[j]);
  }

  CellGrid grid;
  grid.L = L;
  grid.pi = Matrix(L, L);
  double total = 0.0;
  for (int k = 0; k < L; ++k) {
    for (int j = 0; j < L; ++j) {
      double p = table(k + 1, j + 1) - table(k, j + 1) - table(k + 1, j) + table(k, j);
      if (p < -1e-12)
        throw NumericFailure("copula rectangle increment is negative: " + std::to_string(p));
      p = std::max(p, 0.0);
      grid.pi(k, j) = p;
      total += p;
    }
  }
  if (std::fabs(total - 1.0) > 1e-8)
    throw NumericFailure("cell probabilities sum to " + std::to_string(total));
  for (double& p : grid.pi.data()) p /= total;
  return grid;
}

double m_value(Estimand est, const CellGrid& grid) {
  double below = 0.0, diag = 0.0;
  for (int k = 0; k < grid.L; ++k) {
    for (int j = 0; j < k; ++j) below += grid.pi(k, j);
    diag += grid.pi(k, k);
  }
  switch (est) {
    case Estimand::Psi: return below;
    case Estimand::Phi: return below + diag;
    case Estimand::Xi: return below + (below + diag) - 1.0;
  }
  throw ConfigError("unknown estimand");
}

DeltaCoeffs delta_coeffs(Estimand est, std::span<const double> f1_row,
                         std::span<const double> f0_row, const CopulaSpec& spec) {
  if (!is_differentiable(spec.family))
    throw UnsupportedCopula("margin derivatives require a differentiable copula family");
  if (est == Estimand::Xi) {
    DeltaCoeffs psi = delta_coeffs(Estimand::Psi, f1_row, f0_row, spec);
    const DeltaCoeffs phi = delta_coeffs(Estimand::Phi, f1_row, f0_row, spec);
    for (std::size_t k = 0; k < psi.d1.size(); ++k) {
      psi.d1[k] += phi.d1[k];
      psi.d0[k] += phi.d0[k];
    }
    return psi;
  }

  const std::vector<double> f1 = extend_margins(f1_row);
  const std::vector<double> f0 = extend_margins(f0_row);
  const int d = static_cast<int>(f1_row.size());
  DeltaCoeffs out;
  out.d1.resize(d);
  out.d0.resize(d);
  // index shift: f[k+1] holds F(k), so F(k-1) = f[k] and F(k+1) = f[k+2]
  for (int k = 0; k < d; ++k) {
    if (est == Estimand::Psi) {
      out.d1[k] = partial_u(spec, f1[k + 1], f0[k]) - partial_u(spec, f1[k + 1], f0[k + 1]);
      out.d0[k] = partial_v(spec, f1[k + 2], f0[k + 1]) - partial_v(spec, f1[k + 1], f0[k + 1]);
    } else {
      out.d1[k] = partial_u(spec, f1[k + 1], f0[k + 1]) - partial_u(spec, f1[k + 1], f0[k + 2]);
      out.d0[k] = partial_v(spec, f1[k + 1], f0[k + 1]) - partial_v(spec, f1[k], f0[k + 1]);
    }
  }
  return out;
}

double unit_plugin_score(double m, double h, int a, double e, int y,
                         std::span<const double> w_obs, std::span<const double> p_obs) {
  const double ipw = (a == 1) ? 1.0 / e : 1.0 / (1.0 - e);
  double resid = 0.0;
  for (std::size_t k = 0; k < w_obs.size(); ++k) {
    const double ind = (y <= static_cast<int>(k)) ? 1.0 : 0.0;
    resid += w_obs[k] * (ind - p_obs[k]);
  }
  return m + h * (a - e) + ipw * resid;
}

EstimateResult one_step(const Dataset& data, const NuisanceFit& fit, const CopulaSpec& spec,
                        Estimand est, double alpha) {
  return one_step_impl(data, fit, spec, est, alpha, EstimatorMode::OneStep);
}

EstimateResult cross_fit(const Dataset& data, const NuisanceFit& out_of_fold_fit,
                         const CopulaSpec& spec, Estimand est, double alpha) {
  return one_step_impl(data, out_of_fold_fit, spec, est, alpha, EstimatorMode::CrossFit);
}

EstimateResult cross_fit(const Dataset& data, const PropensityModel& propensity,
                         const OutcomeModel& outcome, int K, std::uint64_t seed,
                         const CopulaSpec& spec, Estimand est, double alpha, double trim,
                         double eps_f) {
  const CrossFitResult cf = fit_crossfit(data, propensity, outcome, K, seed, trim, eps_f);
  return one_step_impl(data, cf.fit, spec, est, alpha, EstimatorMode::CrossFit);
}

DrMargins dr_margins(const Dataset& data, const NuisanceFit& fit) {
  detail::check_fit_shape(data, fit);
  const int d = data.L - 1;
  DrMargins out;
  out.f1.assign(d, 0.0);
  out.f0.assign(d, 0.0);
  for (std::size_t i = 0; i < data.n; ++i) {
    const bool treated = data.a[i] == 1;
    const double ipw = treated ? 1.0 / fit.e[i] : 1.0 / (1.0 - fit.e[i]);
    for (int k = 0; k < d; ++k) {
      const double ind = (data.y[i] <= k) ? 1.0 : 0.0;
      out.f1[k] += fit.f1(i, k) + (treated ? ipw * (ind - fit.f1(i, k)) : 0.0);
      out.f0[k] += fit.f0(i, k) + (!treated ? ipw * (ind - fit.f0(i, k)) : 0.0);
    }
  }
  for (double& v : out.f1) v /= static_cast<double>(data.n);
  for (double& v : out.f0) v /= static_cast<double>(data.n);
  return out;
}

EstimateResult unconditional_dr(const Dataset& data, const NuisanceFit& fit,
                                const CopulaSpec& spec, Estimand est, double alpha) {
  detail::check_fit_shape(data, fit);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  const DrMargins raw = dr_margins(data, fit);
  if (est == Estimand::Xi) {
    EstimateResult psi = unconditional_dr_impl(data, fit, spec, Estimand::Psi, alpha, raw);
    const EstimateResult phi = unconditional_dr_impl(data, fit, spec, Estimand::Phi, alpha, raw);
    return detail::combine_xi(std::move(psi), phi);
  }
  return unconditional_dr_impl(data, fit, spec, est, alpha, raw);
}

Interval frechet_envelope(const Dataset& data, const NuisanceFit& fit, Estimand est) {
  detail::check_fit_shape(data, fit);
  if (est == Estimand::Xi) {
    const Interval psi = frechet_envelope(data, fit, Estimand::Psi);
    const Interval phi = frechet_envelope(data, fit, Estimand::Phi);
    return {psi.lower + phi.lower - 1.0, psi.upper + phi.upper - 1.0};
  }

  const CopulaSpec upper_copula{CopulaFamily::FrechetUpper, 0.0};
  const CopulaSpec lower_copula{CopulaFamily::FrechetLower, 0.0};
  double at_m = 0.0, at_w = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    at_m += m_value(est, cell_grid(fit.f1.row(i), fit.f0.row(i), upper_copula));
    at_w += m_value(est, cell_grid(fit.f1.row(i), fit.f0.row(i), lower_copula));
  }
  at_m /= static_cast<double>(data.n);
  at_w /= static_cast<double>(data.n);
  // among copulas, the upper bound minimizes pr{Y(1) > Y(0)} and maximizes
  // pr{Y(1) >= Y(0)}; couplings off the copula grid can go further
  return (est == Estimand::Psi) ? Interval{at_m, at_w} : Interval{at_w, at_m};
}

namespace {

// Sharp coupling limits of pr{Y(1) > Y(0)} for one unit's interior cumulative
// margins: lower from the covering {Y1 > Y0} => exists k with Y1 > k >= Y0
// failing, upper from {Y1 > Y0} subset {Y1 > k} union {Y0 <= k-1}, both
// attained by explicit couplings.
std::pair<double, double> psi_coupling_limits(std::span<const double> f1,
                                              std::span<const double> f0) {
  const int d = static_cast<int>(f1.size());
  double lo = 0.0;
  for (int k = 0; k < d; ++k) lo = std::max(lo, f0[k] - f1[k]);
  double gap = std::max(f1[0], 1.0 - f0[d - 1]);
  for (int k = 1; k < d; ++k) gap = std::max(gap, f1[k] - f0[k - 1]);
  return {lo, 1.0 - gap};
}

}  // namespace

Interval coupling_bounds(const Dataset& data, const NuisanceFit& fit, Estimand est) {
  detail::check_fit_shape(data, fit);
  if (est == Estimand::Xi) {
    const Interval psi = coupling_bounds(data, fit, Estimand::Psi);
    const Interval phi = coupling_bounds(data, fit, Estimand::Phi);
    return {psi.lower + phi.lower - 1.0, psi.upper + phi.upper - 1.0};
  }
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    if (est == Estimand::Psi) {
      const auto [l, u] = psi_coupling_limits(fit.f1.row(i), fit.f0.row(i));
      lo += l;
      hi += u;
    } else {
      // pr{Y(1) >= Y(0)} = 1 - pr{Y(0) > Y(1)}: swap arms and complement
      const auto [l, u] = psi_coupling_limits(fit.f0.row(i), fit.f1.row(i));
      lo += 1.0 - u;
      hi += 1.0 - l;
    }
  }
  return {lo / static_cast<double>(data.n), hi / static_cast<double>(data.n)};
}

}  // namespace ordcausal
