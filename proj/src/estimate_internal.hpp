#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ordcausal/dataset.hpp"
#include "ordcausal/errors.hpp"
#include "ordcausal/estimands.hpp"
#include "ordcausal/nuisance.hpp"
#include "ordcausal/stats.hpp"

// Helpers shared by the point estimators and the confounding-bound endpoint
// estimators. The endpoint scores must flow through the identical finalization
// path so that the bounds reproduce the plain estimate bit for bit when the
// bias bound is trivial.

namespace ordcausal::detail {

inline void check_fit_shape(const Dataset& data, const NuisanceFit& fit) {
  const auto cols = static_cast<std::size_t>(data.L - 1);
  if (fit.e.size() != data.n || fit.f1.rows() != data.n || fit.f0.rows() != data.n ||
      fit.f1.cols() != cols || fit.f0.cols() != cols)
    throw ConfigError("nuisance fit shape does not match the dataset");
}

inline void finalize(EstimateResult& r, double lo, double hi) {
  const double z = norm_quantile(1.0 - r.alpha / 2.0);
  const std::size_t n = r.if_values.size();
  r.se = std::sqrt(pop_variance(r.if_values) / static_cast<double>(n));
  r.ci_low = r.point_raw - z * r.se;
  r.ci_high = r.point_raw + z * r.se;
  r.point = std::clamp(r.point_raw, lo, hi);
}

inline EstimateResult finalize_scores(Estimand est, const CopulaSpec& spec, EstimatorMode mode,
                                      double alpha, std::vector<double> scores) {
  EstimateResult r;
  r.estimand = est;
  r.copula = spec;
  r.mode = mode;
  r.alpha = alpha;
  r.point_raw = mean(scores);
  r.if_values = std::move(scores);
  for (double& v : r.if_values) v -= r.point_raw;
  finalize(r, 0.0, 1.0);
  return r;
}

inline EstimateResult combine_xi(EstimateResult psi, const EstimateResult& phi) {
  EstimateResult r = std::move(psi);
  r.estimand = Estimand::Xi;
  r.point_raw = r.point_raw + phi.point_raw - 1.0;
  for (std::size_t i = 0; i < r.if_values.size(); ++i) r.if_values[i] += phi.if_values[i];
  finalize(r, -1.0, 1.0);
  return r;
}

}  // namespace ordcausal::detail
