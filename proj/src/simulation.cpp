#include "ordcausal/simulation.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ordcausal/errors.hpp"
#include "ordcausal/parallel.hpp"
#include "ordcausal/stats.hpp"

namespace ordcausal {
namespace {

// Tags separating the Monte Carlo truth stream from generate's, and fold
// seeds from replication seeds.
constexpr std::uint64_t kTruthStreamTag = 0x5452555448ULL;

double dot_with_intercept(std::span<const double> beta, std::span<const double> x) {
  double s = beta[0];
  for (std::size_t j = 0; j + 1 < beta.size(); ++j) s += beta[j + 1] * x[j];
  return s;
}

int threshold_level(const DgpSpec& spec, double u, double eta) {
  for (int k = 0; k + 1 < spec.L; ++k) {
    if (u <= expit(spec.thresholds[k] - eta)) return k;
  }
  return spec.L - 1;
}

CopulaSpec unit_spec(const DgpSpec& spec, std::span<const double> x) {
  if (!spec.tau_fn) return spec.copula;
  return spec_from_tau(spec.copula.family, spec.tau_fn(x));
}

double truth_for(const TruthResult& t, Estimand est) {
  switch (est) {
    case Estimand::Psi: return t.psi;
    case Estimand::Phi: return t.phi;
    default: return t.xi;
  }
}

std::unique_ptr<PropensityModel> make_propensity(const EstimatorConfig& cfg) {
  if (cfg.propensity) return cfg.propensity->clone();
  return std::make_unique<LogisticPropensity>();
}

std::unique_ptr<OutcomeModel> make_outcome(const EstimatorConfig& cfg) {
  if (cfg.outcome) return cfg.outcome->clone();
  return std::make_unique<ProportionalOddsOutcome>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void validate(const DgpSpec& spec) {
  if (spec.n == 0) throw ConfigError("DgpSpec: n must be positive");
  if (spec.L < 2) throw ConfigError("DgpSpec: L must be at least 2");
  if (spec.beta1.empty() || spec.beta2.empty())
    throw ConfigError("DgpSpec: beta1/beta2 need at least an intercept entry");
  if (spec.beta1.size() != spec.beta2.size())
    throw ConfigError("DgpSpec: beta1 and beta2 must cover the same covariates");
  if (spec.thresholds.size() != static_cast<std::size_t>(spec.L - 1))
    throw ConfigError("DgpSpec: need exactly L-1 thresholds");
  for (std::size_t k = 0; k < spec.thresholds.size(); ++k) {
    if (!std::isfinite(spec.thresholds[k]))
      throw ConfigError("DgpSpec: thresholds must be finite");
    if (k > 0 && !(spec.thresholds[k - 1] < spec.thresholds[k]))
      throw ConfigError("DgpSpec: thresholds must be strictly increasing");
  }
  if (!std::isfinite(spec.delta)) throw ConfigError("DgpSpec: delta must be finite");
  for (double b : spec.beta1)
    if (!std::isfinite(b)) throw ConfigError("DgpSpec: beta1 must be finite");
  for (double b : spec.beta2)
    if (!std::isfinite(b)) throw ConfigError("DgpSpec: beta2 must be finite");
  if (!spec.tau_fn) cdf(spec.copula, 0.5, 0.5);  // parameter-domain probe
}

DgpSpec make_reference_dgp() {
  DgpSpec spec;
  spec.n = 1000;
  spec.L = 5;
  spec.beta1 = {0.5, -0.2, 0.2, -0.2};
  spec.beta2 = {0.6, 0.15, 0.15, 0.15};
  spec.delta = 0.4;
  spec.thresholds = {logit(0.2), logit(0.4), logit(0.6), logit(0.8)};
  spec.copula = {CopulaFamily::Gumbel, 2.0};
  return spec;
}

double dgp_propensity(const DgpSpec& spec, std::span<const double> x) {
  return expit(dot_with_intercept(spec.beta1, x));
}

double dgp_margin(const DgpSpec& spec, int arm, int k, std::span<const double> x) {
  const double eta = dot_with_intercept(spec.beta2, x) + spec.delta * arm;
  return expit(spec.thresholds[k] - eta);
}

std::pair<double, double> sample_copula_pair(const CopulaSpec& spec, Rng& rng) {
  const double u = rng.u01();
  const double w = rng.u01();
  switch (spec.family) {
    case CopulaFamily::Independence: return {u, w};
    case CopulaFamily::FrechetUpper: return {u, u};
    case CopulaFamily::FrechetLower: return {u, 1.0 - u};
    default: break;
  }
  // dC/du(u, .) is the conditional CDF of V given U = u; invert at w.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (partial_u(spec, u, mid) < w ? lo : hi) = mid;
  }
  return {u, 0.5 * (lo + hi)};
}

GeneratedData generate(const DgpSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  const std::size_t p = spec.beta1.size() - 1;
  std::vector<int> y(spec.n), a(spec.n), y1(spec.n), y0(spec.n);
  Matrix x(spec.n, p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.uniform(-1.0, 1.0);
    const auto xi = x.row(i);
    a[i] = rng.bernoulli(dgp_propensity(spec, xi)) ? 1 : 0;
    const auto [u1, u0] = sample_copula_pair(unit_spec(spec, xi), rng);
    const double eta0 = dot_with_intercept(spec.beta2, xi);
    y1[i] = threshold_level(spec, u1, eta0 + spec.delta);
    y0[i] = threshold_level(spec, u0, eta0);
    y[i] = a[i] == 1 ? y1[i] : y0[i];
  }
  GeneratedData out;
  out.data = Dataset::create(std::move(y), std::move(a), std::move(x), spec.L);
  out.y1 = std::move(y1);
  out.y0 = std::move(y0);
  return out;
}

TruthResult truth(const DgpSpec& spec, std::size_t n_draws) {
  validate(spec);
  if (n_draws == 0) throw ConfigError("truth: n_draws must be positive");
  const std::uint64_t base = derive_seed(spec.seed, kTruthStreamTag);
  const std::size_t p = spec.beta1.size() - 1;

  // Integer counts per fixed-size chunk with per-chunk derived seeds: the
  // reduction is exact, so the result is identical for any thread count.
  constexpr std::size_t kChunk = 16384;
  const std::size_t n_chunks = (n_draws + kChunk - 1) / kChunk;
  struct Counts {
    std::uint64_t gt = 0;
    std::uint64_t ge = 0;
  };
  std::vector<Counts> slots(n_chunks);
  parallel_for(n_chunks, 0, [&](std::size_t c) {
    Rng rng(derive_seed(base, c));
    std::vector<double> x(p);
    const std::size_t m = std::min(kChunk, n_draws - c * kChunk);
    Counts local;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < p; ++j) x[j] = rng.uniform(-1.0, 1.0);
      const auto [u1, u0] = sample_copula_pair(unit_spec(spec, x), rng);
      const double eta0 = dot_with_intercept(spec.beta2, x);
      const int y1 = threshold_level(spec, u1, eta0 + spec.delta);
      const int y0 = threshold_level(spec, u0, eta0);
      local.gt += y1 > y0;
      local.ge += y1 >= y0;
    }
    slots[c] = local;
  });

  std::uint64_t gt = 0, ge = 0;
  for (const Counts& s : slots) {
    gt += s.gt;
    ge += s.ge;
  }

  TruthResult out;
  out.n_draws = n_draws;
  const double nd = static_cast<double>(n_draws);
  out.psi = static_cast<double>(gt) / nd;
  out.phi = static_cast<double>(ge) / nd;
  out.xi = out.psi + out.phi - 1.0;
  out.se_psi = std::sqrt(out.psi * (1.0 - out.psi) / nd);
  out.se_phi = std::sqrt(out.phi * (1.0 - out.phi) / nd);
  // Per-draw xi score is 1(y1>y0) - 1(y1<y0) with variance psi + (1-phi) - xi^2.
  const double var_xi = std::max(0.0, out.psi + (1.0 - out.phi) - out.xi * out.xi);
  out.se_xi = std::sqrt(var_xi / nd);
  return out;
}

StudyTable run_study(const DgpSpec& spec, std::span<const EstimatorConfig> estimators,
                     int n_reps, double alpha, int n_threads, std::size_t truth_draws,
                     std::span<const std::uint64_t> rep_seeds) {
  validate(spec);
  if (estimators.empty()) throw ConfigError("run_study: no estimators given");
  if (n_reps < 2) throw ConfigError("run_study: n_reps must be at least 2");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ConfigError("run_study: alpha outside (0, 0.5)");
  if (!rep_seeds.empty() && rep_seeds.size() != static_cast<std::size_t>(n_reps))
    throw ConfigError("run_study: rep_seeds size must equal n_reps");
  for (const EstimatorConfig& cfg : estimators) {
    if (cfg.mode == EstimatorMode::CrossFit && cfg.folds < 2)
      throw ConfigError("run_study: cross-fit estimator '" + cfg.label +
                        "' needs at least 2 folds");
  }

  StudyTable table;
  table.truth = truth(spec, truth_draws);
  table.n = spec.n;
  table.n_reps = n_reps;

  struct RepOutcome {
    double point = 0.0;
    bool covered = false;
    bool contained = false;
    bool ok = false;
  };
  const std::size_t ne = estimators.size();
  std::vector<RepOutcome> cells(static_cast<std::size_t>(n_reps) * ne);

  parallel_for(static_cast<std::size_t>(n_reps), n_threads, [&](std::size_t r) {
    const std::uint64_t rep_seed =
        rep_seeds.empty() ? derive_seed(spec.seed, r) : rep_seeds[r];
    DgpSpec rep_spec = spec;
    rep_spec.seed = rep_seed;
    rep_spec.n = spec.n;
    GeneratedData gen;
    try {
      gen = generate(rep_spec);
    } catch (const Error&) {
      return;  // every estimator records a failure for this replication
    }
    for (std::size_t ie = 0; ie < ne; ++ie) {
      const EstimatorConfig& cfg = estimators[ie];
      RepOutcome& cell = cells[r * ne + ie];
      try {
        auto prop = make_propensity(cfg);
        auto out = make_outcome(cfg);
        NuisanceFit fit;
        EstimateResult est;
        if (cfg.mode == EstimatorMode::CrossFit) {
          fit = fit_crossfit(gen.data, *prop, *out, cfg.folds, derive_seed(rep_seed, 1 + ie))
                    .fit;
          est = cross_fit(gen.data, fit, cfg.copula, cfg.estimand, alpha);
        } else {
          prop->fit(gen.data);
          out->fit(gen.data);
          fit = predict_nuisance(*prop, *out, gen.data);
          est = cfg.mode == EstimatorMode::OneStep
                    ? one_step(gen.data, fit, cfg.copula, cfg.estimand, alpha)
                    : unconditional_dr(gen.data, fit, cfg.copula, cfg.estimand, alpha);
        }
        const Interval bounds = coupling_bounds(gen.data, fit, cfg.estimand);
        const double target = truth_for(table.truth, cfg.estimand);
        cell.point = est.point;
        cell.covered = est.ci_low <= target && target <= est.ci_high;
        cell.contained = bounds.lower <= est.ci_low && est.ci_high <= bounds.upper;
        cell.ok = true;
      } catch (const Error&) {
        // left !ok; counted against the failure budget below
      }
    }
  });

  for (std::size_t ie = 0; ie < ne; ++ie) {
    const EstimatorConfig& cfg = estimators[ie];
    StudyResult row;
    row.label = cfg.label;
    row.estimand = cfg.estimand;
    row.truth_value = truth_for(table.truth, cfg.estimand);
    std::vector<double> points;
    points.reserve(n_reps);
    int covered = 0, contained = 0;
    for (int r = 0; r < n_reps; ++r) {
      const RepOutcome& cell = cells[static_cast<std::size_t>(r) * ne + ie];
      if (!cell.ok) continue;
      points.push_back(cell.point);
      covered += cell.covered;
      contained += cell.contained;
    }
    row.n_reps = static_cast<int>(points.size());
    row.n_failures = n_reps - row.n_reps;
    if (row.n_failures * 50 > n_reps)
      throw FitError("run_study: estimator '" + cfg.label + "' failed " +
                     std::to_string(row.n_failures) + " of " + std::to_string(n_reps) +
                     " replications (2% budget exceeded)");
    row.bias = mean(points) - row.truth_value;
    row.sd = std::sqrt(pop_variance(points));
    row.rmse = std::hypot(row.bias, row.sd);
    row.coverage = 100.0 * covered / row.n_reps;
    row.envelope = 100.0 * contained / row.n_reps;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string study_csv(const StudyTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "label,estimand,n,truth,bias,sd,rmse,coverage,envelope,n_reps,n_failures\n";
  for (const StudyResult& row : table.rows) {
    out << csv_field(row.label) << ',' << estimand_name(row.estimand) << ',' << table.n
        << ',' << row.truth_value << ',' << row.bias << ',' << row.sd << ',' << row.rmse
        << ',' << row.coverage << ',' << row.envelope << ',' << row.n_reps << ','
        << row.n_failures << '\n';
  }
  return out.str();
}

std::string study_json(const StudyTable& table) {
  nlohmann::json j;
  j["n"] = table.n;
  j["n_reps"] = table.n_reps;
  j["truth"] = {{"psi", table.truth.psi},       {"phi", table.truth.phi},
                {"xi", table.truth.xi},         {"se_psi", table.truth.se_psi},
                {"se_phi", table.truth.se_phi}, {"se_xi", table.truth.se_xi},
                {"n_draws", table.truth.n_draws}};
  j["results"] = nlohmann::json::array();
  for (const StudyResult& row : table.rows) {
    j["results"].push_back({{"label", row.label},
                            {"estimand", estimand_name(row.estimand)},
                            {"truth", row.truth_value},
                            {"bias", row.bias},
                            {"sd", row.sd},
                            {"rmse", row.rmse},
                            {"coverage", row.coverage},
                            {"envelope", row.envelope},
                            {"n_reps", row.n_reps},
                            {"n_failures", row.n_failures}});
  }
  return j.dump(2) + "\n";
}

}  // namespace ordcausal
