#include <doctest.h>

#include <cmath>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ordcausal/dataset.hpp"
#include "ordcausal/errors.hpp"
#include "ordcausal/nuisance.hpp"
#include "ordcausal/rng.hpp"
#include "ordcausal/stats.hpp"
#include "oracles.hpp"
#include "refdgp.hpp"

namespace oc = ordcausal;
using refdgp::draw_reference_data;

namespace {

// Independent log-likelihood oracle for the pooled cumulative-logit model:
// eta_i = slopes . (x_i, a_i), ll = sum log{F(y_i) - F(y_i - 1)}.
double pooled_po_loglik(const oc::Dataset& d, const std::vector<double>& cut,
                        const std::vector<double>& slope) {
  double ll = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < d.p(); ++j) eta += slope[j] * d.x(i, j);
    eta += slope.back() * d.a[i];
    const double hi = (d.y[i] <= d.L - 2) ? oc::expit(cut[d.y[i]] - eta) : 1.0;
    const double lo = (d.y[i] >= 1) ? oc::expit(cut[d.y[i] - 1] - eta) : 0.0;
    ll += std::log(hi - lo);
  }
  return ll;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

TEST_CASE("dataset validation rejects malformed input") {
  oc::Matrix x(4, 1);
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 1, 0}, {0, 1, 1}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 1, 0}, {0, 1, 2, 0}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, -1, 1, 0}, {0, 1, 1, 0}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 1, 0}, {1, 1, 1, 1}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 1, 0}, {0, 0, 0, 0}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, 0, 0, 0}, {0, 1, 1, 0}, x), oc::ConfigError);
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 3, 0}, {0, 1, 1, 0}, x, 3), oc::ConfigError);
  x(2, 0) = std::nan("");
  CHECK_THROWS_AS(oc::Dataset::create({0, 1, 1, 0}, {0, 1, 1, 0}, x), oc::ConfigError);
}

TEST_CASE("dataset infers level count and subsets rows") {
  oc::Matrix x(5, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = -static_cast<double>(i);
  }
  const auto d = oc::Dataset::create({0, 2, 1, 2, 0}, {0, 1, 0, 1, 1}, x);
  CHECK(d.L == 3);
  CHECK(d.n == 5);

  const std::vector<std::size_t> idx = {4, 1};
  const auto s = d.subset(idx);
  REQUIRE(s.n == 2);
  CHECK(s.y == std::vector<int>{0, 2});
  CHECK(s.a == std::vector<int>{1, 1});
  CHECK(s.x(0, 0) == 4.0);
  CHECK(s.x(1, 1) == -1.0);
  CHECK(s.L == 3);
}

TEST_CASE("collapse_levels remaps gaps and records original codes") {
  oc::Matrix x(5, 0);
  const auto d = oc::Dataset::create({0, 2, 5, 2, 0}, {0, 1, 0, 1, 1}, x);
  const auto [c, map] = oc::collapse_levels(d);
  CHECK(c.L == 3);
  CHECK(c.y == std::vector<int>{0, 1, 2, 1, 0});
  CHECK(map.original_levels == std::vector<int>{0, 2, 5});
  CHECK_FALSE(map.identity());

  const auto d2 = oc::Dataset::create({0, 1, 2, 1, 0}, {0, 1, 0, 1, 1}, x);
  const auto [c2, map2] = oc::collapse_levels(d2);
  CHECK(map2.identity());
  CHECK(c2.y == d2.y);
}

// ---------------------------------------------------------------------------
// Logistic propensity

TEST_CASE("logistic intercept-only fit reproduces logit of the mean") {
  oc::Matrix x(10, 0);
  const auto d = oc::Dataset::create({0, 0, 0, 0, 0, 1, 1, 1, 1, 1},
                                     {1, 1, 1, 1, 1, 1, 0, 0, 0, 0}, x, 2);
  oc::LogisticPropensity m;
  m.fit(d);
  REQUIRE(m.coefficients().size() == 1);
  CHECK(std::fabs(m.coefficients()[0] - oc::logit(0.6)) < 1e-10);
  const auto e = m.predict(d);
  for (double ei : e) CHECK(ei == doctest::Approx(0.6).epsilon(1e-10));
}

TEST_CASE("logistic fit on treatment independent of covariates") {
  const std::size_t n = 10000;
  oc::Rng rng(11);
  std::vector<int> y(n, 0), a(n);
  oc::Matrix x(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    a[i] = rng.bernoulli(0.5) ? 1 : 0;
    for (int j = 0; j < 3; ++j) x(i, j) = oracles::norm_quantile_oracle(rng.u01());
  }
  const auto d = oc::Dataset::create(std::move(y), std::move(a), std::move(x));
  oc::LogisticPropensity m;
  m.fit(d);
  for (double b : m.coefficients()) CHECK(std::fabs(b) < 0.07);
}

TEST_CASE("logistic fit detects complete separation") {
  oc::Matrix x(6, 1);
  const double vals[] = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0};
  for (std::size_t i = 0; i < 6; ++i) x(i, 0) = vals[i];
  const auto d = oc::Dataset::create({0, 1, 0, 1, 0, 1}, {0, 0, 0, 1, 1, 1}, x, 2);
  oc::LogisticPropensity m;
  CHECK_THROWS_AS(m.fit(d), oc::SeparationDetected);
}

TEST_CASE("logistic fit rejects rank-deficient designs") {
  oc::Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    x(i, 0) = static_cast<double>(i) - 2.0;
    x(i, 1) = 2.0 * x(i, 0);  // collinear
  }
  const auto d = oc::Dataset::create({0, 1, 0, 1, 0, 1}, {0, 1, 0, 1, 1, 0}, x, 2);
  oc::LogisticPropensity m;
  CHECK_THROWS_AS(m.fit(d), oc::SingularDesign);
}

TEST_CASE("logistic fit recovers reference-design coefficients within 3 SE") {
  const auto d = draw_reference_data(200, 31);
  oc::LogisticPropensity m;
  m.fit(d);
  const std::vector<double> truth = {0.5, -0.2, 0.2, -0.2};
  REQUIRE(m.coefficients().size() == 4);
  REQUIRE(m.standard_errors().size() == 4);
  for (int j = 0; j < 4; ++j) {
    CHECK(m.standard_errors()[j] > 0.0);
    CHECK(std::fabs(m.coefficients()[j] - truth[j]) < 3.0 * m.standard_errors()[j]);
  }
}

// ---------------------------------------------------------------------------
// Proportional odds outcome

TEST_CASE("intercept-only cumulative-logit fit equals empirical cdf") {
  // both arms carry frequencies (0.2, 0.3, 0.5) over three levels
  std::vector<int> y, a;
  for (int arm = 0; arm < 2; ++arm) {
    for (int i = 0; i < 2; ++i) y.push_back(0);
    for (int i = 0; i < 3; ++i) y.push_back(1);
    for (int i = 0; i < 5; ++i) y.push_back(2);
    for (int i = 0; i < 10; ++i) a.push_back(arm);
  }
  const auto d = oc::Dataset::create(y, a, oc::Matrix(20, 0), 3);

  oc::ProportionalOddsOutcome per_arm(oc::OutcomeDesign::PerArm);
  per_arm.fit(d);
  for (int arm = 0; arm < 2; ++arm) {
    const auto f = per_arm.predict(d, arm);
    CHECK(std::fabs(f(0, 0) - 0.2) < 1e-8);
    CHECK(std::fabs(f(0, 1) - 0.5) < 1e-8);
  }

  // pooled fit on identical arms: treatment coefficient vanishes by symmetry
  oc::ProportionalOddsOutcome pooled;
  pooled.fit(d);
  CHECK(std::fabs(pooled.slopes().back()) < 1e-6);
  const auto f1 = pooled.predict(d, 1);
  CHECK(std::fabs(f1(0, 0) - 0.2) < 1e-4);
  CHECK(std::fabs(f1(0, 1) - 0.5) < 1e-4);
}

TEST_CASE("cumulative-logit fit recovers reference-design parameters within 3 SE") {
  const auto d = draw_reference_data(5000, 47);
  oc::ProportionalOddsOutcome m;
  m.fit(d);

  // eta carries a free intercept in the generating design; it is absorbed by
  // the cutpoints, so the identified cutpoints are logit{(k+1)/5} - 0.6.
  const auto& cut = m.cutpoints();
  const auto& cut_se = m.cutpoint_standard_errors();
  REQUIRE(cut.size() == 4);
  for (int k = 0; k < 4; ++k) {
    const double target = oc::logit((k + 1) / 5.0) - 0.6;
    CHECK(std::fabs(cut[k] - target) < 3.0 * cut_se[k]);
  }

  const auto& slope = m.slopes();
  const auto& slope_se = m.slope_standard_errors();
  REQUIRE(slope.size() == 4);  // three covariates plus treatment
  const std::vector<double> truth = {0.15, 0.15, 0.15, 0.4};
  for (int j = 0; j < 4; ++j) {
    CHECK(slope_se[j] > 0.0);
    CHECK(std::fabs(slope[j] - truth[j]) < 3.0 * slope_se[j]);
  }
}

TEST_CASE("cumulative-logit optimum zeroes the likelihood gradient") {
  const auto d = draw_reference_data(800, 53);
  oc::ProportionalOddsOutcome m;
  m.fit(d);
  std::vector<double> cut = m.cutpoints();
  std::vector<double> slope = m.slopes();

  const double h = 1e-5;
  for (std::size_t j = 0; j < cut.size(); ++j) {
    auto up = cut, dn = cut;
    up[j] += h;
    dn[j] -= h;
    const double g =
        (pooled_po_loglik(d, up, slope) - pooled_po_loglik(d, dn, slope)) / (2.0 * h);
    CHECK(std::fabs(g) < 1e-3);
  }
  for (std::size_t j = 0; j < slope.size(); ++j) {
    auto up = slope, dn = slope;
    up[j] += h;
    dn[j] -= h;
    const double g = (pooled_po_loglik(d, cut, up) - pooled_po_loglik(d, cut, dn)) / (2.0 * h);
    CHECK(std::fabs(g) < 1e-3);
  }

  // the fitted maximum dominates the generating parameters
  const std::vector<double> true_cut = {oc::logit(0.2) - 0.6, oc::logit(0.4) - 0.6,
                                        oc::logit(0.6) - 0.6, oc::logit(0.8) - 0.6};
  const std::vector<double> true_slope = {0.15, 0.15, 0.15, 0.4};
  CHECK(pooled_po_loglik(d, cut, slope) >= pooled_po_loglik(d, true_cut, true_slope));
}

TEST_CASE("cumulative-logit predictions are strictly increasing across levels") {
  const auto d = draw_reference_data(500, 59);
  oc::ProportionalOddsOutcome m;
  m.fit(d);
  for (int arm = 0; arm < 2; ++arm) {
    const auto f = m.predict(d, arm);
    for (std::size_t i = 0; i < f.rows(); ++i) {
      for (std::size_t k = 1; k < f.cols(); ++k) CHECK(f(i, k) > f(i, k - 1));
    }
  }
}

TEST_CASE("cumulative-logit fit rejects unobserved levels") {
  oc::Matrix x(6, 0);
  const auto d = oc::Dataset::create({0, 0, 2, 2, 0, 2}, {0, 0, 0, 1, 1, 1}, x, 3);
  oc::ProportionalOddsOutcome m;
  CHECK_THROWS_AS(m.fit(d), oc::EmptyLevel);
}

// ---------------------------------------------------------------------------
// predict_nuisance

TEST_CASE("predict_nuisance clips propensities and re-monotonizes margins") {
  oc::Matrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i);
  const auto d = oc::Dataset::create({0, 1, 2, 1}, {0, 1, 0, 1}, x, 3);

  oc::KnownPropensity prop([](std::span<const double> row) {
    return row[0] == 0.0 ? 0.001 : 0.4;
  });
  oc::KnownOutcome out(3, [](int arm, std::span<const double>) {
    if (arm == 1) return std::vector<double>{0.5, 0.3};       // non-monotone
    return std::vector<double>{1e-9, 1.0 - 1e-9};             // outside the margin band
  });

  const auto fit = oc::predict_nuisance(prop, out, d, 0.01, 1e-6);
  CHECK(fit.e[0] == 0.01);
  CHECK(fit.e[1] == 0.4);
  CHECK(fit.f1(0, 0) == 0.5);
  CHECK(fit.f1(0, 1) == 0.5);
  CHECK(fit.f0(0, 0) == 1e-6);
  CHECK(fit.f0(0, 1) == 1.0 - 1e-6);
}

TEST_CASE("intercept-only propensity predictions equal the treated fraction") {
  oc::Matrix x(8, 0);
  const auto d = oc::Dataset::create({0, 1, 0, 1, 0, 1, 0, 1}, {1, 0, 1, 1, 0, 0, 1, 0}, x, 2);
  oc::LogisticPropensity prop;
  prop.fit(d);
  oc::StratifiedOutcome out;
  out.fit(d);
  const auto fit = oc::predict_nuisance(prop, out, d);
  for (double ei : fit.e) CHECK(ei == doctest::Approx(0.5).epsilon(1e-10));
}

// ---------------------------------------------------------------------------
// Stratified baselines

TEST_CASE("stratified models reproduce cell frequencies on discrete covariates") {
  // x in {0,1}; construct known cell compositions
  std::vector<int> y, a;
  std::vector<double> xv;
  auto add = [&](double xx, int aa, int yy, int copies) {
    for (int c = 0; c < copies; ++c) {
      xv.push_back(xx);
      a.push_back(aa);
      y.push_back(yy);
    }
  };
  add(0.0, 1, 0, 2);
  add(0.0, 1, 1, 6);
  add(0.0, 0, 0, 4);
  add(0.0, 0, 1, 4);
  add(1.0, 1, 0, 3);
  add(1.0, 1, 1, 1);
  add(1.0, 0, 0, 1);
  add(1.0, 0, 1, 1);
  oc::Matrix x(xv.size(), 1);
  for (std::size_t i = 0; i < xv.size(); ++i) x(i, 0) = xv[i];
  const auto d = oc::Dataset::create(y, a, x, 2);

  oc::StratifiedPropensity prop;
  prop.fit(d);
  const auto e = prop.predict(d);
  for (std::size_t i = 0; i < d.n; ++i) {
    CHECK(e[i] == doctest::Approx(d.x(i, 0) == 0.0 ? 0.5 : 2.0 / 3.0).epsilon(1e-12));
  }

  oc::StratifiedOutcome out;
  out.fit(d);
  const auto f1 = out.predict(d, 1);
  const auto f0 = out.predict(d, 0);
  for (std::size_t i = 0; i < d.n; ++i) {
    if (d.x(i, 0) == 0.0) {
      CHECK(f1(i, 0) == doctest::Approx(0.25).epsilon(1e-12));
      CHECK(f0(i, 0) == doctest::Approx(0.5).epsilon(1e-12));
    } else {
      CHECK(f1(i, 0) == doctest::Approx(0.75).epsilon(1e-12));
      CHECK(f0(i, 0) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }

  // unseen covariate rows fall back to the marginal estimates
  const auto d2 = oc::Dataset::create({0, 1}, {0, 1}, oc::Matrix(2, 1, 7.0), 2);
  const auto e2 = prop.predict(d2);
  CHECK(e2[0] == doctest::Approx(6.0 / 11.0).epsilon(1e-12));
  const auto f1u = out.predict(d2, 1);
  CHECK(f1u(0, 0) == doctest::Approx(5.0 / 12.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Folds and cross-fitting

TEST_CASE("make_folds produces a deterministic near-equal partition") {
  const auto plan = oc::make_folds(10, 5, 77);
  REQUIRE(plan.assignment.size() == 10);
  std::vector<int> sizes(6, 0);
  for (int f : plan.assignment) {
    REQUIRE(f >= 1);
    REQUIRE(f <= 5);
    ++sizes[f];
  }
  for (int f = 1; f <= 5; ++f) CHECK(sizes[f] == 2);
  const auto again = oc::make_folds(10, 5, 77);
  CHECK(again.assignment == plan.assignment);
  const auto other = oc::make_folds(10, 5, 78);
  CHECK(other.assignment != plan.assignment);

  // leave-one-out: every fold is a single unit
  const auto loo = oc::make_folds(6, 6, 1);
  for (int f = 1; f <= 6; ++f) CHECK(loo.fold_indices(f).size() == 1);
  CHECK(loo.complement_indices(3).size() == 5);

  CHECK_THROWS_AS(oc::make_folds(10, 1, 0), oc::ConfigError);
  CHECK_THROWS_AS(oc::make_folds(10, 11, 0), oc::ConfigError);
}

TEST_CASE("cross-fitting is reproducible and close to the full-sample fit") {
  const auto d = draw_reference_data(5000, 101);
  oc::LogisticPropensity prop;
  oc::ProportionalOddsOutcome out;

  const auto cf1 = oc::fit_crossfit(d, prop, out, 10, 2024);
  const auto cf2 = oc::fit_crossfit(d, prop, out, 10, 2024);
  CHECK(cf1.fit.e == cf2.fit.e);
  CHECK(cf1.fit.f1.data() == cf2.fit.f1.data());
  CHECK(cf1.fit.f0.data() == cf2.fit.f0.data());

  prop.fit(d);
  out.fit(d);
  const auto full = oc::predict_nuisance(prop, out, d);
  double abs_diff = 0.0;
  for (std::size_t i = 0; i < d.n; ++i) abs_diff += std::fabs(cf1.fit.e[i] - full.e[i]);
  CHECK(abs_diff / static_cast<double>(d.n) < 0.02);

  // out-of-fold margins satisfy the structural invariants
  for (std::size_t i = 0; i < d.n; ++i) {
    CHECK(cf1.fit.e[i] >= 0.01);
    CHECK(cf1.fit.e[i] <= 0.99);
    for (std::size_t k = 1; k < cf1.fit.f1.cols(); ++k) {
      CHECK(cf1.fit.f1(i, k) >= cf1.fit.f1(i, k - 1));
      CHECK(cf1.fit.f0(i, k) >= cf1.fit.f0(i, k - 1));
    }
  }
}

TEST_CASE("cross-fitting reports the failing fold when a level vanishes") {
  // level 2 appears exactly once; its unit's training complement misses it
  std::vector<int> y = {0, 1, 1, 0, 1, 0, 0, 1, 0, 1, 0, 2};
  std::vector<int> a = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const auto d = oc::Dataset::create(y, a, oc::Matrix(12, 0), 3);
  oc::LogisticPropensity prop;
  oc::ProportionalOddsOutcome out;
  bool thrown = false;
  try {
    oc::fit_crossfit(d, prop, out, 6, 5);
  } catch (const oc::EmptyLevel& e) {
    thrown = true;
    CHECK(std::string(e.what()).find("fold") != std::string::npos);
  }
  CHECK(thrown);
}
