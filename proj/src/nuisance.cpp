#include "ordcausal/nuisance.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ordcausal/errors.hpp"
#include "ordcausal/rng.hpp"
#include "ordcausal/stats.hpp"

namespace ordcausal {

namespace {

Eigen::MatrixXd design_with_intercept(const Dataset& data) {
  const std::size_t n = data.n, p = data.p();
  Eigen::MatrixXd x(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j) x(i, j + 1) = data.x(i, j);
  }
  return x;
}

void check_full_rank(const Eigen::MatrixXd& x, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw SingularDesign(std::string(what) + ": design matrix is rank deficient");
}

std::vector<double> key_of(std::span<const double> row) {
  return {row.begin(), row.end()};
}

void require_all_levels(const std::vector<int>& y, int L, const std::string& stratum) {
  std::vector<int> count(L, 0);
  for (int yi : y) ++count[yi];
  for (int k = 0; k < L; ++k) {
    if (count[k] == 0)
      throw EmptyLevel("outcome level " + std::to_string(k) + " unobserved in " + stratum);
  }
}

// ---------------------------------------------------------------------------
// Cumulative-logit likelihood machinery

struct PoDeriv {
  double loglik = 0.0;
  Eigen::VectorXd grad;  // direct parameters: cutpoints then slopes
  Eigen::MatrixXd hess;
};

// Log-likelihood with analytic gradient/Hessian in the direct (lambda, beta)
// parameterization. x has no intercept column; it is absorbed by the cutpoints.
PoDeriv po_derivatives(const Eigen::MatrixXd& x, const std::vector<int>& y, int L,
                       const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta,
                       bool need_hess) {
  const std::size_t n = y.size();
  const int d = L - 1;
  const int q = static_cast<int>(x.cols());
  PoDeriv out;
  out.grad = Eigen::VectorXd::Zero(d + q);
  if (need_hess) out.hess = Eigen::MatrixXd::Zero(d + q, d + q);

  const Eigen::VectorXd eta = x * beta;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = y[i];
    double u = 1.0, fu = 0.0, gu = 0.0;
    if (k <= L - 2) {
      u = expit(lambda[k] - eta[i]);
      fu = u * (1.0 - u);
      gu = fu * (1.0 - 2.0 * u);
    }
    double v = 0.0, fv = 0.0, gv = 0.0;
    if (k >= 1) {
      v = expit(lambda[k - 1] - eta[i]);
      fv = v * (1.0 - v);
      gv = fv * (1.0 - 2.0 * v);
    }
    const double p = std::max(u - v, 1e-300);
    out.loglik += std::log(p);

    if (k <= L - 2) out.grad[k] += fu / p;
    if (k >= 1) out.grad[k - 1] -= fv / p;
    const double geta = -(fu - fv) / p;
    for (int j = 0; j < q; ++j) out.grad[d + j] += geta * x(i, j);

    if (!need_hess) continue;
    const double p2 = p * p;
    if (k <= L - 2) out.hess(k, k) += gu / p - (fu / p) * (fu / p);
    if (k >= 1) out.hess(k - 1, k - 1) += -gv / p - (fv / p) * (fv / p);
    if (k <= L - 2 && k >= 1) {
      const double cross = fu * fv / p2;
      out.hess(k, k - 1) += cross;
      out.hess(k - 1, k) += cross;
    }
    const double au = (-gu * p + fu * (fu - fv)) / p2;
    const double av = (gv * p - fv * (fu - fv)) / p2;
    const double b = ((gu - gv) * p - (fu - fv) * (fu - fv)) / p2;
    for (int j = 0; j < q; ++j) {
      if (k <= L - 2) {
        out.hess(k, d + j) += au * x(i, j);
        out.hess(d + j, k) += au * x(i, j);
      }
      if (k >= 1) {
        out.hess(k - 1, d + j) += av * x(i, j);
        out.hess(d + j, k - 1) += av * x(i, j);
      }
      for (int m = 0; m < q; ++m) out.hess(d + j, d + m) += b * x(i, j) * x(i, m);
    }
  }
  return out;
}

// theta = (lambda_0, log gaps, slopes) guarantees ordered cutpoints.
Eigen::VectorXd lambdas_from(const Eigen::VectorXd& theta, int d) {
  Eigen::VectorXd lambda(d);
  lambda[0] = theta[0];
  for (int k = 1; k < d; ++k) lambda[k] = lambda[k - 1] + std::exp(theta[k]);
  return lambda;
}

struct PoFitResult {
  Eigen::VectorXd lambda;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;  // direct parameterization: cutpoints then slopes
};

PoFitResult po_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int L,
                   const std::string& stratum) {
  const std::size_t n = y.size();
  const int d = L - 1;
  const int q = static_cast<int>(x.cols());
  require_all_levels(y, L, stratum);
  if (q > 0) {
    Eigen::MatrixXd with_icpt(n, q + 1);
    with_icpt.col(0).setOnes();
    with_icpt.rightCols(q) = x;
    check_full_rank(with_icpt, "outcome model");
  }

  // Start at the empirical cumulative logits with zero slopes.
  std::vector<double> count(L, 0.0);
  for (int yi : y) count[yi] += 1.0;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + q);
  {
    double cum = 0.0;
    Eigen::VectorXd lam0(d);
    for (int k = 0; k < d; ++k) {
      cum += count[k];
      lam0[k] = logit(cum / static_cast<double>(n));
    }
    theta[0] = lam0[0];
    for (int k = 1; k < d; ++k) theta[k] = std::log(lam0[k] - lam0[k - 1]);
  }

  auto loglik_at = [&](const Eigen::VectorXd& t) {
    return po_derivatives(x, y, L, lambdas_from(t, d), t.tail(q), false).loglik;
  };

  double ll = loglik_at(theta);
  bool converged = false;
  for (int iter = 0; iter < 200 && !converged; ++iter) {
    const Eigen::VectorXd lambda = lambdas_from(theta, d);
    const PoDeriv de = po_derivatives(x, y, L, lambda, theta.tail(q), true);

    // Chain rule into the reparameterized coordinates.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(d + q, d + q);
    for (int k = 0; k < d; ++k) {
      jac(k, 0) = 1.0;
      for (int j = 1; j <= k; ++j) jac(k, j) = std::exp(theta[j]);
    }
    for (int j = 0; j < q; ++j) jac(d + j, d + j) = 1.0;
    Eigen::VectorXd grad_t = jac.transpose() * de.grad;
    Eigen::MatrixXd hess_t = jac.transpose() * de.hess * jac;
    for (int j = 1; j < d; ++j) {
      double tail_grad = 0.0;
      for (int k = j; k < d; ++k) tail_grad += de.grad[k];
      hess_t(j, j) += std::exp(theta[j]) * tail_grad;
    }

    // Already at a stationary point (e.g. the empirical start is the MLE).
    if (grad_t.lpNorm<Eigen::Infinity>() < 1e-9 * std::max(1.0, std::fabs(ll))) {
      converged = true;
      break;
    }

    // Ascend: solve (-H + ridge I) step = grad, growing the ridge until the
    // direction is an ascent direction.
    Eigen::MatrixXd neg_h = -hess_t;
    Eigen::VectorXd step;
    double ridge = 0.0;
    for (;;) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h + ridge * Eigen::MatrixXd::Identity(d + q, d + q));
      step = ldlt.solve(grad_t);
      if (ldlt.info() == Eigen::Success && step.allFinite() && grad_t.dot(step) > 0.0) break;
      ridge = (ridge == 0.0) ? 1e-6 : ridge * 10.0;
      if (ridge > 1e12)
        throw NonConvergence("outcome model: could not find an ascent direction (" + stratum + ")");
    }

    double scale = 1.0;
    double ll_new = loglik_at(theta + scale * step);
    int halvings = 0;
    while ((!std::isfinite(ll_new) || ll_new < ll) && halvings < 60) {
      scale *= 0.5;
      ll_new = loglik_at(theta + scale * step);
      ++halvings;
    }
    if (!std::isfinite(ll_new) || ll_new < ll) {
      // No uphill move left; accept convergence only if the gradient is flat.
      if (grad_t.lpNorm<Eigen::Infinity>() < 1e-6) {
        converged = true;
        break;
      }
      throw NonConvergence("outcome model: line search failed (" + stratum + ")");
    }
    theta += scale * step;
    ll = ll_new;
    if ((scale * step).lpNorm<Eigen::Infinity>() < 1e-8) converged = true;
  }
  if (!converged) throw NonConvergence("outcome model: no convergence in 200 iterations (" + stratum + ")");

  PoFitResult out;
  out.lambda = lambdas_from(theta, d);
  out.beta = theta.tail(q);
  const PoDeriv de = po_derivatives(x, y, L, out.lambda, out.beta, true);
  Eigen::MatrixXd info = -de.hess;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(d + q, d + q));
  out.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// LogisticPropensity

void LogisticPropensity::fit(const Dataset& data) {
  const Eigen::MatrixXd x = design_with_intercept(data);
  const std::size_t n = data.n;
  const auto cols = x.cols();
  check_full_rank(x, "propensity model");

  Eigen::VectorXd a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = data.a[i];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cols);
  Eigen::MatrixXd xtwx;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd lp = x * beta;
    if (lp.lpNorm<Eigen::Infinity>() > 30.0)
      throw SeparationDetected("propensity model: fitted probabilities pinned to 0/1");
    Eigen::VectorXd mu(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      mu[i] = expit(lp[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    xtwx = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd score = x.transpose() * (a - mu);
    const Eigen::VectorXd delta = xtwx.ldlt().solve(score);
    if (!delta.allFinite()) throw SingularDesign("propensity model: weighted normal equations are singular");
    beta += delta;
    if (delta.lpNorm<Eigen::Infinity>() < 1e-8) break;
  }

  const Eigen::MatrixXd cov = xtwx.ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
  beta_.assign(beta.data(), beta.data() + cols);
  se_.resize(cols);
  for (int j = 0; j < cols; ++j) se_[j] = std::sqrt(std::max(cov(j, j), 0.0));
}

std::vector<double> LogisticPropensity::predict(const Dataset& data) const {
  if (beta_.empty()) throw FitError("propensity model not fitted");
  if (data.p() + 1 != beta_.size())
    throw FitError("propensity model fitted with a different covariate count");
  std::vector<double> e(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    double lp = beta_[0];
    for (std::size_t j = 0; j < data.p(); ++j) lp += beta_[j + 1] * data.x(i, j);
    e[i] = expit(lp);
  }
  return e;
}

std::unique_ptr<PropensityModel> LogisticPropensity::clone() const {
  return std::make_unique<LogisticPropensity>(*this);
}

// ---------------------------------------------------------------------------
// KnownPropensity

std::vector<double> KnownPropensity::predict(const Dataset& data) const {
  std::vector<double> e(data.n);
  for (std::size_t i = 0; i < data.n; ++i) e[i] = e_(data.x.row(i));
  return e;
}

std::unique_ptr<PropensityModel> KnownPropensity::clone() const {
  return std::make_unique<KnownPropensity>(*this);
}

// ---------------------------------------------------------------------------
// StratifiedPropensity

void StratifiedPropensity::fit(const Dataset& data) {
  std::map<std::vector<double>, std::pair<double, double>> acc;  // sum, count
  double total = 0.0;
  for (std::size_t i = 0; i < data.n; ++i) {
    auto& [sum, cnt] = acc[key_of(data.x.row(i))];
    sum += data.a[i];
    cnt += 1.0;
    total += data.a[i];
  }
  cells_.clear();
  for (const auto& [key, sc] : acc) cells_[key] = sc.first / sc.second;
  marginal_ = total / static_cast<double>(data.n);
}

std::vector<double> StratifiedPropensity::predict(const Dataset& data) const {
  std::vector<double> e(data.n);
  for (std::size_t i = 0; i < data.n; ++i) {
    auto it = cells_.find(key_of(data.x.row(i)));
    e[i] = (it != cells_.end()) ? it->second : marginal_;
  }
  return e;
}

std::unique_ptr<PropensityModel> StratifiedPropensity::clone() const {
  return std::make_unique<StratifiedPropensity>(*this);
}

// ---------------------------------------------------------------------------
// ProportionalOddsOutcome

void ProportionalOddsOutcome::fit(const Dataset& data) {
  L_ = data.L;
  const int d = L_ - 1;
  if (design_ == OutcomeDesign::PooledTreatment) {
    const std::size_t q = data.p() + 1;
    Eigen::MatrixXd x(data.n, q);
    for (std::size_t i = 0; i < data.n; ++i) {
      for (std::size_t j = 0; j < data.p(); ++j) x(i, j) = data.x(i, j);
      x(i, q - 1) = data.a[i];
    }
    const PoFitResult r = po_fit(x, data.y, L_, "pooled data");
    pooled_.cut.assign(r.lambda.data(), r.lambda.data() + d);
    pooled_.slope.assign(r.beta.data(), r.beta.data() + q);
    pooled_.se_cut.assign(r.se.data(), r.se.data() + d);
    pooled_.se_slope.assign(r.se.data() + d, r.se.data() + d + q);
  } else {
    for (int arm = 0; arm < 2; ++arm) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < data.n; ++i) {
        if (data.a[i] == arm) idx.push_back(i);
      }
      const Dataset sub = data.subset(idx);
      Eigen::MatrixXd x(sub.n, sub.p());
      for (std::size_t i = 0; i < sub.n; ++i) {
        for (std::size_t j = 0; j < sub.p(); ++j) x(i, j) = sub.x(i, j);
      }
      const PoFitResult r = po_fit(x, sub.y, L_, "treatment arm " + std::to_string(arm));
      auto& f = per_arm_[arm];
      f.cut.assign(r.lambda.data(), r.lambda.data() + d);
      f.slope.assign(r.beta.data(), r.beta.data() + sub.p());
      f.se_cut.assign(r.se.data(), r.se.data() + d);
      f.se_slope.assign(r.se.data() + d, r.se.data() + d + sub.p());
    }
  }
  fitted_ = true;
}

Matrix ProportionalOddsOutcome::predict(const Dataset& data, int arm) const {
  if (!fitted_) throw FitError("outcome model not fitted");
  const ArmFit& f = fit_for(arm);
  const std::size_t expected_p =
      (design_ == OutcomeDesign::PooledTreatment) ? f.slope.size() - 1 : f.slope.size();
  if (data.p() != expected_p) throw FitError("outcome model fitted with a different covariate count");

  Matrix out(data.n, L_ - 1);
  for (std::size_t i = 0; i < data.n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < data.p(); ++j) eta += f.slope[j] * data.x(i, j);
    if (design_ == OutcomeDesign::PooledTreatment) eta += f.slope.back() * arm;
    for (int k = 0; k < L_ - 1; ++k) out(i, k) = expit(f.cut[k] - eta);
  }
  return out;
}

const ProportionalOddsOutcome::ArmFit& ProportionalOddsOutcome::fit_for(int arm) const {
  if (!fitted_) throw FitError("outcome model not fitted");
  if (design_ == OutcomeDesign::PooledTreatment) return pooled_;
  if (arm != 0 && arm != 1) throw FitError("arm must be 0 or 1");
  return per_arm_[arm];
}

const std::vector<double>& ProportionalOddsOutcome::cutpoints(int arm) const { return fit_for(arm).cut; }
const std::vector<double>& ProportionalOddsOutcome::slopes(int arm) const { return fit_for(arm).slope; }
const std::vector<double>& ProportionalOddsOutcome::cutpoint_standard_errors(int arm) const {
  return fit_for(arm).se_cut;
}
const std::vector<double>& ProportionalOddsOutcome::slope_standard_errors(int arm) const {
  return fit_for(arm).se_slope;
}

std::unique_ptr<OutcomeModel> ProportionalOddsOutcome::clone() const {
  return std::make_unique<ProportionalOddsOutcome>(*this);
}

// ---------------------------------------------------------------------------
// KnownOutcome

Matrix KnownOutcome::predict(const Dataset& data, int arm) const {
  Matrix out(data.n, L_ - 1);
  for (std::size_t i = 0; i < data.n; ++i) {
    const std::vector<double> f = f_(arm, data.x.row(i));
    if (f.size() != static_cast<std::size_t>(L_ - 1))
      throw FitError("known outcome function returned " + std::to_string(f.size()) +
                     " margins, expected " + std::to_string(L_ - 1));
    for (int k = 0; k < L_ - 1; ++k) out(i, k) = f[k];
  }
  return out;
}

std::unique_ptr<OutcomeModel> KnownOutcome::clone() const {
  return std::make_unique<KnownOutcome>(*this);
}

// ---------------------------------------------------------------------------
// StratifiedOutcome

void StratifiedOutcome::fit(const Dataset& data) {
  L_ = data.L;
  for (int arm = 0; arm < 2; ++arm) {
    std::map<std::vector<double>, std::vector<double>> counts;
    std::vector<double> marg(L_, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
      if (data.a[i] != arm) continue;
      auto& c = counts[key_of(data.x.row(i))];
      if (c.empty()) c.assign(L_, 0.0);
      c[data.y[i]] += 1.0;
      marg[data.y[i]] += 1.0;
    }
    if (counts.empty()) throw FitError("no units in treatment arm " + std::to_string(arm));
    auto to_cdf = [this](const std::vector<double>& c) {
      const double tot = std::accumulate(c.begin(), c.end(), 0.0);
      std::vector<double> cdf(L_ - 1);
      double cum = 0.0;
      for (int k = 0; k < L_ - 1; ++k) {
        cum += c[k];
        cdf[k] = cum / tot;
      }
      return cdf;
    };
    cells_[arm].clear();
    for (const auto& [key, c] : counts) cells_[arm][key] = to_cdf(c);
    marginal_[arm] = to_cdf(marg);
  }
}

Matrix StratifiedOutcome::predict(const Dataset& data, int arm) const {
  if (L_ == 0) throw FitError("outcome model not fitted");
  Matrix out(data.n, L_ - 1);
  for (std::size_t i = 0; i < data.n; ++i) {
    auto it = cells_[arm].find(key_of(data.x.row(i)));
    const std::vector<double>& cdf = (it != cells_[arm].end()) ? it->second : marginal_[arm];
    for (int k = 0; k < L_ - 1; ++k) out(i, k) = cdf[k];
  }
  return out;
}

std::unique_ptr<OutcomeModel> StratifiedOutcome::clone() const {
  return std::make_unique<StratifiedOutcome>(*this);
}

// ---------------------------------------------------------------------------
// predict_nuisance / folds / cross-fitting

NuisanceFit predict_nuisance(const PropensityModel& propensity, const OutcomeModel& outcome,
                             const Dataset& data, double trim, double eps_f) {
  NuisanceFit fit;
  fit.e = propensity.predict(data);
  fit.f1 = outcome.predict(data, 1);
  fit.f0 = outcome.predict(data, 0);
  if (fit.e.size() != data.n || fit.f1.rows() != data.n || fit.f0.rows() != data.n ||
      fit.f1.cols() != static_cast<std::size_t>(data.L - 1) ||
      fit.f0.cols() != static_cast<std::size_t>(data.L - 1))
    throw FitError("nuisance predictions have the wrong shape");

  for (double& ei : fit.e) {
    if (!std::isfinite(ei)) throw NumericFailure("nonfinite propensity prediction");
    ei = std::clamp(ei, trim, 1.0 - trim);
  }
  for (Matrix* m : {&fit.f1, &fit.f0}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      double running = 0.0;
      for (std::size_t k = 0; k < m->cols(); ++k) {
        double v = (*m)(i, k);
        if (!std::isfinite(v)) throw NumericFailure("nonfinite margin prediction");
        v = std::clamp(v, eps_f, 1.0 - eps_f);
        running = std::max(running, v);
        (*m)(i, k) = running;
      }
    }
  }
  return fit;
}

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) idx.push_back(i);
  }
  return idx;
}

FoldPlan make_folds(std::size_t n, int K, std::uint64_t seed) {
  if (K < 2) throw ConfigError("fold count must be at least 2");
  if (static_cast<std::size_t>(K) > n)
    throw ConfigError("fold count " + std::to_string(K) + " exceeds sample size " + std::to_string(n));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(perm[i], perm[j]);
  }

  FoldPlan plan;
  plan.K = K;
  plan.seed = seed;
  plan.assignment.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos)
    plan.assignment[perm[pos]] = 1 + static_cast<int>(pos * static_cast<std::size_t>(K) / n);
  return plan;
}

namespace {
template <class E>
[[noreturn]] void rethrow_with_fold(const E& e, int fold) {
  throw E("fold " + std::to_string(fold) + ": " + e.what());
}
}  // namespace

CrossFitResult fit_crossfit(const Dataset& data, const PropensityModel& propensity,
                            const OutcomeModel& outcome, int K, std::uint64_t seed, double trim,
                            double eps_f) {
  CrossFitResult out;
  out.folds = make_folds(data.n, K, seed);
  out.fit.e.resize(data.n);
  out.fit.f1 = Matrix(data.n, data.L - 1);
  out.fit.f0 = Matrix(data.n, data.L - 1);

  for (int s = 1; s <= K; ++s) {
    const std::vector<std::size_t> test_idx = out.folds.fold_indices(s);
    const std::vector<std::size_t> train_idx = out.folds.complement_indices(s);
    const Dataset train = data.subset(train_idx);
    const Dataset test = data.subset(test_idx);

    NuisanceFit fold_fit;
    try {
      auto pe = propensity.clone();
      auto po = outcome.clone();
      pe->fit(train);
      po->fit(train);
      fold_fit = predict_nuisance(*pe, *po, test, trim, eps_f);
    } catch (const EmptyLevel& e) {
      rethrow_with_fold(e, s);
    } catch (const SeparationDetected& e) {
      rethrow_with_fold(e, s);
    } catch (const SingularDesign& e) {
      rethrow_with_fold(e, s);
    } catch (const NonConvergence& e) {
      rethrow_with_fold(e, s);
    } catch (const FitError& e) {
      rethrow_with_fold(e, s);
    }

    for (std::size_t r = 0; r < test_idx.size(); ++r) {
      const std::size_t i = test_idx[r];
      out.fit.e[i] = fold_fit.e[r];
      for (std::size_t k = 0; k + 1 < static_cast<std::size_t>(data.L); ++k) {
        out.fit.f1(i, k) = fold_fit.f1(r, k);
        out.fit.f0(i, k) = fold_fit.f0(r, k);
      }
    }
  }
  return out;
}

}  // namespace ordcausal
