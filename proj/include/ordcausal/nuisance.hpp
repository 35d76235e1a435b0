#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "ordcausal/dataset.hpp"
#include "ordcausal/matrix.hpp"

namespace ordcausal {

inline constexpr double kDefaultTrim = 0.01;
inline constexpr double kDefaultMarginEps = 1e-6;

// Evaluated nuisances for one dataset. f1/f0 hold cumulative margins
// F_a(k|x_i) for k = 0..L-2 (F_a(-1)=0 and F_a(L-1)=1 are implicit).
// Invariants after predict_nuisance: e in [trim, 1-trim]; every row of
// f1/f0 nondecreasing in k and inside [eps_f, 1-eps_f].
struct NuisanceFit {
  std::vector<double> e;
  Matrix f1;
  Matrix f0;
};

// Pluggable model interfaces. clone() copies configuration (fit state may be
// copied too; fit() fully overwrites it), letting cross-fitting refit a fresh
// instance per training fold.
class PropensityModel {
public:
  virtual ~PropensityModel() = default;
  virtual void fit(const Dataset& data) = 0;
  virtual std::vector<double> predict(const Dataset& data) const = 0;
  virtual std::unique_ptr<PropensityModel> clone() const = 0;
};

class OutcomeModel {
public:
  virtual ~OutcomeModel() = default;
  virtual void fit(const Dataset& data) = 0;
  // n x (L-1) cumulative probabilities F_arm(k|x_i), k = 0..L-2.
  virtual Matrix predict(const Dataset& data, int arm) const = 0;
  virtual std::unique_ptr<OutcomeModel> clone() const = 0;
};

// Maximum-likelihood logistic regression of A on (1, x) via iteratively
// reweighted least squares. Converges when max coefficient change < 1e-8
// (at most 100 sweeps). Throws SingularDesign on a rank-deficient design
// and SeparationDetected when |linear predictor| exceeds 30.
class LogisticPropensity : public PropensityModel {
public:
  void fit(const Dataset& data) override;
  std::vector<double> predict(const Dataset& data) const override;
  std::unique_ptr<PropensityModel> clone() const override;

  // Intercept first, then one slope per covariate column.
  const std::vector<double>& coefficients() const { return beta_; }
  const std::vector<double>& standard_errors() const { return se_; }

private:
  std::vector<double> beta_;
  std::vector<double> se_;
};

// Propensity supplied as a known function of the covariate row (design
// knowledge, e.g. a randomized trial); fit() is a no-op.
class KnownPropensity : public PropensityModel {
public:
  using Fn = std::function<double(std::span<const double>)>;
  explicit KnownPropensity(Fn e) : e_(std::move(e)) {}

  void fit(const Dataset&) override {}
  std::vector<double> predict(const Dataset& data) const override;
  std::unique_ptr<PropensityModel> clone() const override;

private:
  Fn e_;
};

// Nonparametric baseline for small discrete covariate spaces: mean of A
// within each distinct covariate row. Rows unseen during fitting fall back
// to the marginal treated fraction.
class StratifiedPropensity : public PropensityModel {
public:
  void fit(const Dataset& data) override;
  std::vector<double> predict(const Dataset& data) const override;
  std::unique_ptr<PropensityModel> clone() const override;

private:
  std::map<std::vector<double>, double> cells_;
  double marginal_ = 0.5;
};

enum class OutcomeDesign {
  PooledTreatment,  // one model on all units with treatment as a covariate
  PerArm,           // separate models per treatment arm
};

// Cumulative-logit outcome model: pr(Y <= k | x) = expit(lambda_k - eta),
// eta linear in the design row. Cutpoint ordering is enforced by optimizing
// (lambda_0, log gaps); Newton with backtracking line search, convergence at
// max parameter change < 1e-8, NonConvergence after 200 iterations.
// EmptyLevel if some level in 0..L-1 never occurs in a fitted stratum.
class ProportionalOddsOutcome : public OutcomeModel {
public:
  explicit ProportionalOddsOutcome(OutcomeDesign design = OutcomeDesign::PooledTreatment)
      : design_(design) {}

  void fit(const Dataset& data) override;
  Matrix predict(const Dataset& data, int arm) const override;
  std::unique_ptr<OutcomeModel> clone() const override;

  // Fitted parameters. arm selects the per-arm fit; ignored for the pooled
  // design, whose slopes() are the covariate slopes followed by the
  // treatment coefficient. Standard errors come from the observed
  // information at the optimum.
  const std::vector<double>& cutpoints(int arm = 1) const;
  const std::vector<double>& slopes(int arm = 1) const;
  const std::vector<double>& cutpoint_standard_errors(int arm = 1) const;
  const std::vector<double>& slope_standard_errors(int arm = 1) const;

private:
  struct ArmFit {
    std::vector<double> cut;
    std::vector<double> slope;
    std::vector<double> se_cut;
    std::vector<double> se_slope;
  };
  const ArmFit& fit_for(int arm) const;

  OutcomeDesign design_;
  ArmFit pooled_;
  ArmFit per_arm_[2];
  int L_ = 0;
  bool fitted_ = false;
};

// Margins supplied as a known function (x, arm) -> {F_arm(k|x)}_{k=0..L-2};
// fit() is a no-op.
class KnownOutcome : public OutcomeModel {
public:
  using Fn = std::function<std::vector<double>(int arm, std::span<const double>)>;
  KnownOutcome(int L, Fn f) : L_(L), f_(std::move(f)) {}

  void fit(const Dataset&) override {}
  Matrix predict(const Dataset& data, int arm) const override;
  std::unique_ptr<OutcomeModel> clone() const override;

private:
  int L_;
  Fn f_;
};

// Nonparametric baseline: empirical conditional CDF of Y within each
// (covariate row, arm) cell. Cells unseen during fitting fall back to the
// arm's marginal empirical CDF.
class StratifiedOutcome : public OutcomeModel {
public:
  void fit(const Dataset& data) override;
  Matrix predict(const Dataset& data, int arm) const override;
  std::unique_ptr<OutcomeModel> clone() const override;

private:
  std::map<std::vector<double>, std::vector<double>> cells_[2];
  std::vector<double> marginal_[2];
  int L_ = 0;
};

// Evaluates fitted models and enforces the NuisanceFit invariants:
// propensities clipped to [trim, 1-trim]; margins clipped to
// [eps_f, 1-eps_f] and re-monotonized by a running max along k.
NuisanceFit predict_nuisance(const PropensityModel& propensity, const OutcomeModel& outcome,
                             const Dataset& data, double trim = kDefaultTrim,
                             double eps_f = kDefaultMarginEps);

// Seeded uniform shuffle cut into near-equal contiguous blocks; fold labels
// are 1..K and every fold is nonempty. Requires 2 <= K <= n.
struct FoldPlan {
  int K = 0;
  std::vector<int> assignment;
  std::uint64_t seed = 0;

  std::vector<std::size_t> fold_indices(int fold) const;
  std::vector<std::size_t> complement_indices(int fold) const;
};

FoldPlan make_folds(std::size_t n, int K, std::uint64_t seed);

// Cross-fitting: unit i's nuisance values come from models trained on the
// complement of its fold. Fitting errors are rethrown with the fold index
// prepended to the message.
struct CrossFitResult {
  NuisanceFit fit;
  FoldPlan folds;
};

CrossFitResult fit_crossfit(const Dataset& data, const PropensityModel& propensity,
                            const OutcomeModel& outcome, int K, std::uint64_t seed,
                            double trim = kDefaultTrim, double eps_f = kDefaultMarginEps);

}  // namespace ordcausal
