#pragma once

#include <stdexcept>
#include <string>

namespace ordcausal {

// Error hierarchy; exit_code() matches the CLI contract:
//   2 = configuration / input error, 3 = model fit error, 4 = numeric error.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
  virtual int exit_code() const noexcept { return 4; }
};

class ConfigError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class FitError : public Error {
public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Fitted probabilities pinned to {0,1}; linear predictor ran away.
class SeparationDetected : public FitError {
public:
  using FitError::FitError;
};

// Rank-deficient design matrix.
class SingularDesign : public FitError {
public:
  using FitError::FitError;
};

// Iteration cap reached without meeting the convergence criterion.
class NonConvergence : public FitError {
public:
  using FitError::FitError;
};

// An outcome level has no observations in the fitted stratum / fold.
class EmptyLevel : public FitError {
public:
  using FitError::FitError;
};

class NumericError : public Error {
public:
  using Error::Error;
};

// Copula parameter outside the family's domain.
class InvalidParameter : public NumericError {
public:
  using NumericError::NumericError;
};

// Kendall tau outside the family's achievable range.
class UnsupportedTau : public NumericError {
public:
  using NumericError::NumericError;
};

// Operation undefined for the requested family (e.g. derivative coefficients
// for the Frechet bound copulas).
class UnsupportedCopula : public NumericError {
public:
  using NumericError::NumericError;
};

class InvalidGamma : public NumericError {
public:
  using NumericError::NumericError;
};

// Non-monotone or out-of-range margin input.
class InconsistentMargins : public NumericError {
public:
  using NumericError::NumericError;
};

// Catch-all for numeric failures that indicate a real inconsistency
// (cell probabilities materially negative, totals far from one, ...).
class NumericFailure : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace ordcausal
