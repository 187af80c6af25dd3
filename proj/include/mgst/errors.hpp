#pragma once

#include <stdexcept>
#include <string>

namespace mgst {

// Base class for all library errors.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user input: schema violations, bad dimensions, bad parameters.
// CLI maps these to exit status 2.
struct config_error : error {
  using error::error;
};

// Covariance matrix is not symmetric positive definite where it must be.
struct invalid_covariance : error {
  using error::error;
};

// Information levels decrease between analyses.
struct schedule_error : error {
  using error::error;
};

// A boundary target cannot be met (bracket failure, crossed boundaries,
// unattainable power). CLI maps these to exit status 1.
struct infeasible_design : error {
  using error::error;
};

// The approximating univariate law has zero variance.
struct degenerate_law : error {
  using error::error;
};

// Too few Monte Carlo replicates remain alive to resolve a quantile.
struct insufficient_replicates : error {
  using error::error;
};

}  // namespace mgst
