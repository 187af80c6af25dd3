#pragma once

#include "mgst/delta.hpp"
#include "mgst/design.hpp"

namespace mgst::samplesize {

struct SizingOptions {
  int r_fixed = 32;   // grid size for the exact fixed-sample search
  int r_delta = 128;  // grid size for the univariate ratio
  int workers = 1;
};

// Exact information requirement of the fixed-sample design (a1 = b1,
// significance alpha at theta0, power 1-beta at thetaA), by bracketed search
// on the continuous per-arm size to relative tolerance 1e-4.
double fixed_information(const DesignSpec& spec, const SizingOptions& opt);

struct SizingResult {
  double i_fix = 0.0;
  double i_fix_delta = 0.0;
  double i_max_delta = 0.0;
  double ratio = 1.0;
  double i_max = 0.0;
  double n_fixed_continuous = 0.0;
  double n_gst_continuous = 0.0;
  long long n_fixed = 0;
  long long group_size = 0;           // per-arm patients added per analysis
  std::vector<long long> n_schedule;  // cumulative per arm
};

// Composes the exact fixed-sample information with the univariate ratio:
// I_max = R * I_fix; per-arm group size is the rounded-up K-th part of the
// continuous group-sequential size.
SizingResult max_information(const DesignSpec& spec, const SizingOptions& opt);

// Sizes the design under its own (possibly misspecified) nuisance matrix,
// then evaluates the attained power at thetaA when the data truly follow
// true_m: spending follows the realized information levels and the trial
// stops at the first analysis whose information reaches the designed I_max.
double attained_power(const DesignSpec& designed_with, const CovMatrix& true_m,
                      const SizingOptions& opt, int r_power = 6);

}  // namespace mgst::samplesize
