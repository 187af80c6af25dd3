#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mgst/design.hpp"
#include "mgst/gaussian.hpp"
#include "mgst/rng.hpp"

namespace mgst::montecarlo {

// How stage targets index the sorted statistic values of the surviving
// replicates. survivor_fraction treats psi_k as a proportion of the
// survivors (the scheme as published; its realized stage errors shrink with
// the survival fraction). overall_fraction rescales the target so the
// proportion is taken of the original N.
enum class QuantileMode { survivor_fraction, overall_fraction };

struct Options {
  long long replicates = 1'000'000;
  std::uint64_t seed = 1;
  QuantileMode mode = QuantileMode::survivor_fraction;
  int workers = 1;
};

// Sequential replicate store used by sample_stage: draws per stage for every
// replicate, with survivorship flags maintained by the caller. Draws are a
// pure function of (seed, replicate index, stage), so identical seeds give
// identical paths.
struct SamplePaths {
  int p = 0;
  long long n = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> draws;  // draws[k] is n*p, stage k populated so far
  std::vector<char> alive;
  std::vector<RngStream> streams;
};

SamplePaths make_paths(int p, long long n, std::uint64_t seed);

// Extends every alive replicate by one draw: the marginal N(theta, sigma_curr)
// at k = 1, the conditional law given the stage k-1 draw otherwise
// (sigma_prev is ignored at k = 1).
void sample_stage(SamplePaths& paths, int k, const ParamVector& theta,
                  const CovMatrix* sigma_prev, const CovMatrix& sigma_curr);

// Stage-wise stopping proportions of fixed boundaries under theta, with
// binomial standard errors.
struct Estimate {
  std::vector<double> reject;
  std::vector<double> accept;
  std::vector<double> reject_se;
  std::vector<double> accept_se;
};
Estimate estimate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                const ParamVector& theta, std::span<const double> n_schedule,
                                const Options& opt);

// Non-parametric boundary construction: stage-wise empirical quantiles of
// the surviving null/alternative populations, culling both to [a_k, b_k)
// after each analysis; a_K = b_K comes from the efficacy side.
Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt);

}  // namespace mgst::montecarlo
