#pragma once

#include <span>
#include <vector>

#include "mgst/design.hpp"
#include "mgst/gaussian.hpp"
#include "mgst/statistic.hpp"

namespace mgst::delta {

// First-order approximating law of the statistic sequence: common mean
// Delta(theta) and per-analysis variance g' Sigma_k g.
struct UnivariateLaw {
  double mean = 0.0;
  std::vector<double> variances;
};

// g is the gradient at grad_point; a vanishing gradient there is a
// degenerate-law error.
UnivariateLaw approx_law(const SummaryStatistic& stat, std::span<const double> theta,
                         std::span<const double> grad_point,
                         std::span<const CovMatrix> sigmas);

// Gradient used for the variance collapse: taken at theta0, falling back to
// thetaA when the gradient vanishes at theta0 (as it does for the signed
// product under the null).
ParamVector variance_gradient(const DesignSpec& spec);
bool gradient_fallback_used(const DesignSpec& spec);

struct Options {
  int r = 128;
  int workers = 1;
};

// Boundary constants from the univariate error-spending recursion applied to
// the approximating law; exact when the statistic is linear.
Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt);

// Stopping probabilities of fixed boundaries under the approximating law at
// theta.
StageProbabilities evaluate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                          const ParamVector& theta,
                                          std::span<const double> n_schedule,
                                          const Options& opt);

// Fixed-sample and error-spending information requirements of the
// approximating univariate design, on the I = n^(p/2) |M|^(-1/2) scale, and
// their ratio R. R cancels the first-order bias, which is what makes the
// composition with the exact fixed-sample information work.
struct InformationRatio {
  double i_fix = 0.0;
  double i_max = 0.0;
  double ratio = 1.0;
};
InformationRatio information_ratio(const DesignSpec& spec, const Options& opt);

}  // namespace mgst::delta
