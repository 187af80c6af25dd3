#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mgst/linalg.hpp"
#include "mgst/statistic.hpp"

namespace mgst {

// Power-family error spending: f(t) = budget * min(t^exponent, 1) for t >= 0.
struct SpendingFunction {
  double budget = 0.0;
  double exponent = 2.0;

  double operator()(double t) const;
  static SpendingFunction power(double budget, double exponent);
};

// All design-time inputs. sample_sizes (cumulative per arm, one per
// analysis) drive the covariance schedule Sigma_k = M / n_k; information
// levels drive error spending and default to equal spacing.
struct DesignSpec {
  int p = 0;
  int K = 0;
  double alpha = 0.0;
  double beta = 0.0;
  ParamVector theta0;
  ParamVector thetaA;
  CovMatrix nuisance;
  std::shared_ptr<const SummaryStatistic> statistic;
  SpendingFunction alpha_spending;
  SpendingFunction beta_spending;
  // Empty means "equal": I_k / I_K = k / K.
  std::vector<double> information;
  std::vector<double> sample_sizes;

  void validate() const;
  CovMatrix covariance_at(double n) const { return nuisance.scaled(1.0 / n); }
};

// Planned stage-wise error rates psi (efficacy) and xi (futility).
struct StageTargets {
  std::vector<double> psi;
  std::vector<double> xi;
};

// Per-stage futility/efficacy constants on the statistic scale with the
// stage error rates realized by the solving engine.
struct Boundaries {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> realized_psi;
  std::vector<double> realized_xi;

  int stages() const { return static_cast<int>(b.size()); }
};

// Stage-wise stopping probabilities of a fixed boundary set under one
// hypothesis: reject[k] = P(continue through k-1 stages, reject at k).
struct StageProbabilities {
  std::vector<double> reject;
  std::vector<double> accept;
};

enum class Region { Accept, Reject, Continue };

// Resolves the spending schedule: explicit levels, or i_max * k / K.
std::vector<double> resolve_information(const DesignSpec& spec, double i_max);

// Stage targets from the spending functions at information fractions
// I_k / i_max; the increment at the first stage reaching i_max spends the
// remaining budget and later stages get zero.
StageTargets stage_targets(std::span<const double> information, double i_max,
                           const SpendingFunction& alpha_spending,
                           const SpendingFunction& beta_spending);
StageTargets stage_targets(const DesignSpec& spec, double i_max);

// Decision for a statistic value at stage k (1-based). Rejection is closed:
// Reject iff value >= b_k, Accept iff value < a_k.
Region region_of(const Boundaries& boundaries, int k, double delta_value);

// Candidate null point with the largest total type 1 error, evaluated by the
// active engine through psi_eval; ties keep the first occurrence.
ParamVector worst_case_null(
    std::span<const ParamVector> candidates,
    const std::function<std::vector<double>(const ParamVector&)>& psi_eval);

// Information corresponding to a per-arm sample size n under Sigma = M/n:
// I = n^(p/2) |M|^(-1/2), and its inverse.
double info_from_n(double n, const CovMatrix& nuisance);
double n_from_info(double info, const CovMatrix& nuisance);

}  // namespace mgst
