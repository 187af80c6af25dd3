#include "mgst/delta.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "mgst/errors.hpp"
#include "mgst/normal.hpp"
#include "mgst/simpson.hpp"

namespace mgst::delta {

namespace {

bool is_zero_gradient(const ParamVector& g) {
  for (double v : g)
    if (std::fabs(v) > 1e-12) return false;
  return true;
}

double collapsed_variance(const ParamVector& g, const CovMatrix& sigma) {
  ParamVector sg = mat_vec(sigma.entries(), sigma.dim(), g);
  return dot(g, sg);
}

// The univariate image of the design: identity statistic, hypothesis points
// Delta(theta0) / Delta(thetaA), nuisance g' M g. The sample-size schedule
// carries over unchanged since g' (M/n) g = (g' M g) / n.
DesignSpec univariate_spec(const DesignSpec& spec) {
  spec.validate();
  ParamVector g = variance_gradient(spec);
  const double m = collapsed_variance(g, spec.nuisance);
  if (!(m > 0.0)) throw degenerate_law("collapsed variance is not positive");
  DesignSpec u;
  u.p = 1;
  u.K = spec.K;
  u.alpha = spec.alpha;
  u.beta = spec.beta;
  u.theta0 = {spec.statistic->evaluate(spec.theta0)};
  u.thetaA = {spec.statistic->evaluate(spec.thetaA)};
  u.nuisance = CovMatrix(1, {m});
  u.statistic = make_linear_statistic({1.0});
  u.alpha_spending = spec.alpha_spending;
  u.beta_spending = spec.beta_spending;
  u.information = spec.information;
  u.sample_sizes = spec.sample_sizes;
  return u;
}

}  // namespace

UnivariateLaw approx_law(const SummaryStatistic& stat, std::span<const double> theta,
                         std::span<const double> grad_point,
                         std::span<const CovMatrix> sigmas) {
  ParamVector g = stat.gradient(grad_point);
  if (is_zero_gradient(g))
    throw degenerate_law("statistic gradient vanishes at the expansion point");
  UnivariateLaw law;
  law.mean = stat.evaluate(theta);
  law.variances.reserve(sigmas.size());
  double prev = std::numeric_limits<double>::infinity();
  for (const CovMatrix& sigma : sigmas) {
    const double v = collapsed_variance(g, sigma);
    if (!(v > 0.0)) throw degenerate_law("collapsed variance is not positive");
    if (!(v < prev)) throw schedule_error("collapsed variances must be strictly decreasing");
    law.variances.push_back(v);
    prev = v;
  }
  return law;
}

ParamVector variance_gradient(const DesignSpec& spec) {
  ParamVector g = spec.statistic->gradient(spec.theta0);
  if (is_zero_gradient(g)) g = spec.statistic->gradient(spec.thetaA);
  if (is_zero_gradient(g))
    throw degenerate_law("statistic gradient vanishes at both hypothesis points");
  return g;
}

bool gradient_fallback_used(const DesignSpec& spec) {
  return is_zero_gradient(spec.statistic->gradient(spec.theta0));
}

Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt) {
  DesignSpec u = univariate_spec(spec);
  return simpson::solve_boundaries(u, targets, n_schedule, {opt.r, opt.workers});
}

StageProbabilities evaluate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                          const ParamVector& theta,
                                          std::span<const double> n_schedule,
                                          const Options& opt) {
  DesignSpec u = univariate_spec(spec);
  ParamVector point = {spec.statistic->evaluate(theta)};
  return simpson::evaluate_probabilities(u, boundaries, point, n_schedule, {opt.r, opt.workers});
}

namespace {

// Fixed-sample power shortfall at per-arm size n: the one-analysis design
// rejects at the alpha boundary; returns P_A(accept) - beta, decreasing in n.
double fixed_excess(const DesignSpec& u, double n, const Options& opt) {
  CovMatrix cov = u.covariance_at(n);
  simpson::GridLayer null_layer = simpson::first_layer(u.theta0, cov, opt.r, opt.workers);
  const double b = simpson::solve_stage_bound(null_layer, simpson::RegionSide::Reject, u.alpha,
                                              u.thetaA[0], *u.statistic, opt.workers);
  simpson::GridLayer alt_layer = simpson::first_layer(u.thetaA, cov, opt.r, opt.workers);
  return simpson::stage_probability(alt_layer, simpson::RegionSide::Accept, b, *u.statistic,
                                    opt.workers) -
         u.beta;
}

// Continuous per-arm fixed-sample size of the univariate design.
double fixed_sample_n(const DesignSpec& u, const Options& opt) {
  const double effect = u.thetaA[0] - u.theta0[0];
  if (!(effect > 0.0))
    throw infeasible_design("statistic at thetaA must exceed statistic at theta0");
  const double z = norm_quantile(1.0 - u.alpha) + norm_quantile(1.0 - u.beta);
  double n0 = u.nuisance(0, 0) * z * z / (effect * effect);  // exact for the normal law
  double lo = n0 * 0.5, hi = n0 * 2.0;
  int guard = 0;
  while (fixed_excess(u, lo, opt) < 0.0) {
    lo *= 0.5;
    if (++guard > 70) throw infeasible_design("fixed-sample search failed to bracket below");
  }
  guard = 0;
  while (fixed_excess(u, hi, opt) > 0.0) {
    hi *= 2.0;
    if (++guard > 70) throw infeasible_design("fixed-sample search failed to bracket above");
  }
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (fixed_excess(u, mid, opt) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Final-stage gap a_K - b_K of the error-spending design at maximum per-arm
// size n with equally spaced looks; zero at the required size.
double final_stage_gap(const DesignSpec& u, const StageTargets& targets, double n,
                       const Options& opt) {
  const int K = u.K;
  std::vector<double> schedule(K);
  for (int k = 0; k < K; ++k) schedule[k] = n * (k + 1) / K;
  const SummaryStatistic& stat = *u.statistic;

  CovMatrix cov = u.covariance_at(schedule[0]);
  simpson::GridLayer null_layer = simpson::first_layer(u.theta0, cov, opt.r, opt.workers);
  simpson::GridLayer alt_layer = simpson::first_layer(u.thetaA, cov, opt.r, opt.workers);
  double seed_b = u.thetaA[0];
  double seed_a = seed_b;
  for (int k = 0; k < K; ++k) {
    const double b = simpson::solve_stage_bound(null_layer, simpson::RegionSide::Reject,
                                                targets.psi[k], seed_b, stat, opt.workers);
    const double a = simpson::solve_stage_bound(alt_layer, simpson::RegionSide::Accept,
                                                targets.xi[k], seed_a, stat, opt.workers);
    if (k == K - 1) return a - b;
    if (a > b) throw infeasible_design("boundaries cross before the final analysis");
    CovMatrix next = u.covariance_at(schedule[k + 1]);
    null_layer = simpson::propagate_layer(null_layer, a, b, stat, u.theta0, cov, next, opt.r,
                                          opt.workers);
    alt_layer = simpson::propagate_layer(alt_layer, a, b, stat, u.thetaA, cov, next, opt.r,
                                         opt.workers);
    cov = next;
    seed_b = b;
    seed_a = a;
  }
  return 0.0;
}

}  // namespace

InformationRatio information_ratio(const DesignSpec& spec, const Options& opt) {
  DesignSpec u = univariate_spec(spec);
  const double n_fix = fixed_sample_n(u, opt);

  InformationRatio out;
  out.i_fix = info_from_n(n_fix, spec.nuisance);
  if (spec.K == 1) {
    out.i_max = out.i_fix;
    out.ratio = 1.0;
    return out;
  }

  // Spending targets under the sizing assumption of equal increments.
  std::vector<double> fractions(u.K);
  for (int k = 0; k < u.K; ++k) fractions[k] = static_cast<double>(k + 1) / u.K;
  StageTargets targets = stage_targets(fractions, 1.0, u.alpha_spending, u.beta_spending);

  auto gap = [&](double n) {
    try {
      return final_stage_gap(u, targets, n, opt);
    } catch (const infeasible_design&) {
      return 1.0;  // boundaries crossed early: over-powered, so n is too large
    }
  };
  double lo = n_fix, hi = 1.5 * n_fix;
  int guard = 0;
  while (gap(lo) > 0.0) {
    lo *= 0.75;
    if (++guard > 70) throw infeasible_design("information search failed to bracket below");
  }
  guard = 0;
  while (gap(hi) < 0.0) {
    hi *= 1.5;
    if (++guard > 70) throw infeasible_design("information search failed to bracket above");
  }
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double n_max = 0.5 * (lo + hi);
  out.i_max = info_from_n(n_max, spec.nuisance);
  out.ratio = out.i_max / out.i_fix;
  return out;
}

}  // namespace mgst::delta
