#include "mgst/samplesize.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mgst/errors.hpp"
#include "mgst/normal.hpp"
#include "mgst/simpson.hpp"

namespace mgst::samplesize {

namespace {

// First-analysis layers rebuilt cheaply for each trial size: the
// standardized grid and density depend only on the correlation shape, so a
// new n only rescales nodes, weights and values.
class ScaledFirstLayer {
 public:
  ScaledFirstLayer(const ParamVector& theta, const CovMatrix& nuisance, int r, int workers)
      : theta_(theta), nuisance_(nuisance) {
    const int p = nuisance.dim();
    std::vector<double> corr(static_cast<std::size_t>(p) * p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        corr[i * p + j] = nuisance(i, j) / std::sqrt(nuisance(i, i) * nuisance(j, j));
    CovMatrix correlation(p, std::move(corr));
    ParamVector origin(p, 0.0);
    standardized_ = std::make_unique<simpson::GridLayer>(
        simpson::first_layer(origin, correlation, r, workers));
  }

  simpson::GridLayer at(double n) const {
    const int p = nuisance_.dim();
    std::vector<simpson::Axis> axes;
    axes.reserve(p);
    double scale = 1.0;
    for (int j = 0; j < p; ++j) {
      const double sigma = std::sqrt(nuisance_(j, j) / n);
      scale *= sigma;
      simpson::Axis ax = standardized_->axis(j);
      for (double& x : ax.nodes) x = theta_[j] + sigma * x;
      for (double& x : ax.base) x = theta_[j] + sigma * x;
      for (double& w : ax.weights) w *= sigma;
      axes.push_back(std::move(ax));
    }
    std::vector<double> values = standardized_->values();
    for (double& v : values) v /= scale;
    return simpson::GridLayer::from_marginal(std::move(axes), std::move(values), theta_,
                                             nuisance_.scaled(1.0 / n));
  }

 private:
  ParamVector theta_;
  CovMatrix nuisance_;
  std::unique_ptr<simpson::GridLayer> standardized_;
};

double fixed_sample_n(const DesignSpec& spec, const SizingOptions& opt) {
  spec.validate();
  const SummaryStatistic& stat = *spec.statistic;
  const double delta0 = stat.evaluate(spec.theta0);
  const double deltaA = stat.evaluate(spec.thetaA);
  if (!(deltaA > delta0))
    throw infeasible_design("power is unattainable: statistic does not separate the hypotheses");

  ScaledFirstLayer null_layer(spec.theta0, spec.nuisance, opt.r_fixed, opt.workers);
  ScaledFirstLayer alt_layer(spec.thetaA, spec.nuisance, opt.r_fixed, opt.workers);

  // P_A(accept at the alpha boundary) - beta, decreasing in n.
  auto excess = [&](double n) {
    simpson::GridLayer l0 = null_layer.at(n);
    const double b = simpson::solve_stage_bound(l0, simpson::RegionSide::Reject, spec.alpha,
                                                deltaA, stat, opt.workers);
    simpson::GridLayer la = alt_layer.at(n);
    return simpson::stage_probability(la, simpson::RegionSide::Accept, b, stat, opt.workers) -
           spec.beta;
  };

  // Seed from the collapsed univariate problem.
  ParamVector g = delta::variance_gradient(spec);
  ParamVector mg = mat_vec(spec.nuisance.entries(), spec.p, g);
  const double z = norm_quantile(1.0 - spec.alpha) + norm_quantile(1.0 - spec.beta);
  double n0 = dot(g, mg) * z * z / ((deltaA - delta0) * (deltaA - delta0));
  if (!(n0 > 0.0) || !std::isfinite(n0)) n0 = 16.0;

  double lo = n0, hi = n0;
  int guard = 0;
  while (excess(lo) < 0.0) {
    lo *= 0.5;
    if (++guard > 70) throw infeasible_design("fixed-sample search failed to bracket below");
  }
  guard = 0;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (++guard > 70) throw infeasible_design("fixed-sample search failed to bracket above");
  }
  while (hi - lo > 1e-4 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

long long ceil_with_guard(double x) {
  return static_cast<long long>(std::ceil(x - 1e-9 * std::max(1.0, std::fabs(x))));
}

}  // namespace

double fixed_information(const DesignSpec& spec, const SizingOptions& opt) {
  return info_from_n(fixed_sample_n(spec, opt), spec.nuisance);
}

SizingResult max_information(const DesignSpec& spec, const SizingOptions& opt) {
  SizingResult out;
  out.i_fix = fixed_information(spec, opt);
  delta::InformationRatio ratio = delta::information_ratio(spec, {opt.r_delta, opt.workers});
  out.i_fix_delta = ratio.i_fix;
  out.i_max_delta = ratio.i_max;
  out.ratio = ratio.ratio;
  out.i_max = out.i_fix * ratio.ratio;
  out.n_fixed_continuous = n_from_info(out.i_fix, spec.nuisance);
  out.n_gst_continuous = n_from_info(out.i_max, spec.nuisance);
  out.n_fixed = ceil_with_guard(out.n_fixed_continuous);
  out.group_size = ceil_with_guard(out.n_gst_continuous / spec.K);
  out.n_schedule.resize(spec.K);
  for (int k = 0; k < spec.K; ++k) out.n_schedule[k] = out.group_size * (k + 1);
  return out;
}

double attained_power(const DesignSpec& designed_with, const CovMatrix& true_m,
                      const SizingOptions& opt, int r_power) {
  designed_with.validate();
  true_m.require_positive_definite();
  if (true_m.dim() != designed_with.p)
    throw config_error("true nuisance matrix dimension must match the design");

  SizingResult sizing = max_information(designed_with, opt);

  // Realized information under the true matrix; the trial stops at the
  // first analysis reaching the designed maximum.
  std::vector<double> info(designed_with.K);
  int k_stop = designed_with.K;
  for (int k = 0; k < designed_with.K; ++k) {
    info[k] = info_from_n(static_cast<double>(sizing.n_schedule[k]), true_m);
    if (info[k] >= sizing.i_max * (1.0 - 1e-12)) {
      k_stop = k + 1;
      break;
    }
  }
  info.resize(k_stop);
  StageTargets targets = stage_targets(info, sizing.i_max, designed_with.alpha_spending,
                                       designed_with.beta_spending);

  DesignSpec actual = designed_with;
  actual.nuisance = true_m;
  actual.K = k_stop;
  actual.information.clear();
  actual.sample_sizes.clear();
  std::vector<double> schedule(k_stop);
  for (int k = 0; k < k_stop; ++k) schedule[k] = static_cast<double>(sizing.n_schedule[k]);

  simpson::Options engine{r_power, opt.workers};
  Boundaries bounds = simpson::solve_boundaries(actual, targets, schedule, engine);
  StageProbabilities probs =
      simpson::evaluate_probabilities(actual, bounds, actual.thetaA, schedule, engine);
  return pairwise_sum(probs.reject);
}

}  // namespace mgst::samplesize
