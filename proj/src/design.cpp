#include "mgst/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgst/errors.hpp"

namespace mgst {

double SpendingFunction::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return budget;
  return budget * std::pow(t, exponent);
}

SpendingFunction SpendingFunction::power(double budget, double exponent) {
  if (!(budget > 0.0 && budget < 1.0)) throw config_error("spending budget must lie in (0, 1)");
  if (!(exponent > 0.0)) throw config_error("spending exponent must be positive");
  return SpendingFunction{budget, exponent};
}

void DesignSpec::validate() const {
  if (K < 1) throw config_error("invalid analysis count");
  if (p < 1) throw config_error("invalid endpoint count");
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw config_error("beta must lie in (0, 1)");
  if (static_cast<int>(theta0.size()) != p || static_cast<int>(thetaA.size()) != p)
    throw config_error("hypothesis points must have one entry per endpoint");
  require_finite(theta0, "theta0");
  require_finite(thetaA, "thetaA");
  if (nuisance.dim() != p) throw config_error("nuisance matrix dimension must match endpoints");
  nuisance.require_positive_definite();
  if (!statistic) throw config_error("no summary statistic configured");
  if (statistic->dim() != p) throw config_error("statistic dimension must match endpoints");
  if (!(statistic->evaluate(thetaA) > statistic->evaluate(theta0)))
    throw config_error("statistic at thetaA must exceed statistic at theta0");
  if (!information.empty()) {
    if (static_cast<int>(information.size()) != K)
      throw config_error("information schedule must have one level per analysis");
    double prev = 0.0;
    for (double v : information) {
      if (!(v > prev)) throw config_error("information schedule must be strictly increasing");
      prev = v;
    }
  }
  if (!sample_sizes.empty()) {
    if (static_cast<int>(sample_sizes.size()) != K)
      throw config_error("sample size schedule must have one entry per analysis");
    double prev = 0.0;
    for (double v : sample_sizes) {
      if (!(v > prev)) throw config_error("sample sizes must be strictly increasing");
      prev = v;
    }
  }
}

std::vector<double> resolve_information(const DesignSpec& spec, double i_max) {
  if (!spec.information.empty()) return spec.information;
  std::vector<double> levels(spec.K);
  for (int k = 0; k < spec.K; ++k) levels[k] = i_max * (k + 1) / spec.K;
  return levels;
}

StageTargets stage_targets(std::span<const double> information, double i_max,
                           const SpendingFunction& alpha_spending,
                           const SpendingFunction& beta_spending) {
  if (!(i_max > 0.0)) throw config_error("maximum information must be positive");
  const int K = static_cast<int>(information.size());
  StageTargets targets;
  targets.psi.resize(K);
  targets.xi.resize(K);
  double prev = 0.0;
  double cum1 = 0.0, cum2 = 0.0;
  for (int k = 0; k < K; ++k) {
    if (!(information[k] > prev))
      throw schedule_error("information levels must be strictly increasing");
    prev = information[k];
    const double t = information[k] / i_max;
    const double c1 = alpha_spending(t);
    const double c2 = beta_spending(t);
    targets.psi[k] = std::max(0.0, c1 - cum1);
    targets.xi[k] = std::max(0.0, c2 - cum2);
    cum1 = c1;
    cum2 = c2;
  }
  return targets;
}

StageTargets stage_targets(const DesignSpec& spec, double i_max) {
  std::vector<double> levels = resolve_information(spec, i_max);
  return stage_targets(levels, i_max, spec.alpha_spending, spec.beta_spending);
}

Region region_of(const Boundaries& boundaries, int k, double delta_value) {
  if (k < 1 || k > boundaries.stages()) throw config_error("stage index out of range");
  if (delta_value >= boundaries.b[k - 1]) return Region::Reject;
  if (delta_value < boundaries.a[k - 1]) return Region::Accept;
  return Region::Continue;
}

ParamVector worst_case_null(
    std::span<const ParamVector> candidates,
    const std::function<std::vector<double>(const ParamVector&)>& psi_eval) {
  if (candidates.empty()) throw config_error("worst-case null needs at least one candidate");
  std::size_t best = 0;
  double best_total = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::vector<double> psi = psi_eval(candidates[i]);
    double total = pairwise_sum(psi);
    if (total > best_total) {
      best_total = total;
      best = i;
    }
  }
  return candidates[best];
}

double info_from_n(double n, const CovMatrix& nuisance) {
  return std::pow(n, 0.5 * nuisance.dim()) / std::sqrt(nuisance.determinant());
}

double n_from_info(double info, const CovMatrix& nuisance) {
  return std::pow(info * std::sqrt(nuisance.determinant()), 2.0 / nuisance.dim());
}

}  // namespace mgst
