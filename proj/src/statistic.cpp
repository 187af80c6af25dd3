#include "mgst/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mgst/errors.hpp"

namespace mgst {

void SummaryStatistic::require_dim(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != dim())
    throw config_error("statistic input has dimension " + std::to_string(theta.size()) +
                       ", expected " + std::to_string(dim()));
}

ParamVector SummaryStatistic::gradient(std::span<const double> theta) const {
  require_dim(theta);
  ParamVector point(theta.begin(), theta.end());
  ParamVector grad(point.size());
  for (std::size_t j = 0; j < point.size(); ++j) {
    const double h = std::max(1e-6, 1e-6 * std::fabs(point[j]));
    const double saved = point[j];
    point[j] = saved + h;
    const double up = evaluate(point);
    point[j] = saved - h;
    const double down = evaluate(point);
    point[j] = saved;
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

namespace {

void check_root_count(const SummaryStatistic& stat, std::size_t count) {
  if (count > static_cast<std::size_t>(stat.max_roots()))
    throw config_error("statistic '" + stat.name() + "' returned " + std::to_string(count) +
                       " inversion roots, more than its declared maximum of " +
                       std::to_string(stat.max_roots()));
}

std::vector<double> sort_unique(std::vector<double> roots) {
  std::sort(roots.begin(), roots.end());
  auto last = std::unique(roots.begin(), roots.end(), [](double a, double b) {
    return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
  });
  roots.erase(last, roots.end());
  return roots;
}

}  // namespace

std::vector<double> SummaryStatistic::last_coord_roots(std::span<const double> prefix,
                                                       double level, double lo,
                                                       double hi) const {
  if (static_cast<int>(prefix.size()) != dim() - 1)
    throw config_error("inversion prefix has wrong dimension");
  if (!std::isfinite(level)) throw config_error("inversion level must be finite");
  if (!(lo < hi)) return {};
  const int intervals = scan_intervals_;
  ParamVector point(prefix.begin(), prefix.end());
  point.push_back(0.0);
  auto f = [&](double t) {
    point.back() = t;
    return evaluate(point) - level;
  };
  std::vector<double> roots;
  double prev_t = lo;
  double prev_f = f(lo);
  for (int i = 1; i <= intervals; ++i) {
    const double t = lo + (hi - lo) * i / intervals;
    const double ft = f(t);
    if (prev_f == 0.0) {
      roots.push_back(prev_t);
    } else if (ft != 0.0 && std::signbit(ft) != std::signbit(prev_f)) {
      double a = prev_t, b = t, fa = prev_f;
      while (b - a > 1e-10) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if (std::signbit(fm) == std::signbit(fa)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_t = t;
    prev_f = ft;
  }
  if (prev_f == 0.0) roots.push_back(prev_t);
  roots = sort_unique(std::move(roots));
  check_root_count(*this, roots.size());
  return roots;
}

LinearStatistic::LinearStatistic(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw config_error("linear statistic needs at least one weight");
  require_finite(weights_, "linear statistic weights");
  bool any = false;
  for (double w : weights_) any = any || w != 0.0;
  if (!any) throw config_error("linear statistic needs a nonzero weight");
  if (weights_.back() == 0.0)
    throw config_error("linear statistic requires a nonzero last weight");
}

double LinearStatistic::evaluate(std::span<const double> theta) const {
  require_dim(theta);
  return dot(weights_, theta);
}

ParamVector LinearStatistic::gradient(std::span<const double> theta) const {
  require_dim(theta);
  return weights_;
}

std::vector<double> LinearStatistic::last_coord_roots(std::span<const double> prefix,
                                                      double level, double /*lo*/,
                                                      double /*hi*/) const {
  if (static_cast<int>(prefix.size()) != dim() - 1)
    throw config_error("inversion prefix has wrong dimension");
  double rest = 0.0;
  for (std::size_t j = 0; j < prefix.size(); ++j) rest += weights_[j] * prefix[j];
  return {(level - rest) / weights_.back()};
}

double SignedProductStatistic::evaluate(std::span<const double> theta) const {
  require_dim(theta);
  const double prod = theta[0] * theta[1];
  return (theta[0] >= 0.0 || theta[1] >= 0.0) ? prod : -prod;
}

ParamVector SignedProductStatistic::gradient(std::span<const double> theta) const {
  require_dim(theta);
  if (theta[0] >= 0.0 || theta[1] >= 0.0) return {theta[1], theta[0]};
  return {-theta[1], -theta[0]};
}

std::vector<double> SignedProductStatistic::last_coord_roots(std::span<const double> prefix,
                                                             double level, double /*lo*/,
                                                             double /*hi*/) const {
  if (prefix.size() != 1) throw config_error("inversion prefix has wrong dimension");
  const double x = prefix[0];
  if (x > 0.0) return {level / x};
  if (x == 0.0) return {};  // constant zero section; level sets are empty or everything
  // x < 0: the section is t -> x t for t >= 0 and |x| t for t < 0, so the
  // range is (-inf, 0] and negative levels are hit twice.
  if (level > 0.0) return {};
  if (level == 0.0) return {0.0};
  return sort_unique({level / -x, level / x});
}

CallableStatistic::CallableStatistic(std::string name, int dim, int max_roots,
                                     std::function<double(std::span<const double>)> fn,
                                     int scan_intervals)
    : name_(std::move(name)), dim_(dim), max_roots_(max_roots), fn_(std::move(fn)) {
  if (dim_ < 1) throw config_error("statistic dimension must be at least 1");
  if (max_roots_ < 0) throw config_error("declared maximum root count must be nonnegative");
  if (scan_intervals < 2) throw config_error("root scan needs at least 2 subintervals");
  scan_intervals_ = scan_intervals;
}

double CallableStatistic::evaluate(std::span<const double> theta) const {
  require_dim(theta);
  return fn_(theta);
}

std::shared_ptr<const SummaryStatistic> make_linear_statistic(std::vector<double> weights) {
  return std::make_shared<LinearStatistic>(std::move(weights));
}

std::shared_ptr<const SummaryStatistic> make_signed_product_statistic() {
  return std::make_shared<SignedProductStatistic>();
}

}  // namespace mgst
