#include "mgst/simpson.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "mgst/errors.hpp"
#include "mgst/parallel.hpp"

namespace mgst::simpson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double merge_tol(double a, double b) {
  return 1e-12 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::vector<double> interleave_midpoints(std::span<const double> base) {
  const std::size_t m = base.size();
  std::vector<double> nodes(2 * m - 1);
  for (std::size_t i = 0; i < m; ++i) nodes[2 * i] = base[i];
  for (std::size_t i = 0; i + 1 < m; ++i) nodes[2 * i + 1] = 0.5 * (base[i] + base[i + 1]);
  return nodes;
}

// Flat-index helpers for row-major tensors over per-dimension node counts.
struct TensorShape {
  std::vector<std::size_t> dims;
  std::vector<std::size_t> strides;
  std::size_t total = 1;

  explicit TensorShape(const std::vector<Axis>& axes) {
    dims.reserve(axes.size());
    for (const Axis& ax : axes) dims.push_back(static_cast<std::size_t>(ax.size()));
    strides.assign(dims.size(), 1);
    for (int j = static_cast<int>(dims.size()) - 2; j >= 0; --j)
      strides[j] = strides[j + 1] * dims[j + 1];
    for (std::size_t d : dims) total *= d;
  }

  void unflatten(std::size_t flat, std::span<std::size_t> idx) const {
    for (std::size_t j = 0; j < dims.size(); ++j) {
      idx[j] = flat / strides[j];
      flat -= idx[j] * strides[j];
    }
  }
};

}  // namespace

std::vector<double> simpson_weights(std::span<const double> nodes) {
  const std::size_t m = nodes.size();
  if (m == 1) return {0.0};
  if (m < 3 || m % 2 == 0)
    throw config_error("Simpson weights need an odd node count of at least 3");
  std::vector<double> w(m);
  w[0] = (nodes[2] - nodes[0]) / 6.0;
  w[m - 1] = (nodes[m - 1] - nodes[m - 3]) / 6.0;
  for (std::size_t i = 2; i + 2 < m; i += 2) w[i] = (nodes[i + 2] - nodes[i - 2]) / 6.0;
  for (std::size_t i = 1; i < m; i += 2) w[i] = 4.0 * (nodes[i + 1] - nodes[i - 1]) / 6.0;
  return w;
}

Axis build_axis(double center, double variance, int r) {
  if (r < 1) throw config_error("grid size parameter must be at least 1");
  if (!(variance > 0.0)) throw config_error("axis variance must be positive");
  const double scale = std::sqrt(variance);
  const int nbase = 6 * r - 1;
  Axis axis;
  axis.base.resize(nbase);
  for (int i = 1; i <= nbase; ++i) {
    double phi;
    if (i <= r - 1) {
      phi = -3.0 - 4.0 * std::log(static_cast<double>(r) / i);
    } else if (i <= 5 * r) {
      phi = -3.0 + 3.0 * (i - r) / (2.0 * r);
    } else {
      // Mirror of the left tail.
      phi = 3.0 + 4.0 * std::log(static_cast<double>(r) / (6 * r - i));
    }
    axis.base[i - 1] = center + scale * phi;
  }
  axis.nodes = interleave_midpoints(axis.base);
  axis.weights = simpson_weights(axis.nodes);
  return axis;
}

TrimmedGrid trim_axis(const Axis& axis, double lo, double hi) {
  TrimmedGrid out;
  lo = std::max(lo, axis.lo());
  hi = std::min(hi, axis.hi());
  if (!(lo < hi)) return out;

  // Base points strictly inside (lo, hi); points within merge tolerance of
  // an end collapse onto it.
  const auto& base = axis.base;
  std::size_t first = 0;
  while (first < base.size() && base[first] <= lo + merge_tol(base[first], lo)) ++first;
  std::size_t last = base.size();
  while (last > first && base[last - 1] >= hi - merge_tol(base[last - 1], hi)) --last;

  std::vector<double> newbase;
  std::vector<int> parent;  // base index in the parent axis, -1 for new points
  newbase.reserve(last - first + 2);
  parent.reserve(last - first + 2);
  const bool lo_on_grid = first > 0 && std::fabs(base[first - 1] - lo) <= merge_tol(base[first - 1], lo);
  newbase.push_back(lo);
  parent.push_back(lo_on_grid ? static_cast<int>(first - 1) : -1);
  for (std::size_t i = first; i < last; ++i) {
    newbase.push_back(base[i]);
    parent.push_back(static_cast<int>(i));
  }
  const bool hi_on_grid = last < base.size() && std::fabs(base[last] - hi) <= merge_tol(base[last], hi);
  newbase.push_back(hi);
  parent.push_back(hi_on_grid ? static_cast<int>(last) : -1);

  out.nodes = interleave_midpoints(newbase);
  out.weights = simpson_weights(out.nodes);
  out.grid_index.assign(out.nodes.size(), -1);
  for (std::size_t e = 0; e < newbase.size(); ++e) {
    if (parent[e] >= 0) out.grid_index[2 * e] = 2 * parent[e];
    if (e + 1 < newbase.size() && parent[e] >= 0 && parent[e + 1] == parent[e] + 1)
      out.grid_index[2 * e + 1] = 2 * parent[e] + 1;
  }
  return out;
}

SegmentSlice slice_axis(const SummaryStatistic& stat, std::span<const double> prefix,
                        double lower, double upper, std::pair<double, double> axis_range) {
  if (!(lower <= upper)) throw config_error("slice levels must satisfy lower <= upper");
  std::vector<double> cuts;
  cuts.push_back(-kInf);
  for (double level : {lower, upper}) {
    if (!std::isfinite(level)) continue;
    std::vector<double> roots =
        stat.last_coord_roots(prefix, level, axis_range.first, axis_range.second);
    cuts.insert(cuts.end(), roots.begin(), roots.end());
  }
  cuts.push_back(kInf);
  std::sort(cuts.begin(), cuts.end());
  auto dup = std::unique(cuts.begin(), cuts.end(), [](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && std::fabs(x - y) <= merge_tol(x, y);
  });
  cuts.erase(dup, cuts.end());

  SegmentSlice slice;
  slice.cuts = cuts;
  slice.in_target.resize(cuts.size() - 1);
  ParamVector point(prefix.begin(), prefix.end());
  point.push_back(0.0);
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double clo = std::clamp(cuts[s], axis_range.first, axis_range.second);
    const double chi = std::clamp(cuts[s + 1], axis_range.first, axis_range.second);
    point.back() = 0.5 * (clo + chi);
    const double v = stat.evaluate(point);
    slice.in_target[s] = (lower <= v && v < upper) ? 1 : 0;
  }
  return slice;
}

double GridLayer::eval(std::span<const double> point) const {
  if (marginal_) return marginal_->density(point, marginal_mean_);
  const MvnShape& shape = *kernel_;
  const auto& inv = shape.inverse();
  const double* mp = source_means_.data();
  const std::size_t n = source_mass_.size();
  double acc = 0.0;
  const int p = dim();
  if (p == 1) {
    const double i00 = inv[0];
    const double u0 = point[0];
    for (std::size_t s = 0; s < n; ++s) {
      const double d0 = u0 - mp[s];
      acc += source_mass_[s] * std::exp(-0.5 * i00 * d0 * d0);
    }
  } else if (p == 2) {
    const double i00 = inv[0], i01 = inv[1], i11 = inv[3];
    const double u0 = point[0], u1 = point[1];
    for (std::size_t s = 0; s < n; ++s, mp += 2) {
      const double d0 = u0 - mp[0], d1 = u1 - mp[1];
      acc += source_mass_[s] *
             std::exp(-0.5 * (i00 * d0 * d0 + 2.0 * i01 * d0 * d1 + i11 * d1 * d1));
    }
  } else {
    for (std::size_t s = 0; s < n; ++s, mp += p) {
      double q = 0.0;
      for (int i = 0; i < p; ++i) {
        const double di = point[i] - mp[i];
        q += inv[i * p + i] * di * di;
        for (int j = i + 1; j < p; ++j) q += 2.0 * inv[i * p + j] * di * (point[j] - mp[j]);
      }
      acc += source_mass_[s] * std::exp(-0.5 * q);
    }
  }
  return shape.norm_const() * acc;
}

double GridLayer::total_mass() const {
  TensorShape shape(axes_);
  const int p = dim();
  std::vector<std::size_t> idx(p);
  std::vector<double> terms(shape.total);
  for (std::size_t f = 0; f < shape.total; ++f) {
    shape.unflatten(f, idx);
    double w = 1.0;
    for (int j = 0; j < p; ++j) w *= axes_[j].weights[idx[j]];
    terms[f] = w * values_[f];
  }
  return pairwise_sum(terms);
}

std::pair<double, double> GridLayer::statistic_range(const SummaryStatistic& stat) const {
  TensorShape shape(axes_);
  const int p = dim();
  std::vector<std::size_t> idx(p);
  ParamVector point(p);
  double lo = kInf, hi = -kInf;
  for (std::size_t f = 0; f < shape.total; ++f) {
    shape.unflatten(f, idx);
    for (int j = 0; j < p; ++j) point[j] = axes_[j].nodes[idx[j]];
    const double v = stat.evaluate(point);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

GridLayer GridLayer::from_marginal(std::vector<Axis> axes, std::vector<double> values,
                                   ParamVector mean, const CovMatrix& cov) {
  GridLayer layer;
  layer.axes_ = std::move(axes);
  layer.values_ = std::move(values);
  layer.marginal_.emplace(cov);
  layer.marginal_mean_ = std::move(mean);
  return layer;
}

GridLayer first_layer(const ParamVector& theta, const CovMatrix& sigma1, int r, int workers) {
  const int p = sigma1.dim();
  if (static_cast<int>(theta.size()) != p)
    throw config_error("hypothesis point dimension does not match covariance");
  GridLayer layer;
  layer.axes_.reserve(p);
  for (int j = 0; j < p; ++j) layer.axes_.push_back(build_axis(theta[j], sigma1(j, j), r));
  layer.marginal_.emplace(sigma1);
  layer.marginal_mean_ = theta;

  TensorShape shape(layer.axes_);
  layer.values_.resize(shape.total);
  const MvnShape& density = *layer.marginal_;
  auto* axes = &layer.axes_;
  auto* values = &layer.values_;
  parallel_for(shape.total, workers, [&, axes, values](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> idx(p);
    ParamVector point(p);
    for (std::size_t f = lo; f < hi; ++f) {
      shape.unflatten(f, idx);
      for (int j = 0; j < p; ++j) point[j] = (*axes)[j].nodes[idx[j]];
      (*values)[f] = density.density(point, theta);
    }
  });
  return layer;
}

namespace {

// Continuation mass of a layer between statistic levels [lower, upper),
// collapsed to conditional means and weights for the next transition.
void gather_continuation(const GridLayer& prev, double lower, double upper,
                         const SummaryStatistic& stat, const ConditionalKernel& kernel,
                         std::vector<double>& means, std::vector<double>& mass) {
  const int p = prev.dim();
  const Axis& last = prev.axis(p - 1);
  std::vector<Axis> prefix_axes;
  for (int j = 0; j + 1 < p; ++j) prefix_axes.push_back(prev.axis(j));
  std::size_t nprefix = 1;
  for (const Axis& ax : prefix_axes) nprefix *= ax.size();
  const std::size_t mlast = static_cast<std::size_t>(last.size());

  std::vector<std::size_t> idx(std::max(p - 1, 1));
  ParamVector prefix(p - 1);
  ParamVector point(p);
  for (std::size_t f = 0; f < nprefix; ++f) {
    std::size_t rem = f;
    double wprefix = 1.0;
    for (int j = p - 2; j >= 0; --j) {
      idx[j] = rem % prefix_axes[j].size();
      rem /= prefix_axes[j].size();
      prefix[j] = prefix_axes[j].nodes[idx[j]];
      wprefix *= prefix_axes[j].weights[idx[j]];
      point[j] = prefix[j];
    }
    SegmentSlice slice = slice_axis(stat, prefix, lower, upper, {last.lo(), last.hi()});
    for (int s = 0; s < slice.segments(); ++s) {
      if (!slice.in_target[s]) continue;
      TrimmedGrid grid = trim_axis(last, slice.cuts[s], slice.cuts[s + 1]);
      if (grid.empty()) continue;
      for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        point[p - 1] = grid.nodes[i];
        double g;
        if (grid.grid_index[i] >= 0) {
          g = prev.value_at(f * mlast + static_cast<std::size_t>(grid.grid_index[i]));
        } else {
          g = prev.eval(point);
        }
        const double m = wprefix * grid.weights[i] * g;
        ParamVector mu = kernel.conditional_mean(point);
        means.insert(means.end(), mu.begin(), mu.end());
        mass.push_back(m);
      }
    }
  }
}

}  // namespace

GridLayer propagate_layer(const GridLayer& prev, double a_prev, double b_prev,
                          const SummaryStatistic& stat, const ParamVector& theta,
                          const CovMatrix& sigma_prev, const CovMatrix& sigma_curr, int r,
                          int workers) {
  const int p = prev.dim();
  ConditionalKernel kernel(theta, sigma_prev, sigma_curr);

  GridLayer layer;
  layer.kernel_.emplace(kernel.shape());
  gather_continuation(prev, a_prev, b_prev, stat, kernel, layer.source_means_,
                      layer.source_mass_);
  layer.axes_.reserve(p);
  for (int j = 0; j < p; ++j) layer.axes_.push_back(build_axis(theta[j], sigma_curr(j, j), r));

  TensorShape shape(layer.axes_);
  layer.values_.resize(shape.total);
  auto* out = &layer;
  parallel_for(shape.total, workers, [&, out](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> idx(p);
    ParamVector point(p);
    for (std::size_t f = lo; f < hi; ++f) {
      shape.unflatten(f, idx);
      for (int j = 0; j < p; ++j) point[j] = out->axes_[j].nodes[idx[j]];
      out->values_[f] = out->eval(point);
    }
  });
  return layer;
}

double stage_probability(const GridLayer& layer, RegionSide side, double bound,
                         const SummaryStatistic& stat, int workers) {
  const int p = layer.dim();
  const Axis& last = layer.axis(p - 1);
  const double lower = side == RegionSide::Reject ? bound : -kInf;
  const double upper = side == RegionSide::Reject ? kInf : bound;

  std::size_t nprefix = 1;
  for (int j = 0; j + 1 < p; ++j) nprefix *= layer.axis(j).size();
  const std::size_t mlast = static_cast<std::size_t>(last.size());

  std::vector<double> partials(nprefix, 0.0);
  parallel_for(nprefix, workers, [&](std::size_t begin, std::size_t end) {
    ParamVector prefix(p - 1);
    ParamVector point(p);
    for (std::size_t f = begin; f < end; ++f) {
      std::size_t rem = f;
      double wprefix = 1.0;
      for (int j = p - 2; j >= 0; --j) {
        const Axis& ax = layer.axis(j);
        const std::size_t ij = rem % ax.size();
        rem /= ax.size();
        prefix[j] = ax.nodes[ij];
        wprefix *= ax.weights[ij];
        point[j] = prefix[j];
      }
      SegmentSlice slice = slice_axis(stat, prefix, lower, upper, {last.lo(), last.hi()});
      double acc = 0.0;
      for (int s = 0; s < slice.segments(); ++s) {
        if (!slice.in_target[s]) continue;
        TrimmedGrid grid = trim_axis(last, slice.cuts[s], slice.cuts[s + 1]);
        if (grid.empty()) continue;
        for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
          double g;
          if (grid.grid_index[i] >= 0) {
            g = layer.value_at(f * mlast + static_cast<std::size_t>(grid.grid_index[i]));
          } else {
            point[p - 1] = grid.nodes[i];
            g = layer.eval(point);
          }
          acc += grid.weights[i] * g;
        }
      }
      partials[f] = wprefix * acc;
    }
  });
  return pairwise_sum(partials);
}

namespace {

struct RootSolver {
  const GridLayer& layer;
  RegionSide side;
  const SummaryStatistic& stat;
  int workers;
  std::pair<double, double> stat_range;

  double probability(double bound) const {
    return stage_probability(layer, side, bound, stat, workers);
  }

  // Finds the boundary whose stage probability equals target. The
  // probability is monotone in the bound (non-increasing for Reject,
  // non-decreasing for Accept); bisection to 1e-8 on the statistic scale or
  // 1e-10 on the probability scale.
  double solve(double target, double seed) const {
    const double sign = side == RegionSide::Reject ? 1.0 : -1.0;
    auto f = [&](double x) { return probability(x) - target; };
    const double span = std::max(1.0, stat_range.second - stat_range.first);
    double step = 0.05 * span;
    double lo = std::clamp(seed, stat_range.first - span, stat_range.second + span);
    double hi = lo;
    double flo = f(lo);
    double fhi = flo;
    // Expand geometrically until the bracket straddles the target.
    for (int it = 0; sign * flo < 0.0 || sign * fhi > 0.0; ++it) {
      if (it >= 80)
        throw infeasible_design("stage error target " + std::to_string(target) +
                                " is unattainable at the current analysis");
      if (sign * fhi > 0.0) {
        hi += step;
        fhi = f(hi);
      } else {
        lo -= step;
        flo = f(lo);
      }
      step *= 2.0;
      if (hi > stat_range.second + 4.0 * span || lo < stat_range.first - 4.0 * span) {
        if (sign * flo < 0.0 || sign * fhi > 0.0)
          throw infeasible_design("stage error target " + std::to_string(target) +
                                  " is unattainable at the current analysis");
      }
    }
    while (hi - lo > 1e-8) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (std::fabs(fm) <= 1e-10) return mid;
      if (sign * fm >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }
};

}  // namespace

double solve_stage_bound(const GridLayer& layer, RegionSide side, double target, double seed,
                         const SummaryStatistic& stat, int workers) {
  RootSolver solver{layer, side, stat, workers, layer.statistic_range(stat)};
  return solver.solve(target, seed);
}

namespace {

void check_schedule(const DesignSpec& spec, std::span<const double> n_schedule) {
  if (static_cast<int>(n_schedule.size()) != spec.K)
    throw config_error("sample size schedule must have one entry per analysis");
  double prev = 0.0;
  for (double n : n_schedule) {
    if (!(n > prev)) throw config_error("sample sizes must be positive and strictly increasing");
    prev = n;
  }
}

}  // namespace

Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt) {
  spec.validate();
  check_schedule(spec, n_schedule);
  if (static_cast<int>(targets.psi.size()) != spec.K ||
      static_cast<int>(targets.xi.size()) != spec.K)
    throw config_error("stage targets must have one entry per analysis");
  const SummaryStatistic& stat = *spec.statistic;
  const int K = spec.K;

  Boundaries out;
  out.a.resize(K);
  out.b.resize(K);
  out.realized_psi.resize(K);
  out.realized_xi.resize(K);

  CovMatrix cov = spec.covariance_at(n_schedule[0]);
  GridLayer null_layer = first_layer(spec.theta0, cov, opt.r, opt.workers);
  GridLayer alt_layer = first_layer(spec.thetaA, cov, opt.r, opt.workers);

  double seed_b = stat.evaluate(spec.thetaA);
  double seed_a = seed_b;
  for (int k = 0; k < K; ++k) {
    RootSolver upper{null_layer, RegionSide::Reject, stat, opt.workers,
                     null_layer.statistic_range(stat)};
    double b = targets.psi[k] > 0.0 ? upper.solve(targets.psi[k], seed_b) : kInf;
    double a;
    if (k == K - 1) {
      a = b;  // forced termination
    } else if (targets.xi[k] > 0.0) {
      RootSolver lower{alt_layer, RegionSide::Accept, stat, opt.workers,
                       alt_layer.statistic_range(stat)};
      a = lower.solve(targets.xi[k], seed_a);
    } else {
      a = -kInf;
    }
    if (a > b)
      throw infeasible_design("futility and efficacy boundaries cross at analysis " +
                              std::to_string(k + 1));
    out.a[k] = a;
    out.b[k] = b;
    out.realized_psi[k] = stage_probability(null_layer, RegionSide::Reject, b, stat, opt.workers);
    out.realized_xi[k] = stage_probability(alt_layer, RegionSide::Accept, a, stat, opt.workers);
    if (k + 1 < K) {
      CovMatrix next = spec.covariance_at(n_schedule[k + 1]);
      null_layer = propagate_layer(null_layer, a, b, stat, spec.theta0, cov, next, opt.r,
                                   opt.workers);
      alt_layer = propagate_layer(alt_layer, a, b, stat, spec.thetaA, cov, next, opt.r,
                                  opt.workers);
      cov = next;
      seed_b = std::isfinite(b) ? b : seed_b;
      seed_a = std::isfinite(a) ? a : seed_a;
    }
  }
  return out;
}

StageProbabilities evaluate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                          const ParamVector& theta,
                                          std::span<const double> n_schedule,
                                          const Options& opt) {
  spec.validate();
  check_schedule(spec, n_schedule);
  if (boundaries.stages() != spec.K || static_cast<int>(boundaries.a.size()) != spec.K)
    throw config_error("boundaries must have one entry per analysis");
  for (int k = 0; k < spec.K; ++k)
    if (boundaries.a[k] > boundaries.b[k])
      throw config_error("boundaries must satisfy a <= b at every analysis");
  const SummaryStatistic& stat = *spec.statistic;

  StageProbabilities probs;
  probs.reject.resize(spec.K);
  probs.accept.resize(spec.K);

  CovMatrix cov = spec.covariance_at(n_schedule[0]);
  GridLayer layer = first_layer(theta, cov, opt.r, opt.workers);
  for (int k = 0; k < spec.K; ++k) {
    probs.reject[k] =
        stage_probability(layer, RegionSide::Reject, boundaries.b[k], stat, opt.workers);
    probs.accept[k] =
        stage_probability(layer, RegionSide::Accept, boundaries.a[k], stat, opt.workers);
    if (k + 1 < spec.K) {
      CovMatrix next = spec.covariance_at(n_schedule[k + 1]);
      layer = propagate_layer(layer, boundaries.a[k], boundaries.b[k], stat, theta, cov, next,
                              opt.r, opt.workers);
      cov = next;
    }
  }
  return probs;
}

}  // namespace mgst::simpson
