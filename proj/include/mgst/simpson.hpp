#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mgst/design.hpp"
#include "mgst/gaussian.hpp"
#include "mgst/statistic.hpp"

namespace mgst::simpson {

// Quadrature axis: 6r-1 base points (log-spaced tails, linear middle,
// scaled to center +- sqrt(variance)) interleaved with midpoints into
// 12r-3 nodes carrying composite Simpson weights.
struct Axis {
  std::vector<double> base;
  std::vector<double> nodes;
  std::vector<double> weights;

  double lo() const { return nodes.front(); }
  double hi() const { return nodes.back(); }
  int size() const { return static_cast<int>(nodes.size()); }
};

Axis build_axis(double center, double variance, int r);

// Composite Simpson weights for midpoint-interleaved nodes (odd count >= 3).
std::vector<double> simpson_weights(std::span<const double> nodes);

// Axis restricted to [lo, hi]: interior base points are kept, the interval
// ends become new base points, midpoints are re-interleaved and weights
// recomputed. grid_index maps each node back to the parent axis (-1 for new
// points). Empty when the clipped interval has no width.
struct TrimmedGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> grid_index;

  bool empty() const { return nodes.empty(); }
};
TrimmedGrid trim_axis(const Axis& axis, double lo, double hi);

// Partition of the last-coordinate axis induced by the level sets
// Delta = lower and Delta = upper at a fixed prefix. cuts start at -inf and
// end at +inf; in_target[s] says whether segment s satisfies
// lower <= Delta < upper, decided at the segment midpoint with unbounded
// ends clipped to the axis range first.
struct SegmentSlice {
  std::vector<double> cuts;
  std::vector<char> in_target;

  int segments() const { return static_cast<int>(in_target.size()); }
};
SegmentSlice slice_axis(const SummaryStatistic& stat, std::span<const double> prefix,
                        double lower, double upper, std::pair<double, double> axis_range);

// Stored subdensity layer for one analysis: per-dimension axes, values at
// every node tuple, and an evaluator for off-grid points (the closed-form
// density at the first analysis, the frozen propagation sum afterwards).
class GridLayer {
 public:
  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int j) const { return axes_[j]; }
  const std::vector<double>& values() const { return values_; }
  double value_at(std::size_t flat_index) const { return values_[flat_index]; }

  // Subdensity at an arbitrary point.
  double eval(std::span<const double> point) const;

  double total_mass() const;
  // Range of the summary statistic over the node tuples, for root brackets.
  std::pair<double, double> statistic_range(const SummaryStatistic& stat) const;

  static GridLayer from_marginal(std::vector<Axis> axes, std::vector<double> values,
                                 ParamVector mean, const CovMatrix& cov);

 private:
  friend GridLayer first_layer(const ParamVector&, const CovMatrix&, int, int);
  friend GridLayer propagate_layer(const GridLayer&, double, double, const SummaryStatistic&,
                                   const ParamVector&, const CovMatrix&, const CovMatrix&, int,
                                   int);

  std::vector<Axis> axes_;
  std::vector<double> values_;

  // First analysis: closed-form marginal density.
  std::optional<MvnShape> marginal_;
  ParamVector marginal_mean_;
  // Later analyses: continuation mass of the previous layer collapsed to
  // weighted conditional means, integrated through the transition kernel.
  std::optional<MvnShape> kernel_;
  std::vector<double> source_means_;  // flattened, dim() per entry
  std::vector<double> source_mass_;
};

GridLayer first_layer(const ParamVector& theta, const CovMatrix& sigma1, int r, int workers);

// Carries the subdensity through the continuation region [a_prev, b_prev):
// previous-layer mass is gathered per prefix over the sliced last axis
// (trimmed per segment) and pushed through the conditional density onto a
// fresh unbounded grid for the next analysis.
GridLayer propagate_layer(const GridLayer& prev, double a_prev, double b_prev,
                          const SummaryStatistic& stat, const ParamVector& theta,
                          const CovMatrix& sigma_prev, const CovMatrix& sigma_curr, int r,
                          int workers);

enum class RegionSide { Accept, Reject };

// Integral of the layer over {Delta < bound} (Accept) or {Delta >= bound}
// (Reject).
double stage_probability(const GridLayer& layer, RegionSide side, double bound,
                         const SummaryStatistic& stat, int workers);

// Boundary whose stage probability equals target: bracketed bisection from
// seed to 1e-8 on the statistic scale or 1e-10 on the probability scale.
double solve_stage_bound(const GridLayer& layer, RegionSide side, double target, double seed,
                         const SummaryStatistic& stat, int workers);

struct Options {
  int r = 6;
  int workers = 1;
};

// Stage-wise boundary constants meeting the target error rates under the
// covariance schedule Sigma_k = M / n_k; the final stage is closed with
// a_K = b_K from the efficacy side.
Boundaries solve_boundaries(const DesignSpec& spec, const StageTargets& targets,
                            std::span<const double> n_schedule, const Options& opt);

// Stage-wise stopping probabilities of fixed boundaries under one
// hypothesis point.
StageProbabilities evaluate_probabilities(const DesignSpec& spec, const Boundaries& boundaries,
                                          const ParamVector& theta,
                                          std::span<const double> n_schedule,
                                          const Options& opt);

}  // namespace mgst::simpson
