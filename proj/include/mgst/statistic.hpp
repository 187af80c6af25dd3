#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mgst/linalg.hpp"

namespace mgst {

// Global summary statistic: a scalar function of the treatment-effect
// vector, with a gradient and inversion in the last coordinate. The declared
// maximum root count bounds how many solutions last_coord_roots may return
// for any (prefix, level) query; exceeding it is a configuration error.
class SummaryStatistic {
 public:
  virtual ~SummaryStatistic() = default;

  virtual int dim() const = 0;
  virtual int max_roots() const = 0;
  virtual std::string name() const = 0;

  virtual double evaluate(std::span<const double> theta) const = 0;

  // Partial derivatives; the default uses central differences with step
  // max(1e-6, 1e-6 |theta_j|).
  virtual ParamVector gradient(std::span<const double> theta) const;

  // All t with evaluate(prefix ++ t) == level, strictly increasing, possibly
  // empty. [lo, hi] is the axis extent of interest: the default bracketing
  // search scans it and may omit roots outside; analytic overrides return
  // every root regardless.
  virtual std::vector<double> last_coord_roots(std::span<const double> prefix, double level,
                                               double lo, double hi) const;

 protected:
  void require_dim(std::span<const double> theta) const;
  int scan_intervals_ = 141;
};

// Weighted sum of endpoints. The last weight must be nonzero so the last
// coordinate can be inverted.
class LinearStatistic final : public SummaryStatistic {
 public:
  explicit LinearStatistic(std::vector<double> weights);

  int dim() const override { return static_cast<int>(weights_.size()); }
  int max_roots() const override { return 1; }
  std::string name() const override { return "linear"; }
  const std::vector<double>& weights() const { return weights_; }

  double evaluate(std::span<const double> theta) const override;
  ParamVector gradient(std::span<const double> theta) const override;
  std::vector<double> last_coord_roots(std::span<const double> prefix, double level, double lo,
                                       double hi) const override;

 private:
  std::vector<double> weights_;
};

// Two-endpoint product with the sign flipped when both effects are adverse:
// theta1*theta2 when theta1 >= 0 or theta2 >= 0, else -theta1*theta2.
class SignedProductStatistic final : public SummaryStatistic {
 public:
  int dim() const override { return 2; }
  int max_roots() const override { return 2; }
  std::string name() const override { return "signed_product"; }

  double evaluate(std::span<const double> theta) const override;
  ParamVector gradient(std::span<const double> theta) const override;
  std::vector<double> last_coord_roots(std::span<const double> prefix, double level, double lo,
                                       double hi) const override;
};

// User-supplied statistic driven by a callable; gradient and inversion fall
// back to the numeric defaults. scan_intervals controls the root search
// resolution over the queried axis extent. Avoid cyclic sections (for
// example sin(theta1 * theta2)): their level sets have unbounded root
// counts, which the declared maximum will reject at query time.
class CallableStatistic final : public SummaryStatistic {
 public:
  CallableStatistic(std::string name, int dim, int max_roots,
                    std::function<double(std::span<const double>)> fn, int scan_intervals = 141);

  int dim() const override { return dim_; }
  int max_roots() const override { return max_roots_; }
  std::string name() const override { return name_; }
  double evaluate(std::span<const double> theta) const override;

 private:
  std::string name_;
  int dim_ = 0;
  int max_roots_ = 0;
  std::function<double(std::span<const double>)> fn_;
};

std::shared_ptr<const SummaryStatistic> make_linear_statistic(std::vector<double> weights);
std::shared_ptr<const SummaryStatistic> make_signed_product_statistic();

}  // namespace mgst
