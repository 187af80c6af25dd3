#pragma once

#include <span>
#include <vector>

#include "mgst/linalg.hpp"

namespace mgst {

// Conditional distribution of the stage-k estimate given the stage-(k-1)
// estimate; the covariance may be singular when no information accrues.
struct ConditionalLaw {
  ParamVector mean;
  CovMatrix cov;
};

// p-variate normal density. Throws invalid_covariance for non-PD cov.
double mvn_density(std::span<const double> x, std::span<const double> mean,
                   const CovMatrix& cov);

// Law of theta_hat(k) given theta_hat(k-1) = x_prev under the sequential
// model: mean = theta + S_k S_{k-1}^{-1} (x - theta),
// cov = S_k - S_k S_{k-1}^{-1} S_k (symmetrized).
ConditionalLaw conditional_law(std::span<const double> theta, const CovMatrix& sigma_prev,
                               const CovMatrix& sigma_curr, std::span<const double> x_prev);

// Determinant-based information |Sigma|^(-1/2).
double information(const CovMatrix& cov);

// Precomputed density shape N(., cov): inverse and normalizing constant are
// fixed, the mean is supplied per call. This is the hot kernel of the
// integration engine.
class MvnShape {
 public:
  explicit MvnShape(const CovMatrix& cov);
  int dim() const { return dim_; }
  double density(std::span<const double> x, std::span<const double> mean) const;
  const std::vector<double>& inverse() const { return inv_; }
  double norm_const() const { return norm_; }

 private:
  int dim_ = 0;
  std::vector<double> inv_;
  double norm_ = 0.0;
};

// Transition kernel f(u | v; theta) between consecutive analyses, with the
// conditional mean map mu(v) = theta + B (v - theta) precomputed.
class ConditionalKernel {
 public:
  ConditionalKernel(ParamVector theta, const CovMatrix& sigma_prev, const CovMatrix& sigma_curr);

  int dim() const { return static_cast<int>(theta_.size()); }
  ParamVector conditional_mean(std::span<const double> v) const;
  double density(std::span<const double> u, std::span<const double> v) const;
  const MvnShape& shape() const { return shape_; }
  const CovMatrix& conditional_cov() const { return cond_cov_; }

 private:
  ParamVector theta_;
  std::vector<double> b_;  // row-major p*p
  CovMatrix cond_cov_;
  MvnShape shape_;
};

}  // namespace mgst
