#include "mgst/gaussian.hpp"

#include <cmath>
#include <utility>

#include "mgst/errors.hpp"

namespace mgst {

namespace {
constexpr double kTwoPi = 6.2831853071795864769252867;

CovMatrix conditional_cov_of(const CovMatrix& sigma_curr, std::span<const double> b) {
  const int p = sigma_curr.dim();
  // cbar = S_k - B S_k, symmetrized afterwards.
  std::vector<double> bs = mat_mul(b, sigma_curr.entries(), p);
  std::vector<double> c(sigma_curr.entries());
  for (int i = 0; i < p * p; ++i) c[i] -= bs[i];
  for (int i = 0; i < p; ++i)
    for (int j = i + 1; j < p; ++j) {
      double s = 0.5 * (c[i * p + j] + c[j * p + i]);
      c[i * p + j] = s;
      c[j * p + i] = s;
    }
  return CovMatrix(p, std::move(c));
}

std::vector<double> transition_matrix(const CovMatrix& sigma_prev, const CovMatrix& sigma_curr) {
  const int p = sigma_curr.dim();
  sigma_prev.require_positive_definite();
  sigma_curr.require_positive_definite();
  // Information must not decrease: S_{k-1} - S_k is PSD.
  CovMatrix diff = sigma_prev.minus(sigma_curr);
  try {
    diff.require_positive_semidefinite();
  } catch (const invalid_covariance&) {
    throw schedule_error("information decreases between analyses");
  }
  // B = S_k S_{k-1}^{-1}
  return mat_mul(sigma_curr.entries(), sigma_prev.inverse().entries(), p);
}

}  // namespace

double mvn_density(std::span<const double> x, std::span<const double> mean,
                   const CovMatrix& cov) {
  if (static_cast<int>(x.size()) != cov.dim() || x.size() != mean.size())
    throw config_error("density dimensions do not agree");
  MvnShape shape(cov);
  return shape.density(x, mean);
}

ConditionalLaw conditional_law(std::span<const double> theta, const CovMatrix& sigma_prev,
                               const CovMatrix& sigma_curr, std::span<const double> x_prev) {
  const int p = sigma_curr.dim();
  if (sigma_prev.dim() != p || static_cast<int>(theta.size()) != p ||
      static_cast<int>(x_prev.size()) != p)
    throw config_error("conditional law dimensions do not agree");
  std::vector<double> b = transition_matrix(sigma_prev, sigma_curr);
  ParamVector centered(p);
  for (int i = 0; i < p; ++i) centered[i] = x_prev[i] - theta[i];
  ParamVector shift = mat_vec(b, p, centered);
  ParamVector mean(p);
  for (int i = 0; i < p; ++i) mean[i] = theta[i] + shift[i];
  return ConditionalLaw{std::move(mean), conditional_cov_of(sigma_curr, b)};
}

double information(const CovMatrix& cov) {
  cov.require_positive_definite();
  return 1.0 / std::sqrt(cov.determinant());
}

MvnShape::MvnShape(const CovMatrix& cov) : dim_(cov.dim()) {
  cov.require_positive_definite();
  inv_ = cov.inverse().entries();
  norm_ = std::pow(kTwoPi, -0.5 * dim_) / std::sqrt(cov.determinant());
}

double MvnShape::density(std::span<const double> x, std::span<const double> mean) const {
  double q = 0.0;
  if (dim_ == 1) {
    double d = x[0] - mean[0];
    q = inv_[0] * d * d;
  } else if (dim_ == 2) {
    double d0 = x[0] - mean[0];
    double d1 = x[1] - mean[1];
    q = inv_[0] * d0 * d0 + 2.0 * inv_[1] * d0 * d1 + inv_[3] * d1 * d1;
  } else {
    for (int i = 0; i < dim_; ++i) {
      double di = x[i] - mean[i];
      q += inv_[i * dim_ + i] * di * di;
      for (int j = i + 1; j < dim_; ++j) q += 2.0 * inv_[i * dim_ + j] * di * (x[j] - mean[j]);
    }
  }
  return norm_ * std::exp(-0.5 * q);
}

ConditionalKernel::ConditionalKernel(ParamVector theta, const CovMatrix& sigma_prev,
                                     const CovMatrix& sigma_curr)
    : theta_(std::move(theta)),
      b_(transition_matrix(sigma_prev, sigma_curr)),
      cond_cov_(conditional_cov_of(sigma_curr, b_)),
      shape_(cond_cov_) {}

ParamVector ConditionalKernel::conditional_mean(std::span<const double> v) const {
  const int p = dim();
  ParamVector centered(p);
  for (int i = 0; i < p; ++i) centered[i] = v[i] - theta_[i];
  ParamVector shift = mat_vec(b_, p, centered);
  for (int i = 0; i < p; ++i) shift[i] += theta_[i];
  return shift;
}

double ConditionalKernel::density(std::span<const double> u, std::span<const double> v) const {
  ParamVector mean = conditional_mean(v);
  return shape_.density(u, mean);
}

}  // namespace mgst
