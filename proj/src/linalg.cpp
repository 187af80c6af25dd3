#include "mgst/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

namespace mgst {

namespace {
constexpr double kSymTol = 1e-12;
constexpr double kPivotTol = 1e-12;
constexpr double kSemiTol = 1e-9;
}  // namespace

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw config_error(std::string(what) + " must be finite");
  }
}

CovMatrix::CovMatrix(int dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ < 1) throw config_error("covariance dimension must be at least 1");
  if (entries_.size() != static_cast<std::size_t>(dim_) * dim_)
    throw config_error("covariance entry count does not match dimension");
  require_finite(entries_, "covariance entries");
  double scale = 0.0;
  for (double x : entries_) scale = std::max(scale, std::fabs(x));
  for (int i = 0; i < dim_; ++i) {
    for (int j = i + 1; j < dim_; ++j) {
      double a = entries_[i * dim_ + j];
      double b = entries_[j * dim_ + i];
      if (std::fabs(a - b) > kSymTol * std::max(1.0, scale))
        throw invalid_covariance("covariance matrix is not symmetric");
      double s = 0.5 * (a + b);
      entries_[i * dim_ + j] = s;
      entries_[j * dim_ + i] = s;
    }
  }
}

CovMatrix CovMatrix::identity(int dim) {
  std::vector<double> e(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
  return CovMatrix(dim, std::move(e));
}

void CovMatrix::factorize() const {
  if (factored_) return;
  const int n = dim_;
  ldlt_.assign(entries_.begin(), entries_.end());
  // In-place LDL^T without pivoting; D ends up on the diagonal and the unit
  // lower triangle below it.
  for (int j = 0; j < n; ++j) {
    double d = entries_[j * n + j];
    for (int k = 0; k < j; ++k) {
      double l = ldlt_[j * n + k];
      d -= l * l * ldlt_[k * n + k];
    }
    ldlt_[j * n + j] = d;
    for (int i = j + 1; i < n; ++i) {
      double v = entries_[i * n + j];
      for (int k = 0; k < j; ++k)
        v -= ldlt_[i * n + k] * ldlt_[j * n + k] * ldlt_[k * n + k];
      ldlt_[i * n + j] = (d != 0.0) ? v / d : 0.0;
    }
  }
  factored_ = true;
}

void CovMatrix::require_positive_definite() const {
  factorize();
  double maxdiag = 0.0;
  for (int i = 0; i < dim_; ++i) maxdiag = std::max(maxdiag, entries_[i * dim_ + i]);
  const double tol = kPivotTol * std::max(1.0, maxdiag);
  for (int i = 0; i < dim_; ++i) {
    if (!(ldlt_[i * dim_ + i] > tol))
      throw invalid_covariance("covariance matrix is not positive definite");
  }
}

bool CovMatrix::is_positive_definite() const {
  try {
    require_positive_definite();
    return true;
  } catch (const invalid_covariance&) {
    return false;
  }
}

void CovMatrix::require_positive_semidefinite() const {
  factorize();
  double maxdiag = 0.0;
  for (int i = 0; i < dim_; ++i)
    maxdiag = std::max(maxdiag, std::fabs(entries_[i * dim_ + i]));
  const double tol = kSemiTol * std::max(1.0, maxdiag);
  for (int i = 0; i < dim_; ++i) {
    if (ldlt_[i * dim_ + i] < -tol)
      throw invalid_covariance("covariance matrix is not positive semi-definite");
  }
}

double CovMatrix::determinant() const {
  factorize();
  double det = 1.0;
  for (int i = 0; i < dim_; ++i) det *= ldlt_[i * dim_ + i];
  return det;
}

ParamVector CovMatrix::solve(std::span<const double> b) const {
  require_positive_definite();
  const int n = dim_;
  ParamVector x(b.begin(), b.end());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < i; ++k) x[i] -= ldlt_[i * n + k] * x[k];
  for (int i = 0; i < n; ++i) x[i] /= ldlt_[i * n + i];
  for (int i = n - 1; i >= 0; --i)
    for (int k = i + 1; k < n; ++k) x[i] -= ldlt_[k * n + i] * x[k];
  return x;
}

CovMatrix CovMatrix::inverse() const {
  const int n = dim_;
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    ParamVector col = solve(e);
    for (int i = 0; i < n; ++i) inv[i * n + j] = col[i];
  }
  // Symmetrize to kill rounding asymmetry.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = 0.5 * (inv[i * n + j] + inv[j * n + i]);
      inv[i * n + j] = s;
      inv[j * n + i] = s;
    }
  return CovMatrix(n, std::move(inv));
}

std::vector<double> CovMatrix::cholesky_factor() const {
  require_positive_semidefinite();
  const int n = dim_;
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    double d = std::max(ldlt_[i * n + i], 0.0);
    double s = std::sqrt(d);
    l[i * n + i] = s;
    for (int k = i + 1; k < n; ++k) l[k * n + i] = ldlt_[k * n + i] * s;
  }
  return l;
}

CovMatrix CovMatrix::scaled(double factor) const {
  std::vector<double> e(entries_);
  for (double& x : e) x *= factor;
  return CovMatrix(dim_, std::move(e));
}

CovMatrix CovMatrix::minus(const CovMatrix& other) const {
  if (other.dim_ != dim_) throw config_error("covariance dimensions differ");
  std::vector<double> e(entries_);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] -= other.entries_[i];
  return CovMatrix(dim_, std::move(e));
}

ParamVector mat_vec(std::span<const double> a, int dim, std::span<const double> x) {
  ParamVector y(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += a[i * dim + j] * x[j];
    y[i] = s;
  }
  return y;
}

std::vector<double> mat_mul(std::span<const double> a, std::span<const double> b, int dim) {
  std::vector<double> c(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      double aik = a[i * dim + k];
      for (int j = 0; j < dim; ++j) c[i * dim + j] += aik * b[k * dim + j];
    }
  return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double pairwise_sum(std::span<const double> terms) {
  const std::size_t n = terms.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

}  // namespace mgst
