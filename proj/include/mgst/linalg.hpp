#pragma once

#include <span>
#include <vector>

#include "mgst/errors.hpp"

namespace mgst {

// Treatment-effect vector (one entry per endpoint).
using ParamVector = std::vector<double>;

void require_finite(std::span<const double> v, const char* what);

// Symmetric matrix with cached LDL^T factorization. Construction enforces
// symmetry to 1e-12 relative and finite entries; definiteness is checked by
// the accessors that need it.
class CovMatrix {
 public:
  CovMatrix() = default;
  // Row-major p*p entries.
  CovMatrix(int dim, std::vector<double> entries);
  static CovMatrix identity(int dim);

  int dim() const { return dim_; }
  double operator()(int i, int j) const { return entries_[i * dim_ + j]; }
  const std::vector<double>& entries() const { return entries_; }

  // Throws invalid_covariance unless all pivots exceed 1e-12 * max diagonal.
  void require_positive_definite() const;
  bool is_positive_definite() const;
  // Allows pivots down to -1e-9 * max diagonal (conditional covariances may
  // be singular to rounding).
  void require_positive_semidefinite() const;

  double determinant() const;
  CovMatrix inverse() const;
  // Solves A x = b.
  ParamVector solve(std::span<const double> b) const;
  // Lower-triangular L with L L^T = A; negative pivots within the
  // semidefinite tolerance are clamped to zero.
  std::vector<double> cholesky_factor() const;

  CovMatrix scaled(double factor) const;
  CovMatrix minus(const CovMatrix& other) const;

 private:
  void factorize() const;

  int dim_ = 0;
  std::vector<double> entries_;
  // LDL^T factor: unit lower triangle packed with D on the diagonal.
  mutable std::vector<double> ldlt_;
  mutable bool factored_ = false;
};

// y = A x for a row-major square matrix.
ParamVector mat_vec(std::span<const double> a, int dim, std::span<const double> x);

// C = A B for row-major square matrices.
std::vector<double> mat_mul(std::span<const double> a, std::span<const double> b, int dim);

double dot(std::span<const double> a, std::span<const double> b);

// Deterministic pairwise (tree) summation; independent of chunking.
double pairwise_sum(std::span<const double> terms);

}  // namespace mgst
