#pragma once

#include <vector>

#include "distembed/types.hpp"

namespace distembed {

struct IctOptions {
  double drop_tol = 1e-3;  // entries below drop_tol * ||A(:,j)|| are dropped
  double shift = 1e-3;     // relative diagonal shift sigma: A + sigma * diag(A)
  int max_retries = 8;     // breakdown retries, shift doubled each time
};

/// Thresholded incomplete Cholesky factor of a symmetric matrix that is
/// positive definite after a relative diagonal shift. Application of the
/// preconditioner solves L L^T z = r.
class IncompleteCholesky {
 public:
  IncompleteCholesky(const SpMat& matrix, const IctOptions& opts = {});

  int size() const { return n_; }
  double shift_used() const { return shift_used_; }
  int retries() const { return retries_; }
  long nonzeros() const { return static_cast<long>(values_.size()); }

  Vector solve(const Vector& r) const;

 private:
  void factor(const SpMat& matrix, double shift);

  int n_ = 0;
  double drop_tol_ = 1e-3;
  double shift_used_ = 0.0;
  int retries_ = 0;
  std::vector<int> col_ptr_;
  std::vector<int> row_idx_;
  std::vector<double> values_;
};

struct PcgOptions {
  double tol = 1e-10;       // relative residual target
  int max_iterations = 0;   // 0: 10 * sqrt(n)
};

struct PcgResult {
  Vector x;             // zero-mean solution
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool deflated_rhs = false;  // b had a nonzero mean that was projected out
};

/// Conjugate gradients on the singular graph Laplacian with the constant
/// nullspace deflated: b and all preconditioned directions are projected to
/// zero mean, and the returned x has exactly zero mean.
PcgResult pcg_solve(const SpMat& laplacian, const Vector& b, const IncompleteCholesky& precond,
                    const PcgOptions& opts = {});

}  // namespace distembed
