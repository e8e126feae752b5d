#include "distembed/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace distembed {

namespace {

struct IctBreakdown {
  int column;
};

}  // namespace

IncompleteCholesky::IncompleteCholesky(const SpMat& matrix, const IctOptions& opts) {
  if (matrix.rows() != matrix.cols()) throw InputError("matrix must be square");
  n_ = static_cast<int>(matrix.rows());
  drop_tol_ = opts.drop_tol;
  double shift = std::max(opts.shift, 0.0);
  for (int attempt = 0;; ++attempt) {
    try {
      factor(matrix, shift);
      shift_used_ = shift;
      retries_ = attempt;
      return;
    } catch (const IctBreakdown& b) {
      if (attempt >= opts.max_retries)
        throw NumericalError("incomplete Cholesky breakdown at column " +
                             std::to_string(b.column) + " after " + std::to_string(attempt) +
                             " retries (shift " + std::to_string(shift) + ")");
      shift = (shift == 0.0) ? 1e-10 : 2.0 * shift;
    }
  }
}

void IncompleteCholesky::factor(const SpMat& matrix, double shift) {
  col_ptr_.assign(static_cast<size_t>(n_) + 1, 0);
  row_idx_.clear();
  values_.clear();
  row_idx_.reserve(static_cast<size_t>(matrix.nonZeros()) / 2 + n_);
  values_.reserve(static_cast<size_t>(matrix.nonZeros()) / 2 + n_);

  // Column 2-norms of the shifted matrix drive the drop rule.
  std::vector<double> col_norm(static_cast<size_t>(n_), 0.0);
  for (int j = 0; j < n_; ++j) {
    double acc = 0.0;
    for (SpMat::InnerIterator it(matrix, j); it; ++it) {
      double v = it.value();
      if (it.row() == j) v *= 1.0 + shift;
      acc += v * v;
    }
    col_norm[j] = std::sqrt(acc);
  }

  // Dense accumulator with an occupancy stamp, plus the classic linked
  // lists over columns that still have entries in row j.
  std::vector<double> work(static_cast<size_t>(n_), 0.0);
  std::vector<int> stamp(static_cast<size_t>(n_), -1);
  std::vector<int> active;
  std::vector<int> list_head(static_cast<size_t>(n_), -1);
  std::vector<int> list_next(static_cast<size_t>(n_), -1);
  std::vector<int> cursor(static_cast<size_t>(n_), 0);

  for (int j = 0; j < n_; ++j) {
    active.clear();
    auto put = [&](int i, double v) {
      if (stamp[i] != j) {
        stamp[i] = j;
        work[i] = v;
        active.push_back(i);
      } else {
        work[i] += v;
      }
    };

    for (SpMat::InnerIterator it(matrix, j); it; ++it) {
      if (it.row() < j) continue;
      double v = it.value();
      if (it.row() == j) v *= 1.0 + shift;
      put(static_cast<int>(it.row()), v);
    }
    if (stamp[j] != j) put(j, 0.0);

    // Subtract contributions of earlier columns with an entry in row j.
    int k = list_head[j];
    while (k >= 0) {
      int next_k = list_next[k];
      const int p0 = cursor[k];
      const double ljk = values_[p0];
      for (int p = p0; p < col_ptr_[k + 1]; ++p) put(row_idx_[p], -ljk * values_[p]);
      if (p0 + 1 < col_ptr_[k + 1]) {
        cursor[k] = p0 + 1;
        int r = row_idx_[p0 + 1];
        list_next[k] = list_head[r];
        list_head[r] = k;
      }
      k = next_k;
    }

    double pivot = work[j];
    if (!(pivot > 0.0) || !std::isfinite(pivot)) throw IctBreakdown{j};
    pivot = std::sqrt(pivot);

    const double keep = drop_tol_ * col_norm[j];
    std::sort(active.begin(), active.end());
    const int col_start = static_cast<int>(row_idx_.size());
    row_idx_.push_back(j);
    values_.push_back(pivot);
    for (int i : active) {
      if (i <= j) continue;
      double v = work[i] / pivot;
      if (std::abs(v) < keep) continue;
      row_idx_.push_back(i);
      values_.push_back(v);
    }
    col_ptr_[j + 1] = static_cast<int>(row_idx_.size());

    if (col_ptr_[j + 1] - col_start > 1) {
      cursor[j] = col_start + 1;
      int r = row_idx_[col_start + 1];
      list_next[j] = list_head[r];
      list_head[r] = j;
    }
  }
}

Vector IncompleteCholesky::solve(const Vector& r) const {
  Vector y = r;
  for (int j = 0; j < n_; ++j) {
    const int p0 = col_ptr_[j];
    y(j) /= values_[p0];
    const double yj = y(j);
    for (int p = p0 + 1; p < col_ptr_[j + 1]; ++p) y(row_idx_[p]) -= values_[p] * yj;
  }
  for (int j = n_ - 1; j >= 0; --j) {
    const int p0 = col_ptr_[j];
    double acc = y(j);
    for (int p = p0 + 1; p < col_ptr_[j + 1]; ++p) acc -= values_[p] * y(row_idx_[p]);
    y(j) = acc / values_[p0];
  }
  return y;
}

namespace {

void project_zero_mean(Vector& v) {
  v.array() -= v.mean();
}

}  // namespace

PcgResult pcg_solve(const SpMat& laplacian, const Vector& b, const IncompleteCholesky& precond,
                    const PcgOptions& opts) {
  const int n = static_cast<int>(laplacian.rows());
  if (b.size() != n) throw InputError("right-hand side size mismatch");

  PcgResult result;
  Vector bp = b;
  double mean = bp.mean();
  result.deflated_rhs = std::abs(mean) > 1e-14 * (1.0 + bp.cwiseAbs().maxCoeff());
  project_zero_mean(bp);

  const double bnorm = bp.norm();
  result.x = Vector::Zero(n);
  if (bnorm == 0.0) {
    result.converged = true;
    return result;
  }

  const int maxit =
      opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(10.0 * std::sqrt(double(n))) + 1;

  Vector x = Vector::Zero(n);
  Vector r = bp;
  Vector z = precond.solve(r);
  project_zero_mean(z);
  Vector p = z;
  double rz = r.dot(z);

  Vector best_x = x;
  double best_res = r.norm();

  int it = 0;
  for (; it < maxit; ++it) {
    Vector q = laplacian * p;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;  // direction outside the positive range
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    const double res = r.norm();
    if (!std::isfinite(res)) throw NumericalError("non-finite residual in PCG");
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res <= opts.tol * bnorm) {
      ++it;
      break;
    }
    z = precond.solve(r);
    project_zero_mean(z);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    p = z + beta * p;
  }

  result.x = best_x;
  project_zero_mean(result.x);
  result.iterations = it;
  result.rel_residual = best_res / bnorm;
  result.converged = result.rel_residual <= opts.tol;
  return result;
}

}  // namespace distembed
