#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace distembed {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatR = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Invalid or inconsistent input (exit code 1 at the CLI).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: solver breakdown, non-finite values (exit code 2).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Stack of per-vertex square matrices in contiguous storage.
/// Used for the alignment field Q, the projection tensor a and the
/// per-vertex alignment matrices B.
class MatrixStack {
 public:
  MatrixStack() = default;
  MatrixStack(int count, int dim)
      : count_(count), dim_(dim), data_(static_cast<size_t>(count) * dim * dim, 0.0) {}

  static MatrixStack identity(int count, int dim) {
    MatrixStack s(count, dim);
    for (int i = 0; i < count; ++i) s.at(i).setIdentity();
    return s;
  }

  int count() const { return count_; }
  int dim() const { return dim_; }

  Eigen::Map<Matrix> at(int i) {
    return Eigen::Map<Matrix>(data_.data() + static_cast<size_t>(i) * dim_ * dim_, dim_, dim_);
  }
  Eigen::Map<const Matrix> at(int i) const {
    return Eigen::Map<const Matrix>(data_.data() + static_cast<size_t>(i) * dim_ * dim_, dim_,
                                    dim_);
  }

 private:
  int count_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
};

/// Resolve a thread-count request: 0 means hardware concurrency.
inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Parallel map over [0, n). Bodies write to disjoint slots only, so the
/// result does not depend on scheduling. Exceptions are rethrown on the
/// calling thread (first index wins).
template <class Body>
void parallel_for(int n, int threads, Body&& body) {
  threads = std::min(resolve_threads(threads), std::max(n, 1));
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  std::vector<int> error_index(static_cast<size_t>(threads), -1);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      const int lo = static_cast<int>(static_cast<long long>(n) * t / threads);
      const int hi = static_cast<int>(static_cast<long long>(n) * (t + 1) / threads);
      for (int i = lo; i < hi; ++i) {
        try {
          body(i);
        } catch (...) {
          if (!errors[t]) {
            errors[t] = std::current_exception();
            error_index[t] = i;
          }
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  int first = -1;
  for (int t = 0; t < threads; ++t) {
    if (errors[t] && (first < 0 || error_index[t] < error_index[first])) first = t;
  }
  if (first >= 0) std::rethrow_exception(errors[first]);
}

}  // namespace distembed
