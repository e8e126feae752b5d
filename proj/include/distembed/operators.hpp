#pragma once

#include <vector>

#include "distembed/frames.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// On-graph realization of a differential 1-form: a sparse edge-coefficient
/// matrix in (a subset of) the adjacency fill pattern. A vector of forms is
/// one component matrix per coordinate.
using EdgeFunction = SpMatR;

struct EdgeFunctionStack {
  std::vector<EdgeFunction> comp;
  int count() const { return static_cast<int>(comp.size()); }
};

/// h-projection: h[i] = sum_j F_k(i, j) * Z(i, j), the per-vertex
/// contraction of an edge function against one pseudo-inverse frame
/// component. Z's fill pattern must be contained in F_k's.
Vector edge_projection(const EdgeFunction& edge_fn, const SpMatR& frame_inv_comp);

/// Pointwise inner product of two 1-forms: <eta, zeta>[i] = sum_k h_k(eta)[i] h_k(zeta)[i].
Vector inner_product_field(const EdgeFunction& eta, const EdgeFunction& zeta,
                           const LocalFrameSet& frames);

/// Divergence of a 1-form, the inner-product dual of the differential:
/// div(zeta) = sum_k D_k^T h_k(zeta).
Vector divergence(const EdgeFunction& zeta, const LocalFrameSet& frames);

/// Deviation matrices D_k = F_k - diag(rowsum(F_k)) built from the
/// pseudo-inverse frame components. Acting on a vertex function f,
/// (D_k f)[i] = sum_j F_k(i,j) (f(j) - f(i)) is the k-th h-projection of df;
/// row sums vanish so D_k annihilates constants exactly.
class DeviationStack {
 public:
  explicit DeviationStack(const LocalFrameSet& frames);

  int count() const { return static_cast<int>(comp_.size()); }
  int size() const { return n_; }
  const SpMatR& comp(int k) const { return comp_[k]; }

  Vector apply(int k, const Vector& f) const;            // D_k f
  Vector apply_transpose(int k, const Vector& h) const;  // D_k^T h

 private:
  int n_ = 0;
  std::vector<SpMatR> comp_;
};

/// Graph Laplacian L = sum_k D_k^T D_k: symmetric, positive semidefinite,
/// constants in the kernel, fill pattern within that of A^2.
SpMat assemble_laplacian(const LocalFrameSet& frames);

/// Projection tensor a[i](k, m) = sum_j FrmInv_k(i, j) * Frm_m(i, j): the
/// h-projections of the metric-trivializing transport's components.
MatrixStack alpha_projection(const LocalFrameSet& frames);

}  // namespace distembed
