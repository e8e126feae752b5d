#pragma once

#include <string>
#include <vector>

#include "distembed/frames.hpp"
#include "distembed/graph.hpp"
#include "distembed/linsolve.hpp"
#include "distembed/operators.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// #vertices x dim coordinate matrix with zero column means.
struct Embedding {
  Matrix coords;
};

/// Per-vertex orthogonal alignments Q and the current projection tensor a
/// (the h-projections of the aligned transport).
struct AlignmentField {
  MatrixStack q;
  MatrixStack a;
};

struct IterationRecord {
  int n = 0;
  double objective_solve = 0.0;  // J after the Poisson solve, before the Q update
  double objective = 0.0;        // J after the Q update (the monotone sequence)
  double err = 0.0;              // convergence error of the alignment update
  double dphi_energy = 0.0;      // 0.5 * ||d(phi_n - phi_{n-1})||^2
  std::vector<int> pcg_iterations;
  double seconds = 0.0;
};

struct IterationReport {
  std::vector<IterationRecord> iterations;
  double initial_objective = 0.0;  // J at phi = 0
  bool converged = false;
  std::string stop_reason;
  int monotonicity_violations = 0;
  bool degenerate_restart = false;
};

struct EmbedOptions {
  double tol = 1e-7;        // convergence error threshold
  double var_tol = 1e-16;   // sequential variation threshold on err
  int max_iterations = 500;
  double pcg_tol = 1e-10;
  int pcg_max_iterations = 0;  // 0: 10 * sqrt(n)
  double ict_drop_tol = 1e-3;
  double ict_shift = 1e-3;
  int threads = 1;
  // Seed the initial alignment from the polar fit to a spectral embedding
  // (lowest nonzero Laplacian eigenvectors). Deterministic. Helps closed
  // manifolds whose alignment field has to wind (torus-like topologies);
  // hurts flat patches whose spectral modes are standing waves, hence off
  // by default.
  bool spectral_init = false;
};

/// div(alpha Q) columns: DaQ(:, m) = sum_k D_k^T a[:, k, m]. Each column
/// sums to zero up to roundoff.
Matrix rhs_divergence(const MatrixStack& a, const LocalFrameSet& frames);

/// Per-vertex alignment matrices B[i](m, n) = sum_k (D_k phi_m)[i] a[i](k, n),
/// the pointwise integrands of <d phi_m, alpha_n>.
MatrixStack compute_B(const Matrix& phi, const MatrixStack& a, const LocalFrameSet& frames);

/// Orthogonal polar factor Q = R L^T of B = L S R^T. A zero B carries no
/// information and maps to the identity.
Matrix polar_align(const Matrix& b);

/// Absorb the rigid-body rotation: Q0 = R0 L0^T from svd(sum_i B[i]), then
/// Q_i <- Q0^T Q_i.
void gauge_fix(const MatrixStack& b, MatrixStack& q_candidate);

/// err = sqrt(mean_i ||Q_old_i^T Q_new_i - I||_2^2), spectral norm per vertex.
double convergence_error(const MatrixStack& q_old, const MatrixStack& q_new);

/// J = 0.5 * sum_{i,k,m} ((D_k phi_m)[i] - a[i](k, m))^2 with `a` already
/// carrying the accumulated alignment.
double objective(const Matrix& phi, const MatrixStack& a, const LocalFrameSet& frames);

struct EmbedResult {
  Embedding embedding;
  AlignmentField alignment;
  IterationReport report;
};

EmbedResult run_embedding(const DistanceGraph& g, int dim, const EmbedOptions& opts = {});

/// Same, against a caller-supplied frame field (it must match the graph's
/// adjacency pattern).
EmbedResult run_embedding(const DistanceGraph& g, const LocalFrameSet& frames,
                          const EmbedOptions& opts = {});

}  // namespace distembed
