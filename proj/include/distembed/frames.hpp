#pragma once

#include <vector>

#include "distembed/graph.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// Relative eigenvalue threshold below which a retained direction counts as
/// rank deficient (applied to lambda_max).
inline constexpr double kRankEps = 1e-10;

struct LocalEigenData {
  Vector eigenvalues;          // descending, negatives clamped to zero
  Matrix eigenvectors;         // orthonormal columns, aligned with member order
  double raw_min_eigenvalue;   // before clamping
  int positive_count;          // eigenvalues above kRankEps * lambda_max
};

struct SpectralFrame {
  Matrix rows;  // |members| x dim
  LocalEigenData eig;
  bool rank_deficient;
};

/// Gram matrix of the neighborhood's centered Euclidean representation:
/// G(j,k) = (M(0,j) + M(0,k) - M(j,k)) / 2 with the center at row 0 of the
/// squared-distance matrix. Output is over the non-center members.
Matrix gram_from_squared_distances(const Matrix& sq_dist);

/// Rank-dim spectral frame E = V S^{1/2} of a symmetric Gram matrix.
/// Negative eigenvalues clamp to zero; each eigenvector's sign is fixed so
/// its largest-magnitude component is positive (first wins on ties).
SpectralFrame spectral_frame(const Matrix& gram, int dim);

struct VolumeEstimate {
  double value;
  bool fallback;        // degenerate hull, singular-value proxy used
  bool monte_carlo;     // dim >= 4 estimator
  double rel_std_error; // Monte Carlo only
};

/// Volume of the convex hull of {0} and the given local frame rows. Exact
/// for dim <= 3; Monte Carlo rejection sampling with a fixed seed and a 2%
/// relative standard error target for dim >= 4. Degenerate hulls fall back
/// to prod(singular values) / dim!.
VolumeEstimate neighborhood_volume(const Matrix& local_rows);

struct PseudoInverseRows {
  Matrix rows;   // |members| x dim
  bool clamped;  // some retained eigenvalue sat below kRankEps * lambda_max
};

/// E_- = sqrt(vol) V S^{-1/2} over the retained spectrum; eigenvalues below
/// the rank threshold clamp to it instead of blowing up.
PseudoInverseRows frame_pseudoinverse(const LocalEigenData& eig, double volume, int dim);

struct FrameFieldDiagnostics {
  std::vector<int> rank_deficient;   // vertices with fewer than dim usable eigenvalues
  std::vector<int> volume_fallback;  // vertices using the singular-value volume proxy
  std::vector<int> clamped;          // vertices with clamped pseudo-inverse spectrum
};

/// Per-vertex frame stacks in the adjacency fill pattern: component k of
/// `frame` holds the k-th coordinate of E^{v_i}|_{v_j} at entry (i, j), and
/// `frame_inv` the same for E_-. `volume` is the neighborhood hull volume.
struct LocalFrameSet {
  int dim = 0;
  std::vector<SpMatR> frame;
  std::vector<SpMatR> frame_inv;
  Vector volume;
  FrameFieldDiagnostics diagnostics;
};

/// Local MDS over every vertex: geodesics in the third-order neighborhood,
/// Gram matrix, spectral frame over the second-order members, then only the
/// first-order rows are kept and assembled into sparse stacks. A final
/// deterministic pass rotates each frame so neighboring orientations agree
/// (a gauge choice; see align_orientations in the implementation).
LocalFrameSet build_frame_field(const DistanceGraph& g, int dim, int threads = 1);

}  // namespace distembed
