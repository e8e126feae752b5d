#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "distembed/frames.hpp"
#include "distembed/graph.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// Mean over graph edges of | ||phi_i - phi_j|| - d_ij | / d_ij.
double local_distance_error(const DistanceGraph& g, const Matrix& phi);

struct StrainResult {
  double value = 0.0;
  int skipped = 0;  // neighborhoods with zero frame Gram norm
};

/// Mean relative Frobenius distance between the embedded neighborhoods'
/// Gram matrices and the frames' Gram matrices over first-order members.
StrainResult local_metric_strain(const DistanceGraph& g, const Matrix& phi,
                                 const LocalFrameSet& frames);

struct RankMetricsResult {
  double continuity = 0.0;
  double trustworthiness = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Rank-based neighborhood metrics of the embedding against geodesic
/// k-nearest-neighbor sets. Ties break on vertex id.
RankMetricsResult rank_metrics(const Matrix& geodesics, const Matrix& phi, int k);
RankMetricsResult rank_metrics(const DistanceGraph& g, const Matrix& phi, int k);

enum class StressKind { relative_frobenius, kruskal1 };

/// ||D_emb - D_geo||_F / ||D_geo||_F over all pairs (or Kruskal stress-1).
double global_stress(const Matrix& geodesics, const Matrix& phi,
                     StressKind kind = StressKind::relative_frobenius);
double global_stress(const DistanceGraph& g, const Matrix& phi,
                     StressKind kind = StressKind::relative_frobenius);

struct DistanceCorrelations {
  double pearson = 0.0;
  double spearman = 0.0;
  double kendall = 0.0;
};

/// Pearson / Spearman / Kendall correlations between geodesic and embedded
/// distances over upper-triangle pairs, with seeded subsampling above
/// `max_pairs`.
DistanceCorrelations distance_correlations(const Matrix& geodesics, const Matrix& phi,
                                           long max_pairs = 2'000'000, std::uint64_t seed = 0);
DistanceCorrelations distance_correlations(const DistanceGraph& g, const Matrix& phi,
                                           long max_pairs = 2'000'000, std::uint64_t seed = 0);

/// Kendall tau-b by the O(P log P) merge-sort method.
double kendall_tau(std::span<const double> x, std::span<const double> y);

enum class ProcrustesMode { rigid, affine };

/// Relative residual of the best alignment of phi onto params: orthogonal +
/// translation + single scale (rigid) or unconstrained linear + translation
/// (affine). Affine admits params of lower dimension.
double procrustes_error(const Matrix& phi, const Matrix& params, ProcrustesMode mode);

struct ClusterMetricsResult {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  bool nmi_degenerate = false;  // single-class labels
};

/// Logistic-weighted k-nearest-neighbor label vote in the embedding, scored
/// by accuracy, normalized mutual information and adjusted Rand index
/// against the given labels. The logistic scale is the median kNN distance.
ClusterMetricsResult logistic_knn_cluster_metrics(const Matrix& phi,
                                                  const std::vector<int>& labels, int k);

struct MetricsReport {
  double lcl_dist = 0.0;
  double lcl_mtrc = 0.0;
  double lcl_cont = 0.0;
  double lcl_trust = 0.0;
  double lcl_prec = 0.0;
  double lcl_rec = 0.0;
  double lcl_f1 = 0.0;
  double glbl_mtrc = 0.0;
  double glbl_pearson = 0.0;
  double glbl_spearman = 0.0;
  double glbl_kendall = 0.0;
  std::optional<double> glbl_prm;                  // affine, when params given
  std::optional<ClusterMetricsResult> clustering;  // when labels given
  int strain_skipped = 0;
};

/// The full evaluation battery for one embedding.
MetricsReport evaluate_embedding(const DistanceGraph& g, const Matrix& phi,
                                 const LocalFrameSet& frames, int k,
                                 const Matrix* params = nullptr,
                                 const std::vector<int>* labels = nullptr,
                                 StressKind stress_kind = StressKind::relative_frobenius);

}  // namespace distembed
