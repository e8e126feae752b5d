#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "distembed/types.hpp"

namespace distembed {

struct Neighbor {
  int id;
  double dist;
};

/// Symmetric, positively weighted distance graph over dense 0-based vertex
/// ids. Immutable after construction; every vertex has at least one
/// neighbor, weights are finite and positive, there are no self loops.
class DistanceGraph {
 public:
  DistanceGraph() = default;

  /// Build from undirected edges (u, v, d), u != v, d > 0. Duplicate pairs
  /// are resolved by the max rule. Every vertex in [0, n) must end up with
  /// at least one neighbor.
  static DistanceGraph from_undirected_edges(int n_vertices,
                                             const std::vector<std::tuple<int, int, double>>& edges);

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(nbrs_.size()) / 2; }

  std::span<const Neighbor> neighbors(int v) const {
    return {nbrs_.data() + offsets_[v], nbrs_.data() + offsets_[v + 1]};
  }
  int degree(int v) const { return offsets_[v + 1] - offsets_[v]; }

  /// Stored weight or 0 when (u, v) is not an edge.
  double weight(int u, int v) const;

 private:
  int n_ = 0;
  std::vector<int> offsets_;     // size n_ + 1
  std::vector<Neighbor> nbrs_;   // sorted by id within each vertex
};

struct DirectedEdge {
  int u;
  int v;
  double w;
};

/// A <- max(A, A^T) over a possibly asymmetric weighted adjacency given as
/// directed entries. Zero entries stay absent.
DistanceGraph symmetrize(int n_vertices, const std::vector<DirectedEdge>& entries);

/// Parse a whitespace-separated `u v d` edge list. `#` starts a comment
/// line; blank lines are skipped. Duplicates and asymmetric pairs resolve
/// by the max rule. Errors carry the 1-based line number.
DistanceGraph load_edge_list(std::istream& in);

/// Exact k-nearest-neighbor Euclidean graph over row-vector points,
/// symmetrized by the max rule. Ties break on vertex id. Coincident points
/// are an error (zero weight is forbidden).
DistanceGraph knn_graph(const Matrix& points, int k);

struct NeighborhoodView {
  int center;
  int order;                 // 1, 2 or 3
  std::vector<int> members;  // ascending ids, center excluded
};

/// Vertices reachable from v in at most `order` hops, excluding v.
NeighborhoodView neighborhood(const DistanceGraph& g, int v, int order);

struct LocalGeodesics {
  int center;
  std::vector<int> members;  // center first, then second-order members ascending
  Matrix sq_dist;            // squared shortest-path distances over `members`
};

/// Squared shortest-path distances between all pairs of {v} and its
/// second-order neighborhood, with paths restricted to the subgraph induced
/// by {v} and the third-order neighborhood.
LocalGeodesics local_geodesics(const DistanceGraph& g, int v);

/// Dense all-pairs shortest paths by repeated Dijkstra. The graph must be
/// connected and have at most `max_vertices` vertices.
Matrix all_pairs_geodesics(const DistanceGraph& g, int max_vertices = 20000, int threads = 1);

}  // namespace distembed
