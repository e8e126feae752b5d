#pragma once

#include <limits>
#include <random>
#include <vector>

#include "distembed/frames.hpp"
#include "distembed/graph.hpp"
#include "distembed/operators.hpp"
#include "distembed/types.hpp"

namespace distembed::testing {

inline DistanceGraph path_graph(int n, double w = 1.0) {
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1, w);
  return DistanceGraph::from_undirected_edges(n, edges);
}

inline Matrix grid_points(int rows, int cols, double spacing = 1.0) {
  Matrix pts(rows * cols, 2);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      pts(r * cols + c, 0) = c * spacing;
      pts(r * cols + c, 1) = r * spacing;
    }
  return pts;
}

inline Matrix random_points(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix pts(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) pts(i, d) = uni(rng);
  return pts;
}

/// Complete graph with exact Euclidean pairwise distances.
inline DistanceGraph complete_graph(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  std::vector<std::tuple<int, int, double>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      edges.emplace_back(i, j, (points.row(i) - points.row(j)).norm());
  return DistanceGraph::from_undirected_edges(n, edges);
}

/// Frame field aligned with a known flat embedding: the frame rows are the
/// exact coordinate offsets, so d(coords) equals the transport everywhere.
inline LocalFrameSet exact_frame_field(const DistanceGraph& g, const Matrix& coords) {
  const int n = g.num_vertices();
  const int dim = static_cast<int>(coords.cols());
  LocalFrameSet fs;
  fs.dim = dim;
  fs.volume.resize(n);

  SpMatR pattern(n, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    for (int v = 0; v < n; ++v)
      for (const Neighbor& nb : g.neighbors(v)) trip.emplace_back(v, nb.id, 0.0);
    pattern.setFromTriplets(trip.begin(), trip.end());
    pattern.makeCompressed();
  }
  fs.frame.assign(static_cast<size_t>(dim), pattern);
  fs.frame_inv.assign(static_cast<size_t>(dim), pattern);

  for (int v = 0; v < n; ++v) {
    auto nb = g.neighbors(v);
    const int deg = static_cast<int>(nb.size());
    Matrix rows(deg, dim);
    for (int t = 0; t < deg; ++t) rows.row(t) = coords.row(nb[t].id) - coords.row(v);
    double vol = neighborhood_volume(rows).value;
    fs.volume(v) = vol;
    Matrix pinv = std::sqrt(vol) * rows * (rows.transpose() * rows).inverse();
    for (int k = 0; k < dim; ++k) {
      double* fv = fs.frame[k].valuePtr() + fs.frame[k].outerIndexPtr()[v];
      double* iv = fs.frame_inv[k].valuePtr() + fs.frame_inv[k].outerIndexPtr()[v];
      for (int t = 0; t < deg; ++t) {
        fv[t] = rows(t, k);
        iv[t] = pinv(t, k);
      }
    }
  }
  return fs;
}

/// Frame rows of vertex v as a dense (degree x dim) block.
inline Matrix frame_rows(const std::vector<SpMatR>& comps, int v) {
  const int dim = static_cast<int>(comps.size());
  const int deg = comps[0].outerIndexPtr()[v + 1] - comps[0].outerIndexPtr()[v];
  Matrix rows(deg, dim);
  for (int k = 0; k < dim; ++k) {
    const double* val = comps[k].valuePtr() + comps[k].outerIndexPtr()[v];
    for (int t = 0; t < deg; ++t) rows(t, k) = val[t];
  }
  return rows;
}

/// Dense divergence oracle: the component form over neighborhoods with
/// Lambda * vol realized as Einv Einv^T, written as explicit triple loops.
inline Vector oracle_divergence(const DistanceGraph& g, const SpMatR& zeta,
                                const LocalFrameSet& frames) {
  const int n = g.num_vertices();
  Vector out = Vector::Zero(n);
  for (int c = 0; c < n; ++c) {
    auto nb = g.neighbors(c);
    const int deg = static_cast<int>(nb.size());
    Matrix einv = frame_rows(frames.frame_inv, c);
    std::vector<double> z(static_cast<size_t>(deg));
    for (int t = 0; t < deg; ++t) z[t] = zeta.coeff(c, nb[t].id);
    for (int a = 0; a < deg; ++a)
      for (int b = 0; b < deg; ++b) {
        double lam = einv.row(a).dot(einv.row(b));
        out(nb[a].id) += lam * z[b];  // incoming term: c's neighborhood sees vertex nb[a]
        out(c) -= lam * z[b];
      }
  }
  return out;
}

/// Dense Laplacian oracle through the same component form with Z = df.
inline Matrix oracle_laplacian(const DistanceGraph& g, const LocalFrameSet& frames) {
  const int n = g.num_vertices();
  Matrix lap = Matrix::Zero(n, n);
  for (int f = 0; f < n; ++f) {
    SpMatR zeta = frames.frame[0];  // reuse the pattern
    for (int i = 0; i < n; ++i) {
      double* val = zeta.valuePtr() + zeta.outerIndexPtr()[i];
      auto nb = g.neighbors(i);
      for (int t = 0; t < static_cast<int>(nb.size()); ++t)
        val[t] = (nb[t].id == f ? 1.0 : 0.0) - (i == f ? 1.0 : 0.0);
    }
    lap.col(f) = oracle_divergence(g, zeta, frames);
  }
  return lap;
}

inline Matrix floyd_warshall(const DistanceGraph& g) {
  const int n = g.num_vertices();
  Matrix d = Matrix::Constant(n, n, std::numeric_limits<double>::infinity());
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (int i = 0; i < n; ++i)
    for (const Neighbor& nb : g.neighbors(i)) d(i, nb.id) = nb.dist;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

inline Matrix random_orthogonal(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = gauss(rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

inline bool is_connected(const DistanceGraph& g) {
  std::vector<char> seen(static_cast<size_t>(g.num_vertices()), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (const Neighbor& nb : g.neighbors(v))
      if (!seen[nb.id]) {
        seen[nb.id] = 1;
        ++count;
        stack.push_back(nb.id);
      }
  }
  return count == g.num_vertices();
}

/// Random connected geometric graph: uniform points with an exact kNN graph,
/// k grown until the graph connects.
inline std::pair<DistanceGraph, Matrix> random_geometric_graph(int n, int dim, int k,
                                                               std::uint64_t seed) {
  Matrix pts = random_points(n, dim, seed);
  DistanceGraph g = knn_graph(pts, k);
  while (!is_connected(g) && k + 1 < n) g = knn_graph(pts, ++k);
  return {g, pts};
}

}  // namespace distembed::testing
