#include "distembed/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

namespace distembed {

namespace {

// Max-rule accumulation over unordered vertex pairs.
class EdgeAccumulator {
 public:
  void add(int u, int v, double w) {
    if (u > v) std::swap(u, v);
    auto key = std::make_pair(u, v);
    auto [it, inserted] = weights_.try_emplace(key, w);
    if (!inserted) it->second = std::max(it->second, w);
    max_id_ = std::max(max_id_, v);
  }
  bool empty() const { return weights_.empty(); }
  int max_id() const { return max_id_; }
  std::vector<std::tuple<int, int, double>> edges() const {
    std::vector<std::tuple<int, int, double>> out;
    out.reserve(weights_.size());
    for (const auto& [key, w] : weights_) out.emplace_back(key.first, key.second, w);
    return out;
  }

 private:
  std::map<std::pair<int, int>, double> weights_;
  int max_id_ = -1;
};

}  // namespace

DistanceGraph DistanceGraph::from_undirected_edges(
    int n_vertices, const std::vector<std::tuple<int, int, double>>& edges) {
  if (n_vertices <= 0) throw InputError("graph must have at least one vertex");
  EdgeAccumulator acc;
  for (const auto& [u, v, w] : edges) {
    if (u < 0 || v < 0 || u >= n_vertices || v >= n_vertices)
      throw InputError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                       ") out of range for " + std::to_string(n_vertices) + " vertices");
    if (u == v) throw InputError("self loop at vertex " + std::to_string(u));
    if (!(w > 0.0) || !std::isfinite(w))
      throw InputError("non-positive weight on edge (" + std::to_string(u) + ", " +
                       std::to_string(v) + ")");
    acc.add(u, v, w);
  }
  if (acc.empty()) throw InputError("empty graph");

  DistanceGraph g;
  g.n_ = n_vertices;
  std::vector<int> deg(static_cast<size_t>(n_vertices), 0);
  auto dedup = acc.edges();
  for (const auto& [u, v, w] : dedup) {
    ++deg[u];
    ++deg[v];
  }
  for (int v = 0; v < n_vertices; ++v) {
    if (deg[v] == 0) throw InputError("vertex " + std::to_string(v) + " has no incident edges");
  }
  g.offsets_.assign(static_cast<size_t>(n_vertices) + 1, 0);
  for (int v = 0; v < n_vertices; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
  g.nbrs_.resize(static_cast<size_t>(g.offsets_[n_vertices]));
  std::vector<int> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  for (const auto& [u, v, w] : dedup) {
    g.nbrs_[cursor[u]++] = {v, w};
    g.nbrs_[cursor[v]++] = {u, w};
  }
  for (int v = 0; v < n_vertices; ++v) {
    std::sort(g.nbrs_.begin() + g.offsets_[v], g.nbrs_.begin() + g.offsets_[v + 1],
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
  }
  return g;
}

double DistanceGraph::weight(int u, int v) const {
  auto nb = neighbors(u);
  auto it = std::lower_bound(nb.begin(), nb.end(), v,
                             [](const Neighbor& a, int id) { return a.id < id; });
  return (it != nb.end() && it->id == v) ? it->dist : 0.0;
}

DistanceGraph symmetrize(int n_vertices, const std::vector<DirectedEdge>& entries) {
  std::vector<std::tuple<int, int, double>> edges;
  edges.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.w < 0.0) throw InputError("negative weight in adjacency");
    if (e.w == 0.0) continue;  // absent entry
    edges.emplace_back(e.u, e.v, e.w);
  }
  return DistanceGraph::from_undirected_edges(n_vertices, edges);
}

DistanceGraph load_edge_list(std::istream& in) {
  std::vector<std::tuple<int, int, double>> edges;
  std::string line;
  int line_no = 0;
  int max_id = -1;
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    long long u, v;
    double d;
    if (!(ls >> u >> v >> d)) throw InputError("line " + std::to_string(line_no) + ": expected `u v d`");
    std::string extra;
    if (ls >> extra) throw InputError("line " + std::to_string(line_no) + ": trailing tokens");
    if (u < 0 || v < 0)
      throw InputError("line " + std::to_string(line_no) + ": negative vertex id");
    if (u == v) throw InputError("line " + std::to_string(line_no) + ": self loop");
    if (!(d > 0.0) || !std::isfinite(d))
      throw InputError("line " + std::to_string(line_no) + ": distance must be positive");
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v), d);
    max_id = std::max({max_id, static_cast<int>(u), static_cast<int>(v)});
  }
  if (edges.empty()) throw InputError("empty graph");
  return DistanceGraph::from_undirected_edges(max_id + 1, edges);
}

DistanceGraph knn_graph(const Matrix& points, int k) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw InputError("need at least two points");
  if (k < 1 || k >= n) throw InputError("k must satisfy 1 <= k < #points");

  std::vector<std::tuple<int, int, double>> edges;
  edges.reserve(static_cast<size_t>(n) * k);
  std::vector<std::pair<double, int>> cand(static_cast<size_t>(n) - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand[m++] = {(points.row(i) - points.row(j)).squaredNorm(), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int t = 0; t < k; ++t) {
      if (cand[t].first == 0.0)
        throw InputError("coincident points " + std::to_string(i) + " and " +
                         std::to_string(cand[t].second) + " would create a zero-weight edge");
      edges.emplace_back(i, cand[t].second, std::sqrt(cand[t].first));
    }
  }
  return DistanceGraph::from_undirected_edges(n, edges);
}

NeighborhoodView neighborhood(const DistanceGraph& g, int v, int order) {
  if (v < 0 || v >= g.num_vertices()) throw InputError("vertex out of range");
  if (order < 1 || order > 3) throw InputError("neighborhood order must be 1, 2 or 3");
  std::vector<int> depth(static_cast<size_t>(g.num_vertices()), -1);
  std::vector<int> frontier{v}, next;
  depth[v] = 0;
  NeighborhoodView view{v, order, {}};
  for (int hop = 1; hop <= order; ++hop) {
    next.clear();
    for (int u : frontier) {
      for (const Neighbor& nb : g.neighbors(u)) {
        if (depth[nb.id] < 0) {
          depth[nb.id] = hop;
          next.push_back(nb.id);
          view.members.push_back(nb.id);
        }
      }
    }
    frontier.swap(next);
  }
  std::sort(view.members.begin(), view.members.end());
  return view;
}

namespace {

// Dijkstra restricted to a sorted vertex subset; ties pop by vertex id.
void dijkstra_subset(const DistanceGraph& g, const std::vector<int>& subset, int source_local,
                     std::vector<double>& dist) {
  const size_t m = subset.size();
  dist.assign(m, std::numeric_limits<double>::infinity());
  auto local_of = [&subset](int global) -> int {
    auto it = std::lower_bound(subset.begin(), subset.end(), global);
    return (it != subset.end() && *it == global) ? static_cast<int>(it - subset.begin()) : -1;
  };
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[source_local] = 0.0;
  heap.emplace(0.0, source_local);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Neighbor& nb : g.neighbors(subset[u])) {
      int w = local_of(nb.id);
      if (w < 0) continue;
      double nd = d + nb.dist;
      if (nd < dist[w]) {
        dist[w] = nd;
        heap.emplace(nd, w);
      }
    }
  }
}

void dijkstra_full(const DistanceGraph& g, int source, std::vector<double>& dist) {
  dist.assign(static_cast<size_t>(g.num_vertices()), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (const Neighbor& nb : g.neighbors(u)) {
      double nd = d + nb.dist;
      if (nd < dist[nb.id]) {
        dist[nb.id] = nd;
        heap.emplace(nd, nb.id);
      }
    }
  }
}

}  // namespace

LocalGeodesics local_geodesics(const DistanceGraph& g, int v) {
  auto second = neighborhood(g, v, 2);
  auto third = neighborhood(g, v, 3);

  std::vector<int> subset;
  subset.reserve(third.members.size() + 1);
  subset.push_back(v);
  subset.insert(subset.end(), third.members.begin(), third.members.end());
  std::sort(subset.begin(), subset.end());

  LocalGeodesics out;
  out.center = v;
  out.members.reserve(second.members.size() + 1);
  out.members.push_back(v);
  out.members.insert(out.members.end(), second.members.begin(), second.members.end());

  const int m = static_cast<int>(out.members.size());
  out.sq_dist.resize(m, m);
  std::vector<int> member_local(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    auto it = std::lower_bound(subset.begin(), subset.end(), out.members[i]);
    member_local[i] = static_cast<int>(it - subset.begin());
  }

  std::vector<double> dist;
  for (int i = 0; i < m; ++i) {
    dijkstra_subset(g, subset, member_local[i], dist);
    for (int j = 0; j < m; ++j) {
      double d = dist[member_local[j]];
      if (!std::isfinite(d))
        throw InputError("disconnected neighborhood: vertices " + std::to_string(out.members[i]) +
                         " and " + std::to_string(out.members[j]) +
                         " are unreachable within the third-order neighborhood of " +
                         std::to_string(v));
      out.sq_dist(i, j) = d * d;
    }
  }
  // Enforce exact symmetry and a zero diagonal against roundoff.
  for (int i = 0; i < m; ++i) {
    out.sq_dist(i, i) = 0.0;
    for (int j = i + 1; j < m; ++j) {
      double s = std::min(out.sq_dist(i, j), out.sq_dist(j, i));
      out.sq_dist(i, j) = s;
      out.sq_dist(j, i) = s;
    }
  }
  return out;
}

Matrix all_pairs_geodesics(const DistanceGraph& g, int max_vertices, int threads) {
  const int n = g.num_vertices();
  if (n > max_vertices)
    throw InputError("graph has " + std::to_string(n) + " vertices, exceeding the dense cap of " +
                     std::to_string(max_vertices));
  Matrix D(n, n);
  parallel_for(n, threads, [&](int i) {
    std::vector<double> dist;
    dijkstra_full(g, i, dist);
    for (int j = 0; j < n; ++j) D(i, j) = dist[j];
  });
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(D(i, j))) throw InputError("graph is disconnected");
  // Symmetrize against roundoff from differing relaxation orders.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = std::min(D(i, j), D(j, i));
      D(i, j) = s;
      D(j, i) = s;
    }
  return D;
}

}  // namespace distembed
