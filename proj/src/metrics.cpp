#include "distembed/metrics.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

namespace distembed {

double local_distance_error(const DistanceGraph& g, const Matrix& phi) {
  if (!phi.allFinite()) throw InputError("embedding has non-finite entries");
  double acc = 0.0;
  long edges = 0;
  for (int i = 0; i < g.num_vertices(); ++i)
    for (const Neighbor& nb : g.neighbors(i)) {
      if (nb.id < i) continue;
      double de = (phi.row(i) - phi.row(nb.id)).norm();
      acc += std::abs(de - nb.dist) / nb.dist;
      ++edges;
    }
  return acc / static_cast<double>(edges);
}

StrainResult local_metric_strain(const DistanceGraph& g, const Matrix& phi,
                                 const LocalFrameSet& frames) {
  const int n = g.num_vertices();
  const int dim = frames.dim;
  StrainResult out;
  double acc = 0.0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    auto nb = g.neighbors(i);
    const int deg = static_cast<int>(nb.size());
    Matrix frame_rows(deg, dim);
    for (int k = 0; k < dim; ++k) {
      const double* val = frames.frame[k].valuePtr() + frames.frame[k].outerIndexPtr()[i];
      for (int t = 0; t < deg; ++t) frame_rows(t, k) = val[t];
    }
    Matrix emb_rows(deg, static_cast<int>(phi.cols()));
    for (int t = 0; t < deg; ++t) emb_rows.row(t) = phi.row(nb[t].id) - phi.row(i);
    Matrix g_frame = frame_rows * frame_rows.transpose();
    Matrix g_emb = emb_rows * emb_rows.transpose();
    double denom = g_frame.norm();
    if (denom == 0.0) {
      ++out.skipped;
      continue;
    }
    acc += (g_emb - g_frame).norm() / denom;
    ++used;
  }
  if (used == 0) throw InputError("all neighborhoods degenerate in strain computation");
  out.value = acc / used;
  return out;
}

namespace {

Matrix embedded_distances(const Matrix& phi) {
  const int n = static_cast<int>(phi.rows());
  Matrix d(n, n);
  for (int i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      double v = (phi.row(i) - phi.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

// Order of all other vertices by (distance, id); rank[j] is 1-based.
void rank_row(const Matrix& d, int i, std::vector<int>& order, std::vector<int>& rank) {
  const int n = static_cast<int>(d.rows());
  order.clear();
  for (int j = 0; j < n; ++j)
    if (j != i) order.push_back(j);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return d(i, a) < d(i, b) || (d(i, a) == d(i, b) && a < b);
  });
  rank.assign(static_cast<size_t>(n), 0);
  for (int r = 0; r < static_cast<int>(order.size()); ++r) rank[order[r]] = r + 1;
}

}  // namespace

RankMetricsResult rank_metrics(const Matrix& geodesics, const Matrix& phi, int k) {
  const int n = static_cast<int>(geodesics.rows());
  if (k < 1 || k >= n) throw InputError("k must satisfy 1 <= k < #points");
  const double norm_const = static_cast<double>(n) * k * (2.0 * n - 3.0 * k - 1.0);
  if (norm_const <= 0.0) throw InputError("k too large for rank metrics (need k < (2n-1)/3)");

  Matrix emb = embedded_distances(phi);
  std::vector<int> order_geo, order_emb, rank_geo, rank_emb;
  double trust_penalty = 0.0, cont_penalty = 0.0, overlap = 0.0;
  std::vector<char> in_geo(static_cast<size_t>(n)), in_emb(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    rank_row(geodesics, i, order_geo, rank_geo);
    rank_row(emb, i, order_emb, rank_emb);
    std::fill(in_geo.begin(), in_geo.end(), 0);
    std::fill(in_emb.begin(), in_emb.end(), 0);
    for (int t = 0; t < k; ++t) {
      in_geo[order_geo[t]] = 1;
      in_emb[order_emb[t]] = 1;
    }
    for (int t = 0; t < k; ++t) {
      int j = order_emb[t];
      if (!in_geo[j]) trust_penalty += rank_geo[j] - k;  // intruder
      else
        overlap += 1.0;
      int j2 = order_geo[t];
      if (!in_emb[j2]) cont_penalty += rank_emb[j2] - k;  // exit
    }
  }
  RankMetricsResult out;
  out.trustworthiness = 1.0 - 2.0 * trust_penalty / norm_const;
  out.continuity = 1.0 - 2.0 * cont_penalty / norm_const;
  out.precision = overlap / (static_cast<double>(n) * k);
  out.recall = out.precision;  // both neighbor sets have size k
  out.f1 = out.precision;
  return out;
}

RankMetricsResult rank_metrics(const DistanceGraph& g, const Matrix& phi, int k) {
  return rank_metrics(all_pairs_geodesics(g), phi, k);
}

double global_stress(const Matrix& geodesics, const Matrix& phi, StressKind kind) {
  const int n = static_cast<int>(geodesics.rows());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double de = (phi.row(i) - phi.row(j)).norm();
      double dg = geodesics(i, j);
      num += (de - dg) * (de - dg);
      den += (kind == StressKind::relative_frobenius) ? dg * dg : de * de;
    }
  if (den == 0.0) throw InputError("degenerate distances in stress");
  return std::sqrt(num / den);
}

double global_stress(const DistanceGraph& g, const Matrix& phi, StressKind kind) {
  return global_stress(all_pairs_geodesics(g), phi, kind);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw InputError("zero-variance input to correlation");
  return sxy / std::sqrt(sxx * syy);
}

// Strict inversions of y via merge sort (pairs i < j with y[i] > y[j]).
long long count_inversions(std::vector<double>& y, std::vector<double>& buf, size_t lo,
                           size_t hi) {
  if (hi - lo < 2) return 0;
  size_t mid = lo + (hi - lo) / 2;
  long long swaps = count_inversions(y, buf, lo, mid) + count_inversions(y, buf, mid, hi);
  size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (y[b] < y[a]) {
      swaps += static_cast<long long>(mid - a);
      buf[out++] = y[b++];
    } else {
      buf[out++] = y[a++];
    }
  }
  while (a < mid) buf[out++] = y[a++];
  while (b < hi) buf[out++] = y[b++];
  std::copy(buf.begin() + lo, buf.begin() + hi, y.begin() + lo);
  return swaps;
}

template <class Group>
long long tie_pairs(std::vector<double>& v, Group&& same) {
  long long acc = 0;
  size_t i = 0;
  while (i < v.size()) {
    size_t j = i;
    while (j + 1 < v.size() && same(j + 1, i)) ++j;
    long long t = static_cast<long long>(j - i + 1);
    acc += t * (t - 1) / 2;
    i = j + 1;
  }
  return acc;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) throw InputError("kendall needs two same-length series");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (size_t i = 0; i < n; ++i) {
    xs[i] = x[idx[i]];
    ys[i] = y[idx[i]];
  }

  const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  long long xtie = 0, xytie = 0;
  {
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && xs[j + 1] == xs[i]) ++j;
      long long t = static_cast<long long>(j - i + 1);
      xtie += t * (t - 1) / 2;
      size_t a = i;
      while (a <= j) {
        size_t b = a;
        while (b + 1 <= j && ys[b + 1] == ys[a]) ++b;
        long long u = static_cast<long long>(b - a + 1);
        xytie += u * (u - 1) / 2;
        a = b + 1;
      }
      i = j + 1;
    }
  }
  std::vector<double> buf(n);
  long long swaps = count_inversions(ys, buf, 0, n);
  std::sort(ys.begin(), ys.end());
  long long ytie = tie_pairs(ys, [&](size_t a, size_t b) { return ys[a] == ys[b]; });

  const long long con_minus_dis = n0 - xtie - ytie + xytie - 2 * swaps;
  const double denom =
      std::sqrt(static_cast<double>(n0 - xtie) * static_cast<double>(n0 - ytie));
  if (denom == 0.0) throw InputError("zero-variance input to kendall");
  return static_cast<double>(con_minus_dis) / denom;
}

DistanceCorrelations distance_correlations(const Matrix& geodesics, const Matrix& phi,
                                           long max_pairs, std::uint64_t seed) {
  const int n = static_cast<int>(geodesics.rows());
  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  std::vector<double> dg, de;
  if (total <= max_pairs) {
    dg.reserve(static_cast<size_t>(total));
    de.reserve(static_cast<size_t>(total));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        dg.push_back(geodesics(i, j));
        de.push_back((phi.row(i) - phi.row(j)).norm());
      }
  } else {
    std::mt19937_64 rng(seed);
    dg.reserve(static_cast<size_t>(max_pairs));
    de.reserve(static_cast<size_t>(max_pairs));
    for (long t = 0; t < max_pairs; ++t) {
      int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      int j = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      if (i == j) {
        --t;
        continue;
      }
      dg.push_back(geodesics(i, j));
      de.push_back((phi.row(i) - phi.row(j)).norm());
    }
  }
  DistanceCorrelations out;
  out.pearson = pearson(dg, de);
  out.spearman = pearson(average_ranks(dg), average_ranks(de));
  out.kendall = kendall_tau(dg, de);
  return out;
}

DistanceCorrelations distance_correlations(const DistanceGraph& g, const Matrix& phi,
                                           long max_pairs, std::uint64_t seed) {
  return distance_correlations(all_pairs_geodesics(g), phi, max_pairs, seed);
}

double procrustes_error(const Matrix& phi, const Matrix& params, ProcrustesMode mode) {
  if (phi.rows() != params.rows()) throw InputError("row-count mismatch in procrustes");
  Matrix xc = phi.rowwise() - phi.colwise().mean();
  Matrix yc = params.rowwise() - params.colwise().mean();
  const double ynorm2 = yc.squaredNorm();
  if (ynorm2 == 0.0) throw InputError("degenerate parameterization in procrustes");

  if (mode == ProcrustesMode::rigid) {
    if (phi.cols() != params.cols())
      throw InputError("rigid procrustes needs matching dimensions");
    Eigen::JacobiSVD<Matrix> svd(xc.transpose() * yc, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix rot = svd.matrixU() * svd.matrixV().transpose();
    const double xnorm2 = xc.squaredNorm();
    if (xnorm2 == 0.0) throw InputError("degenerate embedding in procrustes");
    const double scale = svd.singularValues().sum() / xnorm2;
    return (scale * xc * rot - yc).squaredNorm() / ynorm2;
  }

  Eigen::ColPivHouseholderQR<Matrix> qr(xc);
  Matrix w = qr.solve(yc);
  return (xc * w - yc).squaredNorm() / ynorm2;
}

namespace {

double comb2(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace

ClusterMetricsResult logistic_knn_cluster_metrics(const Matrix& phi,
                                                  const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(phi.rows());
  if (static_cast<int>(labels.size()) != n) throw InputError("label count mismatch");
  if (k < 1 || k >= n) throw InputError("k must satisfy 1 <= k < #points");

  // Compact label space.
  std::map<int, int> label_of;
  for (int l : labels) label_of.emplace(l, 0);
  int next = 0;
  for (auto& [key, v] : label_of) v = next++;
  const int n_labels = next;
  std::vector<int> truth(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) truth[i] = label_of.at(labels[i]);

  // Embedded kNN, deterministic ties.
  std::vector<std::vector<std::pair<double, int>>> knn(static_cast<size_t>(n));
  std::vector<double> all_dists;
  all_dists.reserve(static_cast<size_t>(n) * k);
  std::vector<std::pair<double, int>> cand(static_cast<size_t>(n) - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) cand[m++] = {(phi.row(i) - phi.row(j)).norm(), j};
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    knn[i].assign(cand.begin(), cand.begin() + k);
    for (int t = 0; t < k; ++t) all_dists.push_back(knn[i][t].first);
  }
  std::nth_element(all_dists.begin(), all_dists.begin() + all_dists.size() / 2, all_dists.end());
  const double scale = all_dists[all_dists.size() / 2];
  if (scale == 0.0) throw InputError("degenerate embedding: median neighbor distance is zero");

  std::vector<int> predicted(static_cast<size_t>(n));
  std::vector<double> score(static_cast<size_t>(n_labels));
  for (int i = 0; i < n; ++i) {
    std::fill(score.begin(), score.end(), 0.0);
    for (const auto& [d, j] : knn[i]) score[truth[j]] += 1.0 / (1.0 + std::exp(d / scale));
    predicted[i] =
        static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
  }

  ClusterMetricsResult out;
  int hits = 0;
  for (int i = 0; i < n; ++i) hits += predicted[i] == truth[i];
  out.acc = static_cast<double>(hits) / n;

  // Contingency table of predicted vs truth.
  Matrix table = Matrix::Zero(n_labels, n_labels);
  for (int i = 0; i < n; ++i) table(predicted[i], truth[i]) += 1.0;
  Vector row = table.rowwise().sum();
  Vector col = table.colwise().sum().transpose();

  double h_pred = 0.0, h_true = 0.0, mi = 0.0;
  for (int a = 0; a < n_labels; ++a) {
    if (row(a) > 0) h_pred -= row(a) / n * std::log(row(a) / n);
    if (col(a) > 0) h_true -= col(a) / n * std::log(col(a) / n);
  }
  for (int a = 0; a < n_labels; ++a)
    for (int b = 0; b < n_labels; ++b) {
      double nij = table(a, b);
      if (nij > 0) mi += nij / n * std::log(n * nij / (row(a) * col(b)));
    }
  if (h_pred <= 0.0 || h_true <= 0.0) {
    out.nmi = 0.0;
    out.nmi_degenerate = true;
  } else {
    out.nmi = mi / (0.5 * (h_pred + h_true));
  }

  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (int a = 0; a < n_labels; ++a) {
    sum_a += comb2(row(a));
    sum_b += comb2(col(a));
    for (int b = 0; b < n_labels; ++b) sum_ij += comb2(table(a, b));
  }
  const double expected = sum_a * sum_b / comb2(static_cast<double>(n));
  const double max_index = 0.5 * (sum_a + sum_b);
  out.ari = (max_index - expected) == 0.0 ? 0.0 : (sum_ij - expected) / (max_index - expected);
  return out;
}

MetricsReport evaluate_embedding(const DistanceGraph& g, const Matrix& phi,
                                 const LocalFrameSet& frames, int k, const Matrix* params,
                                 const std::vector<int>* labels, StressKind stress_kind) {
  if (phi.rows() != g.num_vertices()) throw InputError("embedding row count mismatch");
  Matrix geo = all_pairs_geodesics(g);

  MetricsReport rep;
  rep.lcl_dist = local_distance_error(g, phi);
  StrainResult strain = local_metric_strain(g, phi, frames);
  rep.lcl_mtrc = strain.value;
  rep.strain_skipped = strain.skipped;
  RankMetricsResult rm = rank_metrics(geo, phi, k);
  rep.lcl_cont = rm.continuity;
  rep.lcl_trust = rm.trustworthiness;
  rep.lcl_prec = rm.precision;
  rep.lcl_rec = rm.recall;
  rep.lcl_f1 = rm.f1;
  rep.glbl_mtrc = global_stress(geo, phi, stress_kind);
  DistanceCorrelations corr = distance_correlations(geo, phi);
  rep.glbl_pearson = corr.pearson;
  rep.glbl_spearman = corr.spearman;
  rep.glbl_kendall = corr.kendall;
  if (params != nullptr) rep.glbl_prm = procrustes_error(phi, *params, ProcrustesMode::affine);
  if (labels != nullptr) rep.clustering = logistic_knn_cluster_metrics(phi, *labels, k);
  return rep;
}

}  // namespace distembed
