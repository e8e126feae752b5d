#include "distembed/frames.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace distembed {

Matrix gram_from_squared_distances(const Matrix& sq_dist) {
  const int m = static_cast<int>(sq_dist.rows()) - 1;
  if (m < 1 || sq_dist.rows() != sq_dist.cols())
    throw InputError("squared-distance matrix must cover the center and at least one member");
  Matrix g(m, m);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      g(j, k) = 0.5 * (sq_dist(0, j + 1) + sq_dist(k + 1, 0) - sq_dist(j + 1, k + 1));
  // Exact symmetry; the input is symmetric but the two off-center terms may
  // round differently.
  for (int j = 0; j < m; ++j)
    for (int k = j + 1; k < m; ++k) {
      double s = 0.5 * (g(j, k) + g(k, j));
      g(j, k) = s;
      g(k, j) = s;
    }
  return g;
}

SpectralFrame spectral_frame(const Matrix& gram, int dim) {
  const int m = static_cast<int>(gram.rows());
  if (dim < 1) throw InputError("embedding dimension must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw NumericalError("local eigendecomposition failed");

  SpectralFrame out;
  out.eig.eigenvalues = es.eigenvalues().reverse();
  out.eig.eigenvectors = es.eigenvectors().rowwise().reverse();
  out.eig.raw_min_eigenvalue = es.eigenvalues()(0);

  // Sign convention: largest-magnitude component positive, first wins ties.
  for (int c = 0; c < m; ++c) {
    int arg = 0;
    double best = std::abs(out.eig.eigenvectors(0, c));
    for (int r = 1; r < m; ++r) {
      double a = std::abs(out.eig.eigenvectors(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (out.eig.eigenvectors(arg, c) < 0.0) out.eig.eigenvectors.col(c) = -out.eig.eigenvectors.col(c);
  }

  const double lambda_max = std::max(out.eig.eigenvalues(0), 0.0);
  const double thresh = kRankEps * lambda_max;
  out.eig.positive_count = 0;
  for (int i = 0; i < m; ++i) {
    if (out.eig.eigenvalues(i) > thresh && out.eig.eigenvalues(i) > 0.0) ++out.eig.positive_count;
    if (out.eig.eigenvalues(i) < 0.0) out.eig.eigenvalues(i) = 0.0;
  }
  out.rank_deficient = out.eig.positive_count < dim;

  out.rows = Matrix::Zero(m, dim);
  const int take = std::min(dim, m);
  for (int c = 0; c < take; ++c)
    out.rows.col(c) = out.eig.eigenvectors.col(c) * std::sqrt(out.eig.eigenvalues(c));
  return out;
}

namespace {

// Area of the 2D convex hull (monotone chain + shoelace).
double hull_area_2d(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return a == b; }),
            pts.end());
  const int n = static_cast<int>(pts.size());
  if (n < 3) return 0.0;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * static_cast<size_t>(n));
  int h = 0;
  for (int i = 0; i < n; ++i) {
    while (h >= 2 && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
    hull[h++] = pts[i];
  }
  int lower = h + 1;
  for (int i = n - 2; i >= 0; --i) {
    while (h >= lower && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0) --h;
    hull[h++] = pts[i];
  }
  double area = 0.0;
  for (int i = 0; i < h - 1; ++i) {
    int j = (i + 1) % (h - 1);
    area += hull[i].x() * hull[j].y() - hull[j].x() * hull[i].y();
  }
  return 0.5 * std::abs(area);
}

// Exact hull volume in 3D for small point sets: enumerate supporting
// planes, dedup by contact set, sum cones from the centroid. Coplanar
// contact polygons are handled by triangulating the full 2D hull of the
// contact set.
double hull_volume_3d(const std::vector<Eigen::Vector3d>& pts, double scale) {
  const int n = static_cast<int>(pts.size());
  if (n < 4) return 0.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= n;
  const double plane_tol = 1e-9 * std::max(scale, 1e-300);

  std::set<std::vector<int>> contact_sets;
  double volume = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Eigen::Vector3d normal = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        double nn = normal.norm();
        if (nn <= 1e-14 * scale * scale) continue;
        normal /= nn;
        double lo = 0.0, hi = 0.0;
        for (int t = 0; t < n; ++t) {
          double d = normal.dot(pts[t] - pts[i]);
          lo = std::min(lo, d);
          hi = std::max(hi, d);
        }
        if (lo < -plane_tol && hi > plane_tol) continue;  // not supporting
        std::vector<int> contact;
        for (int t = 0; t < n; ++t)
          if (std::abs(normal.dot(pts[t] - pts[i])) <= plane_tol) contact.push_back(t);
        auto [it, inserted] = contact_sets.insert(contact);
        if (!inserted) continue;
        // In-plane basis for the contact polygon.
        Eigen::Vector3d u = (pts[j] - pts[i]).normalized();
        Eigen::Vector3d w = normal.cross(u);
        std::vector<Eigen::Vector2d> flat;
        flat.reserve(contact.size());
        for (int t : contact)
          flat.emplace_back(u.dot(pts[t] - pts[i]), w.dot(pts[t] - pts[i]));
        double area = hull_area_2d(std::move(flat));
        double height = std::abs(normal.dot(centroid - pts[i]));
        volume += area * height / 3.0;
      }
  return volume;
}

constexpr std::uint64_t kVolumeSeed = 0x6d6f6e7465636c6fULL;
constexpr long kMcBatch = 16384;
constexpr long kMcMaxSamples = 2'000'000;
constexpr double kMcTargetRse = 0.02;

inline double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Wolfe's min-norm-point algorithm for dist(x, conv(P)), run on the shifted
// points z_i = p_i - x. Finite and exact up to the stated tolerances, which
// is what the rejection sampler needs for unbiased inside tests.
bool inside_hull(const Matrix& pts, const Vector& x, double tol) {
  const int n = static_cast<int>(pts.rows());
  const int dim = static_cast<int>(pts.cols());
  Matrix z = pts.rowwise() - x.transpose();

  int first = 0;
  double best = z.row(0).squaredNorm();
  for (int i = 1; i < n; ++i) {
    double d = z.row(i).squaredNorm();
    if (d < best) {
      best = d;
      first = i;
    }
  }

  std::vector<int> active{first};
  Vector weights = Vector::Ones(1);
  Vector y = z.row(first).transpose();
  double scale2 = 0.0;
  for (int i = 0; i < n; ++i) scale2 = std::max(scale2, z.row(i).squaredNorm());
  const double gap_eps = 1e-12 * std::max(scale2, 1e-300);
  const double tol2 = tol * tol;

  for (int major = 0; major < 8 * (n + dim); ++major) {
    if (y.squaredNorm() <= tol2) return true;
    int entering = 0;
    double low = y.dot(z.row(0).transpose());
    for (int i = 1; i < n; ++i) {
      double v = y.dot(z.row(i).transpose());
      if (v < low) {
        low = v;
        entering = i;
      }
    }
    // Optimality: y . z_i >= ||y||^2 for every vertex means y is the
    // min-norm point of the hull.
    if (low >= y.squaredNorm() - gap_eps) break;
    if (std::find(active.begin(), active.end(), entering) != active.end()) break;
    active.push_back(entering);
    weights.conservativeResize(active.size());
    weights(active.size() - 1) = 0.0;

    for (int minor = 0; minor < 4 * (n + dim); ++minor) {
      const int s = static_cast<int>(active.size());
      // Min-norm point of the affine hull of the active set.
      Matrix kkt = Matrix::Zero(s + 1, s + 1);
      for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) kkt(a, b) = z.row(active[a]).dot(z.row(active[b]));
      for (int a = 0; a < s; ++a) kkt(a, a) += 1e-13 * scale2;
      kkt.block(0, s, s, 1).setOnes();
      kkt.block(s, 0, 1, s).setOnes();
      Vector rhs = Vector::Zero(s + 1);
      rhs(s) = 1.0;
      Vector mu = kkt.fullPivLu().solve(rhs).head(s);

      if (mu.minCoeff() >= -1e-12) {
        weights = mu.cwiseMax(0.0);
        weights /= weights.sum();
        break;
      }
      double theta = 1.0;
      for (int a = 0; a < s; ++a)
        if (mu(a) < weights(a)) theta = std::min(theta, weights(a) / (weights(a) - mu(a)));
      weights += theta * (mu - weights);
      std::vector<int> kept;
      std::vector<double> kept_w;
      for (int a = 0; a < s; ++a)
        if (weights(a) > 1e-12) {
          kept.push_back(active[a]);
          kept_w.push_back(weights(a));
        }
      if (kept.empty()) {
        kept.push_back(active[0]);
        kept_w.push_back(1.0);
      }
      active = std::move(kept);
      weights = Eigen::Map<Vector>(kept_w.data(), kept_w.size());
      weights /= weights.sum();
    }
    y.setZero();
    for (int a = 0; a < static_cast<int>(active.size()); ++a)
      y += weights(a) * z.row(active[a]).transpose();
  }
  return y.squaredNorm() <= tol2;
}

VolumeEstimate monte_carlo_volume(const Matrix& pts) {
  const int dim = static_cast<int>(pts.cols());
  Vector lo = pts.colwise().minCoeff().transpose();
  Vector hi = pts.colwise().maxCoeff().transpose();
  double box = 1.0;
  for (int d = 0; d < dim; ++d) box *= hi(d) - lo(d);
  if (!(box > 0.0)) return {0.0, true, true, 0.0};

  const double tol = 1e-7 * (hi - lo).norm();
  std::mt19937_64 rng(kVolumeSeed);
  long samples = 0, hits = 0;
  Vector x(dim);
  while (samples < kMcMaxSamples) {
    for (long b = 0; b < kMcBatch; ++b) {
      for (int d = 0; d < dim; ++d) x(d) = lo(d) + (hi(d) - lo(d)) * next_uniform(rng);
      if (inside_hull(pts, x, tol)) ++hits;
    }
    samples += kMcBatch;
    if (hits > 0) {
      double p = static_cast<double>(hits) / static_cast<double>(samples);
      double rse = std::sqrt((1.0 - p) / static_cast<double>(hits));
      if (rse <= kMcTargetRse) return {p * box, false, true, rse};
    }
  }
  if (hits == 0) return {0.0, true, true, 0.0};
  double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p * box, false, true, std::sqrt((1.0 - p) / static_cast<double>(hits))};
}

double singular_value_proxy(const Matrix& rows, int dim) {
  Eigen::JacobiSVD<Matrix> svd(rows);
  double prod = 1.0;
  for (int i = 0; i < dim; ++i)
    prod *= (i < svd.singularValues().size()) ? svd.singularValues()(i) : 0.0;
  double fact = 1.0;
  for (int i = 2; i <= dim; ++i) fact *= i;
  return prod / fact;
}

}  // namespace

VolumeEstimate neighborhood_volume(const Matrix& local_rows) {
  const int dim = static_cast<int>(local_rows.cols());
  const int m = static_cast<int>(local_rows.rows());
  if (dim < 1) throw InputError("volume needs at least one dimension");

  Matrix pts(m + 1, dim);
  pts.row(0).setZero();
  pts.bottomRows(m) = local_rows;

  VolumeEstimate est{0.0, false, false, 0.0};
  if (dim == 1) {
    est.value = pts.col(0).maxCoeff() - pts.col(0).minCoeff();
  } else if (dim == 2) {
    std::vector<Eigen::Vector2d> p2;
    p2.reserve(static_cast<size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) p2.emplace_back(pts(i, 0), pts(i, 1));
    est.value = hull_area_2d(std::move(p2));
  } else if (dim == 3) {
    std::vector<Eigen::Vector3d> p3;
    p3.reserve(static_cast<size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) p3.emplace_back(pts(i, 0), pts(i, 1), pts(i, 2));
    double scale = (pts.colwise().maxCoeff() - pts.colwise().minCoeff()).norm();
    est.value = hull_volume_3d(p3, std::max(scale, 1e-300));
  } else {
    est = monte_carlo_volume(pts);
  }

  double scale = (pts.colwise().maxCoeff() - pts.colwise().minCoeff()).norm();
  if (!(est.value > std::pow(1e-12 * std::max(scale, 1e-300), dim))) {
    est.value = singular_value_proxy(local_rows, dim);
    est.fallback = true;
  }
  return est;
}

PseudoInverseRows frame_pseudoinverse(const LocalEigenData& eig, double volume, int dim) {
  const int m = static_cast<int>(eig.eigenvectors.rows());
  if (volume < 0.0 || !std::isfinite(volume)) throw InputError("volume must be nonnegative");
  const double lambda_max = eig.eigenvalues.size() > 0 ? eig.eigenvalues(0) : 0.0;
  if (!(lambda_max > 0.0)) throw NumericalError("all local eigenvalues vanish");
  const double floor = kRankEps * lambda_max;

  PseudoInverseRows out;
  out.clamped = false;
  out.rows = Matrix::Zero(m, dim);
  const double scale = std::sqrt(volume);
  for (int c = 0; c < dim; ++c) {
    double lambda = (c < eig.eigenvalues.size()) ? eig.eigenvalues(c) : 0.0;
    if (lambda < floor) {
      lambda = floor;
      out.clamped = true;
    }
    if (c < eig.eigenvectors.cols())
      out.rows.col(c) = scale * eig.eigenvectors.col(c) / std::sqrt(lambda);
    else
      out.clamped = true;  // rank short of dim entirely
  }
  return out;
}

namespace {

// min_R ||B R - A||_F over orthogonal R: R = U V^T from svd(B^T A).
Matrix procrustes_rotation(const Matrix& b, const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// Frame rows of vertex v as a dense block (neighbors in id order).
Matrix dense_rows(const std::vector<SpMatR>& comps, int v) {
  const int dim = static_cast<int>(comps.size());
  const int deg = comps[0].outerIndexPtr()[v + 1] - comps[0].outerIndexPtr()[v];
  Matrix rows(deg, dim);
  for (int k = 0; k < dim; ++k) {
    const double* val = comps[k].valuePtr() + comps[k].outerIndexPtr()[v];
    for (int t = 0; t < deg; ++t) rows(t, k) = val[t];
  }
  return rows;
}

void rotate_vertex(std::vector<SpMatR>& comps, int v, const Matrix& rot) {
  const int dim = static_cast<int>(comps.size());
  Matrix rows = dense_rows(comps, v) * rot;
  for (int k = 0; k < dim; ++k) {
    double* val = comps[k].valuePtr() + comps[k].outerIndexPtr()[v];
    for (int t = 0; t < rows.rows(); ++t) val[t] = rows(t, k);
  }
}

// The spectral frames carry an arbitrary per-vertex orientation (the
// eigenbasis gauge). Propagating the per-edge relative rotations over a
// BFS tree orients neighboring frames consistently, which turns the
// identity into a coherent starting gauge for the alignment field. Pure
// gauge: row norms, Gram matrices and the operators' bilinear forms are
// unchanged.
void align_orientations(const DistanceGraph& g, LocalFrameSet& fs) {
  const int n = g.num_vertices();
  const int dim = fs.dim;

  auto local_coords = [&](int center, int point) -> Vector {
    // Coordinates of `point` in center's frame; the center itself is 0.
    Vector x = Vector::Zero(dim);
    if (point == center) return x;
    auto nb = g.neighbors(center);
    auto it = std::lower_bound(nb.begin(), nb.end(), point,
                               [](const Neighbor& a, int id) { return a.id < id; });
    int t = static_cast<int>(it - nb.begin());
    for (int k = 0; k < dim; ++k)
      x(k) = fs.frame[k].valuePtr()[fs.frame[k].outerIndexPtr()[center] + t];
    return x;
  };

  // Relative rotations per undirected edge: rel[i][t] maps neighbor
  // nb[t]'s frame coordinates into i's, estimated from the shared members
  // of the two neighborhoods.
  std::vector<std::vector<Matrix>> rel(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto nbs = g.neighbors(i);
    rel[i].resize(nbs.size());
    for (int t = 0; t < static_cast<int>(nbs.size()); ++t) {
      const int j = nbs[t].id;
      if (j < i) continue;  // fill the mirror below
      std::vector<int> common{i, j};
      for (const Neighbor& nb : g.neighbors(i))
        if (nb.id != j && g.weight(j, nb.id) > 0.0) common.push_back(nb.id);
      const int m = static_cast<int>(common.size());
      Matrix in_i(m, dim), in_j(m, dim);
      for (int r = 0; r < m; ++r) {
        in_i.row(r) = local_coords(i, common[r]).transpose();
        in_j.row(r) = local_coords(j, common[r]).transpose();
      }
      in_i.rowwise() -= in_i.colwise().mean();
      in_j.rowwise() -= in_j.colwise().mean();
      rel[i][t] = procrustes_rotation(in_j, in_i);
    }
  }
  for (int i = 0; i < n; ++i) {
    auto nbs = g.neighbors(i);
    for (int t = 0; t < static_cast<int>(nbs.size()); ++t) {
      const int j = nbs[t].id;
      if (j >= i) continue;
      auto back = g.neighbors(j);
      auto it = std::lower_bound(back.begin(), back.end(), i,
                                 [](const Neighbor& a, int id) { return a.id < id; });
      rel[i][t] = rel[j][it - back.begin()].transpose();
    }
  }

  // Seed by BFS propagation, per component.
  std::vector<Matrix> gauge(static_cast<size_t>(n), Matrix::Identity(dim, dim));
  std::vector<char> done(static_cast<size_t>(n), 0);
  std::vector<int> queue;
  queue.reserve(static_cast<size_t>(n));
  for (int root = 0; root < n; ++root) {
    if (done[root]) continue;
    done[root] = 1;
    queue.push_back(root);
    for (size_t head = 0; head < queue.size(); ++head) {
      const int i = queue[head];
      auto nbs = g.neighbors(i);
      for (int t = 0; t < static_cast<int>(nbs.size()); ++t) {
        const int j = nbs[t].id;
        if (done[j]) continue;
        done[j] = 1;
        queue.push_back(j);
        // x_j rel[i][t] ~ x_i, so E_j gauge(j) tracks E_i gauge(i) when
        // gauge(j) = rel[i][t] gauge(i).
        gauge[j] = rel[i][t] * gauge[i];
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    rotate_vertex(fs.frame, i, gauge[i]);
    rotate_vertex(fs.frame_inv, i, gauge[i]);
  }
}

}  // namespace

LocalFrameSet build_frame_field(const DistanceGraph& g, int dim, int threads) {
  const int n = g.num_vertices();
  if (dim < 1) throw InputError("embedding dimension must be positive");

  LocalFrameSet fs;
  fs.dim = dim;
  fs.volume.resize(n);

  // Shared adjacency fill pattern; values are written per row afterwards.
  SpMatR pattern(n, n);
  {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(2) * g.num_edges());
    for (int v = 0; v < n; ++v)
      for (const Neighbor& nb : g.neighbors(v)) trip.emplace_back(v, nb.id, 0.0);
    pattern.setFromTriplets(trip.begin(), trip.end());
    pattern.makeCompressed();
  }
  fs.frame.assign(static_cast<size_t>(dim), pattern);
  fs.frame_inv.assign(static_cast<size_t>(dim), pattern);

  std::vector<uint8_t> flag_rank(static_cast<size_t>(n), 0);
  std::vector<uint8_t> flag_vol(static_cast<size_t>(n), 0);
  std::vector<uint8_t> flag_clamp(static_cast<size_t>(n), 0);

  parallel_for(n, threads, [&](int v) {
    LocalGeodesics lg = local_geodesics(g, v);
    Matrix gram = gram_from_squared_distances(lg.sq_dist);
    SpectralFrame sf = spectral_frame(gram, dim);

    auto nbrs = g.neighbors(v);
    const int deg = static_cast<int>(nbrs.size());
    // Positions of first-order members within the (sorted) second-order list.
    std::vector<int> pos(static_cast<size_t>(deg));
    {
      int cursor = 1;  // members[0] is the center
      for (int t = 0; t < deg; ++t) {
        while (lg.members[cursor] != nbrs[t].id) ++cursor;
        pos[t] = cursor - 1;  // gram/frame rows exclude the center
      }
    }

    Matrix kept(deg, dim);
    for (int t = 0; t < deg; ++t) kept.row(t) = sf.rows.row(pos[t]);
    VolumeEstimate vol = neighborhood_volume(kept);
    PseudoInverseRows pinv = frame_pseudoinverse(sf.eig, vol.value, dim);

    fs.volume(v) = vol.value;
    flag_rank[v] = sf.rank_deficient ? 1 : 0;
    flag_vol[v] = vol.fallback ? 1 : 0;
    flag_clamp[v] = pinv.clamped ? 1 : 0;

    for (int k = 0; k < dim; ++k) {
      double* fval = fs.frame[k].valuePtr() + fs.frame[k].outerIndexPtr()[v];
      double* ival = fs.frame_inv[k].valuePtr() + fs.frame_inv[k].outerIndexPtr()[v];
      for (int t = 0; t < deg; ++t) {
        fval[t] = kept(t, k);
        ival[t] = pinv.rows(pos[t], k);
      }
    }
  });

  for (int v = 0; v < n; ++v) {
    if (flag_rank[v]) fs.diagnostics.rank_deficient.push_back(v);
    if (flag_vol[v]) fs.diagnostics.volume_fallback.push_back(v);
    if (flag_clamp[v]) fs.diagnostics.clamped.push_back(v);
  }
  align_orientations(g, fs);
  return fs;
}

}  // namespace distembed
