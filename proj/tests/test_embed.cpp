#include <doctest.h>

#include <random>

#include "distembed/embed.hpp"
#include "distembed/metrics.hpp"
#include "helpers.hpp"

using namespace distembed;
using namespace distembed::testing;

namespace {

MatrixStack random_stack(int n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixStack s(n, dim);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) s.at(i)(r, c) = gauss(rng);
  return s;
}

}  // namespace

TEST_CASE("rhs_divergence of a zero tensor is zero") {
  auto [g, pts] = random_geometric_graph(12, 2, 3, 2);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack zero(12, 2);
  CHECK(rhs_divergence(zero, fs).norm() == 0.0);
}

TEST_CASE("rhs_divergence columns sum to zero") {
  auto [g, pts] = random_geometric_graph(20, 2, 4, 3);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack a = alpha_projection(fs);
  Matrix rhs = rhs_divergence(a, fs);
  double scale = rhs.cwiseAbs().maxCoeff();
  for (int m = 0; m < 2; ++m) CHECK(std::abs(rhs.col(m).sum()) <= 1e-10 * (1.0 + scale));
}

TEST_CASE("rhs_divergence matches the dense divergence oracle per column") {
  auto [g, pts] = random_geometric_graph(6, 2, 2, 5);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack a = random_stack(6, 2, 7);
  Matrix rhs = rhs_divergence(a, fs);
  // Column m is the divergence of the edge stack with coefficients a Frm-wise:
  // reconstruct it as sum_k D_k^T a[:,k,m] through the dense oracle identity
  // by assembling the per-component contributions.
  DeviationStack dev(fs);
  for (int m = 0; m < 2; ++m) {
    Vector expected = Vector::Zero(6);
    for (int k = 0; k < 2; ++k) {
      Vector col(6);
      for (int i = 0; i < 6; ++i) col(i) = a.at(i)(k, m);
      expected += Matrix(dev.comp(k)).transpose() * col;
    }
    CHECK((rhs.col(m) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("compute_B: zero embedding gives zero B") {
  auto [g, pts] = random_geometric_graph(10, 2, 3, 11);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack a = alpha_projection(fs);
  MatrixStack b = compute_B(Matrix::Zero(10, 2), a, fs);
  for (int i = 0; i < 10; ++i) CHECK(b.at(i).norm() == 0.0);
}

TEST_CASE("compute_B is symmetric PSD when the differential reproduces the transport") {
  Matrix pts = grid_points(5, 5);
  DistanceGraph g = knn_graph(pts, 8);
  LocalFrameSet fs = exact_frame_field(g, pts);
  MatrixStack a = alpha_projection(fs);
  MatrixStack b = compute_B(pts, a, fs);
  for (int i = 0; i < 25; ++i) {
    Matrix bi = b.at(i);
    CHECK((bi - bi.transpose()).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + bi.norm()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (bi + bi.transpose()));
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * (1.0 + bi.norm()));
  }
}

TEST_CASE("compute_B matches the per-vertex dense contraction") {
  auto [g, pts] = random_geometric_graph(7, 2, 2, 13);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack a = random_stack(7, 2, 17);
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix phi(7, 2);
  for (int i = 0; i < 7; ++i)
    for (int m = 0; m < 2; ++m) phi(i, m) = gauss(rng);
  MatrixStack b = compute_B(phi, a, fs);
  DeviationStack dev(fs);
  for (int i = 0; i < 7; ++i)
    for (int m = 0; m < 2; ++m)
      for (int c = 0; c < 2; ++c) {
        double expected = 0.0;
        for (int k = 0; k < 2; ++k) expected += dev.apply(k, phi.col(m))(i) * a.at(i)(k, c);
        CHECK(b.at(i)(m, c) == doctest::Approx(expected).epsilon(1e-12));
      }
}

TEST_CASE("polar_align basics") {
  Matrix spd(2, 2);
  spd << 2.0, 0.3, 0.3, 1.0;
  CHECK((polar_align(spd) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix rot = random_orthogonal(3, 5);
  CHECK((polar_align(rot) - rot.transpose()).cwiseAbs().maxCoeff() < 1e-12);

  CHECK((polar_align(Matrix::Zero(2, 2)) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("polar_align maximizes trace over orthogonal candidates") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int dim : {2, 3}) {
    Matrix b(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) b(r, c) = gauss(rng);
    b.col(0).setZero();  // force a zero singular value
    Matrix q = polar_align(b);
    CHECK((q.transpose() * q - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
    double best = (b * q).trace();
    for (int t = 0; t < 10000; ++t) {
      Matrix candidate = random_orthogonal(dim, 1000 + t);
      CHECK((b * candidate).trace() <= best + 1e-9);
    }
  }
}

TEST_CASE("gauge_fix turns a shared symmetric PD alignment into the identity") {
  const int n = 6, dim = 2;
  Matrix shared(2, 2);
  shared << 3.0, 0.5, 0.5, 2.0;
  MatrixStack b(n, dim);
  MatrixStack q(n, dim);
  for (int i = 0; i < n; ++i) {
    b.at(i) = shared;
    q.at(i) = polar_align(shared);
  }
  gauge_fix(b, q);
  for (int i = 0; i < n; ++i)
    CHECK((q.at(i) - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gauge_fix removes a common rotation entirely") {
  const int n = 5, dim = 3;
  Matrix rot = random_orthogonal(dim, 31);
  MatrixStack b(n, dim);
  MatrixStack q(n, dim);
  for (int i = 0; i < n; ++i) {
    Matrix spd(dim, dim);
    spd.setIdentity();
    spd(0, 0) = 2.0 + i;
    b.at(i) = spd * rot;  // polar factor rot^T for every vertex
    q.at(i) = polar_align(b.at(i));
  }
  gauge_fix(b, q);
  for (int i = 0; i < n; ++i)
    CHECK((q.at(i) - Matrix::Identity(dim, dim)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gauge_fix output keeps Procrustes optimality of the total") {
  const int n = 8, dim = 2;
  MatrixStack b = random_stack(n, dim, 37);
  MatrixStack q(n, dim);
  for (int i = 0; i < n; ++i) q.at(i) = polar_align(b.at(i));
  MatrixStack q_fixed = q;
  gauge_fix(b, q_fixed);
  // The absorbed rotation is orthogonal, so per-vertex alignment quality is
  // unchanged up to the common factor: tr(B_i Q_i) == tr(B_i Q0^T Q_i) + gap
  // with the gap closed by Q0 on the summed matrix.
  Matrix total = Matrix::Zero(dim, dim);
  for (int i = 0; i < n; ++i) total += b.at(i);
  Matrix q0 = polar_align(total);
  double fixed_trace = 0.0;
  for (int i = 0; i < n; ++i) fixed_trace += (total * q0).trace();
  for (int t = 0; t < 3000; ++t) {
    Matrix candidate = random_orthogonal(dim, 5000 + t);
    CHECK((total * candidate).trace() <= (total * q0).trace() + 1e-9);
  }
}

TEST_CASE("convergence_error basics") {
  const int n = 4, dim = 2;
  MatrixStack q = random_stack(n, dim, 41);
  for (int i = 0; i < n; ++i) q.at(i) = polar_align(q.at(i));
  CHECK(convergence_error(q, q) <= 1e-12);  // Q^T Q - I only vanishes to roundoff

  MatrixStack flipped = q;
  Matrix reflect = Matrix::Identity(dim, dim);
  reflect(0, 0) = -1.0;
  for (int i = 0; i < n; ++i) flipped.at(i) = (q.at(i) * reflect).eval();
  CHECK(convergence_error(q, flipped) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("convergence_error scales as 1/sqrt(m) for one perturbed vertex") {
  const int dim = 2;
  for (int m : {4, 16, 64}) {
    MatrixStack q = MatrixStack::identity(m, dim);
    MatrixStack q_new = q;
    Matrix reflect = Matrix::Identity(dim, dim);
    reflect(1, 1) = -1.0;
    q_new.at(0) = reflect;
    CHECK(convergence_error(q, q_new) == doctest::Approx(2.0 / std::sqrt(m)).epsilon(1e-12));
  }
}

TEST_CASE("objective basics") {
  auto [g, pts] = random_geometric_graph(10, 2, 3, 43);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack zero_a(10, 2);
  CHECK(objective(Matrix::Zero(10, 2), zero_a, fs) == 0.0);
  MatrixStack a = alpha_projection(fs);
  CHECK(objective(Matrix::Random(10, 2), a, fs) >= 0.0);
}

TEST_CASE("objective vanishes on exactly integrable flat data") {
  Matrix pts = grid_points(6, 6);
  DistanceGraph g = knn_graph(pts, 8);
  LocalFrameSet fs = exact_frame_field(g, pts);
  MatrixStack a = alpha_projection(fs);
  double j = objective(pts, a, fs);
  CHECK(j <= 1e-10 * (1.0 + pts.squaredNorm()));
}

TEST_CASE("objective is exactly translation invariant") {
  auto [g, pts] = random_geometric_graph(14, 2, 3, 47);
  LocalFrameSet fs = build_frame_field(g, 2);
  MatrixStack a = alpha_projection(fs);
  // Dyadic data plus integer shifts keep f(j) - f(i) bit-exact, so the
  // difference form gives exact invariance; generic shifts agree to fp.
  std::mt19937_64 rng(3);
  Matrix phi(14, 2);
  for (int i = 0; i < 14; ++i)
    for (int m = 0; m < 2; ++m) phi(i, m) = static_cast<double>(rng() % 64) / 8.0;
  Matrix shifted = phi;
  shifted.col(0).array() += 5.0;
  shifted.col(1).array() -= 2.0;
  CHECK(objective(phi, a, fs) == objective(shifted, a, fs));

  Matrix generic = Matrix::Random(14, 2);
  Matrix generic_shifted = generic;
  generic_shifted.col(0).array() += 0.3;
  CHECK(objective(generic, a, fs) ==
        doctest::Approx(objective(generic_shifted, a, fs)).epsilon(1e-12));
}

TEST_CASE("run_embedding on a single edge recovers the edge length") {
  DistanceGraph g = DistanceGraph::from_undirected_edges(2, {{0, 1, 3.5}});
  EmbedResult r = run_embedding(g, 1);
  CHECK(std::abs(r.embedding.coords(1, 0) - r.embedding.coords(0, 0)) ==
        doctest::Approx(3.5).epsilon(1e-8));
  CHECK(std::abs(r.embedding.coords.col(0).mean()) < 1e-12);
}

TEST_CASE("a divergence-free transport triggers the deterministic reseed") {
  // Mirror-symmetric frames (both pointing at each other) make div(alpha)
  // exactly zero; the solver must restart from the reflection seed instead
  // of accepting phi = 0.
  DistanceGraph g = DistanceGraph::from_undirected_edges(2, {{0, 1, 2.0}});
  LocalFrameSet fs;
  fs.dim = 1;
  fs.volume = Vector::Constant(2, 2.0);
  SpMatR pattern(2, 2);
  std::vector<Eigen::Triplet<double>> trip{{0, 1, 0.0}, {1, 0, 0.0}};
  pattern.setFromTriplets(trip.begin(), trip.end());
  pattern.makeCompressed();
  fs.frame.assign(1, pattern);
  fs.frame_inv.assign(1, pattern);
  fs.frame[0].valuePtr()[0] = 2.0;   // E^0|_1 = +2
  fs.frame[0].valuePtr()[1] = 2.0;   // E^1|_0 = +2 (mirror, not aligned)
  fs.frame_inv[0].valuePtr()[0] = std::sqrt(2.0) / 2.0;
  fs.frame_inv[0].valuePtr()[1] = std::sqrt(2.0) / 2.0;
  EmbedOptions opts;
  opts.spectral_init = false;  // exercise the backstop path directly
  EmbedResult r = run_embedding(g, fs, opts);
  CHECK(r.report.degenerate_restart);
  CHECK(std::abs(r.embedding.coords(1, 0) - r.embedding.coords(0, 0)) ==
        doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("run_embedding recovers a flat grid up to rigid motion") {
  Matrix pts = grid_points(8, 8);
  DistanceGraph g = knn_graph(pts, 8);
  EmbedOptions opts;
  EmbedResult r = run_embedding(g, 2, opts);
  CHECK(r.report.converged);
  double err = procrustes_error(r.embedding.coords, pts, ProcrustesMode::rigid);
  CHECK(err < 1e-2);
  for (int m = 0; m < 2; ++m)
    CHECK(std::abs(r.embedding.coords.col(m).mean()) <=
          1e-10 * (1.0 + r.embedding.coords.cwiseAbs().maxCoeff()));
}

TEST_CASE("run_embedding objective is monotone and orthogonality is preserved") {
  auto [g, pts] = random_geometric_graph(60, 2, 6, 51);
  EmbedOptions opts;
  opts.max_iterations = 60;
  EmbedResult r = run_embedding(g, 2, opts);
  CHECK(r.report.monotonicity_violations == 0);
  double prev = r.report.initial_objective;
  for (const auto& rec : r.report.iterations) {
    CHECK(rec.objective <= prev + 1e-8 * std::abs(prev));
    prev = rec.objective;
  }
  for (int i = 0; i < g.num_vertices(); ++i) {
    Matrix qi = r.alignment.q.at(i);
    CHECK((qi.transpose() * qi - Matrix::Identity(2, 2)).norm() <= 1e-8);
  }
}

TEST_CASE("run_embedding is gauge invariant under a frame pre-rotation") {
  Matrix pts = grid_points(6, 6);
  DistanceGraph g = knn_graph(pts, 8);
  LocalFrameSet fs = build_frame_field(g, 2);

  EmbedOptions opts;
  opts.pcg_tol = 1e-13;
  EmbedResult base = run_embedding(g, fs, opts);

  Matrix rot = random_orthogonal(2, 67);
  LocalFrameSet rotated = fs;
  for (int v = 0; v < g.num_vertices(); ++v) {
    Matrix fr = frame_rows(fs.frame, v) * rot;
    Matrix fi = frame_rows(fs.frame_inv, v) * rot;
    for (int k = 0; k < 2; ++k) {
      double* fv = rotated.frame[k].valuePtr() + rotated.frame[k].outerIndexPtr()[v];
      double* iv = rotated.frame_inv[k].valuePtr() + rotated.frame_inv[k].outerIndexPtr()[v];
      for (int t = 0; t < fr.rows(); ++t) {
        fv[t] = fr(t, k);
        iv[t] = fi(t, k);
      }
    }
  }
  EmbedResult turned = run_embedding(g, rotated, opts);
  double scale = base.embedding.coords.norm();
  double err =
      procrustes_error(turned.embedding.coords, base.embedding.coords, ProcrustesMode::rigid);
  CHECK(std::sqrt(err) * scale <= 1e-6 * scale);
}

TEST_CASE("spectral seed keeps orthogonality and monotone objective") {
  auto [g, pts] = random_geometric_graph(50, 2, 5, 91);
  EmbedOptions opts;
  opts.spectral_init = true;
  opts.max_iterations = 40;
  EmbedResult r = run_embedding(g, 2, opts);
  CHECK(r.report.monotonicity_violations == 0);
  for (int i = 0; i < g.num_vertices(); ++i) {
    Matrix qi = r.alignment.q.at(i);
    CHECK((qi.transpose() * qi - Matrix::Identity(2, 2)).norm() <= 1e-8);
  }
  // Deterministic: same option set, same bits.
  EmbedResult r2 = run_embedding(g, 2, opts);
  CHECK(r.embedding.coords == r2.embedding.coords);
}

TEST_CASE("run_embedding is bit-deterministic across thread counts") {
  auto [g, pts] = random_geometric_graph(40, 2, 5, 71);
  EmbedOptions serial;
  serial.max_iterations = 20;
  EmbedOptions parallel = serial;
  parallel.threads = 4;
  EmbedResult a = run_embedding(g, 2, serial);
  EmbedResult b = run_embedding(g, 2, parallel);
  CHECK(a.embedding.coords == b.embedding.coords);
}
