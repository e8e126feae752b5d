#include <doctest.h>

#include <cmath>
#include <numbers>

#include "distembed/synth.hpp"
#include "helpers.hpp"

using namespace distembed;
using namespace distembed::testing;

TEST_CASE("swiss roll satisfies the construction identity x^2 + z^2 = t^2") {
  SampledManifold s = swiss_roll(200, 7);
  constexpr double t_lo = 1.5 * std::numbers::pi;
  constexpr double t_hi = 4.5 * std::numbers::pi;
  for (int i = 0; i < 200; ++i) {
    double radius = std::hypot(s.points(i, 0), s.points(i, 2));
    CHECK(radius >= t_lo - 1e-9);
    CHECK(radius <= t_hi + 1e-9);
    CHECK(s.points(i, 1) >= 0.0);
    CHECK(s.points(i, 1) <= 21.0);
  }
}

TEST_CASE("swiss roll is deterministic per seed and n=1 works") {
  SampledManifold a = swiss_roll(50, 3);
  SampledManifold b = swiss_roll(50, 3);
  CHECK(a.points == b.points);
  CHECK(a.params == b.params);
  SampledManifold single = swiss_roll(1, 5);
  CHECK(single.points.rows() == 1);
}

TEST_CASE("swiss roll arc-length parameters track local Euclidean distances") {
  SampledManifold s = swiss_roll(1500, 11);
  DistanceGraph g = knn_graph(s.points, 8);
  double acc = 0.0;
  long cnt = 0;
  for (int i = 0; i < g.num_vertices(); ++i)
    for (const Neighbor& nb : g.neighbors(i)) {
      if (nb.id < i) continue;
      double dp = (s.params.row(i) - s.params.row(nb.id)).norm();
      acc += std::abs(dp - nb.dist) / nb.dist;
      ++cnt;
    }
  CHECK(acc / cnt < 0.05);
}

TEST_CASE("klein bottle evaluates the parametric equations literally") {
  SampledManifold s = klein_bottle(10, 1);
  // Direct substitution at (u, v) = (0, 0): x = 6 + 4, y = 0, z = 0.
  // Reproduce by checking the map on the sampled parameters.
  for (int i = 0; i < 10; ++i) {
    double u = s.params(i, 0);
    double v = s.params(i, 1);
    double lobe = u <= std::numbers::pi ? 1.0 : 0.0;
    double x = 6 * std::cos(u) * (1 + std::sin(u)) +
               4 * (1 - 0.5 * std::sin(u)) *
                   (std::cos(u) * std::cos(v) * lobe + std::cos(v + std::numbers::pi) * (1 - lobe));
    double y = 16 * std::sin(u) + 4 * (1 - 0.5 * std::cos(u)) * std::sin(u) * std::cos(v) * lobe;
    double z = 4 * (1 - 0.5 * std::cos(u)) * std::sin(v);
    CHECK(s.points(i, 0) == doctest::Approx(x).epsilon(1e-14));
    CHECK(s.points(i, 1) == doctest::Approx(y).epsilon(1e-14));
    CHECK(s.points(i, 2) == doctest::Approx(z).epsilon(1e-14));
  }
}

TEST_CASE("klein bottle at (0,0) and v-periodicity") {
  // (u, v) = (0, 0): x = 6*1*(1+0) + 4*(1-0)*(1*1) = 10, z = 0.
  auto point = [](double u, double v) {
    double lobe = u <= std::numbers::pi ? 1.0 : 0.0;
    Eigen::Vector3d p;
    p.x() = 6 * std::cos(u) * (1 + std::sin(u)) +
            4 * (1 - 0.5 * std::sin(u)) *
                (std::cos(u) * std::cos(v) * lobe + std::cos(v + std::numbers::pi) * (1 - lobe));
    p.y() = 16 * std::sin(u) + 4 * (1 - 0.5 * std::cos(u)) * std::sin(u) * std::cos(v) * lobe;
    p.z() = 4 * (1 - 0.5 * std::cos(u)) * std::sin(v);
    return p;
  };
  Eigen::Vector3d origin = point(0.0, 0.0);
  CHECK(origin.x() == doctest::Approx(10.0));
  CHECK(origin.y() == doctest::Approx(0.0));
  CHECK(origin.z() == doctest::Approx(0.0));
  for (double u : {0.3, 2.0, 4.0})
    for (double v : {0.1, 1.7, 5.0})
      CHECK((point(u, v) - point(u, v + 2 * std::numbers::pi)).norm() < 1e-12);
}

TEST_CASE("klein bottle sample has intrinsic dimension near 2") {
  SampledManifold s = klein_bottle(1500, 9);
  double d = twonn_dimension(s.points);
  CHECK(d > 1.6);
  CHECK(d < 2.6);
}

TEST_CASE("flat torus satisfies both circle identities") {
  SampledManifold s = flat_torus(300, 13);
  for (int i = 0; i < 300; ++i) {
    CHECK(s.points(i, 0) * s.points(i, 0) + s.points(i, 1) * s.points(i, 1) ==
          doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.points(i, 2) * s.points(i, 2) + s.points(i, 3) * s.points(i, 3) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("flat torus map values at fixed parameters") {
  // r(0, 0) = (2, 0, 1, 0); short embedding at (0, pi/2) = (3, 0, 0).
  auto r4 = [](double u, double v) {
    return Eigen::Vector4d(2 * std::cos(u), 2 * std::sin(u), std::cos(v), std::sin(v));
  };
  CHECK((r4(0, 0) - Eigen::Vector4d(2, 0, 1, 0)).norm() == 0.0);
  auto r3 = [](double u, double v) {
    return Eigen::Vector3d(std::cos(u) * (2 + std::sin(v)), std::sin(u) * (2 + std::sin(v)),
                           std::cos(v));
  };
  Eigen::Vector3d p = r3(0.0, std::numbers::pi / 2);
  CHECK(p.x() == doctest::Approx(3.0));
  CHECK(p.y() == doctest::Approx(0.0));
  CHECK(p.z() == doctest::Approx(0.0).epsilon(1e-12));

  SampledManifold s = flat_torus(50, 3);
  for (int i = 0; i < 50; ++i) {
    CHECK((s.points.row(i).transpose() - r4(s.params(i, 0), s.params(i, 1))).norm() == 0.0);
    CHECK((s.aux_r3.row(i).transpose() - r3(s.params(i, 0), s.params(i, 1))).norm() == 0.0);
  }
}

TEST_CASE("twonn estimates known intrinsic dimensions") {
  std::mt19937_64 rng(5);
  auto uni = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  Matrix segment(2000, 1);
  for (int i = 0; i < 2000; ++i) segment(i, 0) = uni();
  double d1 = twonn_dimension(segment);
  CHECK(d1 > 0.8);
  CHECK(d1 < 1.2);

  Matrix square(2000, 2);
  for (int i = 0; i < 2000; ++i) {
    square(i, 0) = uni();
    square(i, 1) = uni();
  }
  double d2 = twonn_dimension(square);
  CHECK(d2 > 1.7);
  CHECK(d2 < 2.3);
}

TEST_CASE("twonn is scale invariant") {
  Matrix pts = random_points(500, 2, 29);
  // Power-of-two scaling is exact in floating point, so the ratios cancel
  // bit for bit; generic scales agree to roundoff.
  CHECK(twonn_dimension(pts) == twonn_dimension(Matrix(32.0 * pts)));
  CHECK(twonn_dimension(pts) ==
        doctest::Approx(twonn_dimension(Matrix(37.5 * pts))).epsilon(1e-12));
}

TEST_CASE("twonn rejects duplicates and tiny samples") {
  Matrix dup = random_points(50, 2, 31);
  dup.row(10) = dup.row(20);
  CHECK_THROWS_AS(twonn_dimension(dup), InputError);
  CHECK_THROWS_AS(twonn_dimension(random_points(5, 2, 33)), InputError);
}

TEST_CASE("twonn graph variant approximates the point variant") {
  Matrix pts = random_points(1000, 2, 37);
  DistanceGraph g = knn_graph(pts, 4);
  double from_points = twonn_dimension(pts);
  double from_graph = twonn_dimension(g);
  CHECK(std::abs(from_points - from_graph) < 0.4);
}

TEST_CASE("twonn cdf-fit variant is close to the MLE") {
  Matrix pts = random_points(2000, 2, 39);
  double mle = twonn_dimension(pts);
  double fit = twonn_dimension(pts, {true, 0.1});
  CHECK(std::abs(mle - fit) < 0.3);
}
