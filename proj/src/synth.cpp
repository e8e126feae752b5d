#include "distembed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace distembed {

namespace {

// Platform-stable uniform doubles in [0, 1).
inline double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Arc length of the spiral (t cos t, t sin t) from t0: integral of sqrt(1 + t^2).
double spiral_arc_length(double t, double t0) {
  auto antiderivative = [](double u) { return 0.5 * (u * std::sqrt(1.0 + u * u) + std::asinh(u)); };
  return antiderivative(t) - antiderivative(t0);
}

}  // namespace

SampledManifold swiss_roll(int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be positive");
  constexpr double t_lo = 1.5 * std::numbers::pi;
  constexpr double t_hi = 4.5 * std::numbers::pi;
  constexpr double h_hi = 21.0;

  std::mt19937_64 rng(seed);
  SampledManifold out;
  out.name = "swiss_roll";
  out.points.resize(n, 3);
  out.params.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double t = t_lo + (t_hi - t_lo) * next_uniform(rng);
    const double h = h_hi * next_uniform(rng);
    out.points(i, 0) = t * std::cos(t);
    out.points(i, 1) = h;
    out.points(i, 2) = t * std::sin(t);
    out.params(i, 0) = spiral_arc_length(t, t_lo);
    out.params(i, 1) = h;
  }
  return out;
}

SampledManifold klein_bottle(int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be positive");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(seed);
  SampledManifold out;
  out.name = "klein_bottle";
  out.points.resize(n, 3);
  out.params.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    const double u = two_pi * next_uniform(rng);
    const double v = two_pi * next_uniform(rng);
    const double lobe = u <= std::numbers::pi ? 1.0 : 0.0;
    out.points(i, 0) = 6.0 * std::cos(u) * (1.0 + std::sin(u)) +
                       4.0 * (1.0 - 0.5 * std::sin(u)) *
                           (std::cos(u) * std::cos(v) * lobe + std::cos(v + std::numbers::pi) * (1.0 - lobe));
    out.points(i, 1) =
        16.0 * std::sin(u) + 4.0 * (1.0 - 0.5 * std::cos(u)) * std::sin(u) * std::cos(v) * lobe;
    out.points(i, 2) = 4.0 * (1.0 - 0.5 * std::cos(u)) * std::sin(v);
    out.params(i, 0) = u;
    out.params(i, 1) = v;
  }
  return out;
}

SampledManifold flat_torus(int n, std::uint64_t seed) {
  if (n < 1) throw InputError("sample count must be positive");
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(seed);
  SampledManifold out;
  out.name = "flat_torus";
  out.points.resize(n, 4);
  out.params.resize(n, 2);
  out.aux_r3.resize(n, 3);
  for (int i = 0; i < n; ++i) {
    const double u = two_pi * next_uniform(rng);
    const double v = two_pi * next_uniform(rng);
    out.points(i, 0) = 2.0 * std::cos(u);
    out.points(i, 1) = 2.0 * std::sin(u);
    out.points(i, 2) = std::cos(v);
    out.points(i, 3) = std::sin(v);
    out.aux_r3(i, 0) = std::cos(u) * (2.0 + std::sin(v));
    out.aux_r3(i, 1) = std::sin(u) * (2.0 + std::sin(v));
    out.aux_r3(i, 2) = std::cos(v);
    out.params(i, 0) = u;
    out.params(i, 1) = v;
  }
  return out;
}

namespace {

double twonn_from_ratios(std::vector<double> mu, const TwoNnOptions& opts) {
  const int n = static_cast<int>(mu.size());
  if (n < 10) throw InputError("TwoNN needs at least 10 usable samples");
  if (!opts.cdf_fit) {
    double acc = 0.0;
    for (double m : mu) acc += std::log(m);
    if (!(acc > 0.0)) throw InputError("degenerate neighbor ratios in TwoNN");
    return static_cast<double>(n) / acc;
  }
  // Fit -log(1 - F) = d log(mu) through the origin on the empirical CDF,
  // discarding the largest ratios.
  std::sort(mu.begin(), mu.end());
  const int keep = std::max(2, static_cast<int>(n * (1.0 - opts.discard_fraction)));
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < keep; ++i) {
    const double x = std::log(mu[i]);
    const double y = -std::log(1.0 - static_cast<double>(i + 1) / (n + 1));
    sxy += x * y;
    sxx += x * x;
  }
  if (!(sxx > 0.0)) throw InputError("degenerate neighbor ratios in TwoNN");
  return sxy / sxx;
}

}  // namespace

double twonn_dimension(const Matrix& points, const TwoNnOptions& opts) {
  const int n = static_cast<int>(points.rows());
  if (n < 10) throw InputError("TwoNN needs at least 10 samples");
  std::vector<double> mu;
  mu.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double r1 = std::numeric_limits<double>::infinity();
    double r2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = (points.row(i) - points.row(j)).squaredNorm();
      if (d < r1) {
        r2 = r1;
        r1 = d;
      } else if (d < r2) {
        r2 = d;
      }
    }
    if (r1 == 0.0) throw InputError("duplicate points at row " + std::to_string(i));
    mu.push_back(std::sqrt(r2 / r1));
  }
  return twonn_from_ratios(std::move(mu), opts);
}

double twonn_dimension(const DistanceGraph& g, const TwoNnOptions& opts) {
  std::vector<double> mu;
  for (int v = 0; v < g.num_vertices(); ++v) {
    auto nb = g.neighbors(v);
    if (nb.size() < 2) continue;
    double r1 = std::numeric_limits<double>::infinity();
    double r2 = std::numeric_limits<double>::infinity();
    for (const Neighbor& x : nb) {
      if (x.dist < r1) {
        r2 = r1;
        r1 = x.dist;
      } else if (x.dist < r2) {
        r2 = x.dist;
      }
    }
    mu.push_back(r2 / r1);
  }
  return twonn_from_ratios(std::move(mu), opts);
}

}  // namespace distembed
