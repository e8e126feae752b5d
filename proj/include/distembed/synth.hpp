#pragma once

#include <cstdint>
#include <string>

#include "distembed/graph.hpp"
#include "distembed/types.hpp"

namespace distembed {

/// Synthetic sample with its ground-truth parameterization. `aux_r3` holds
/// the flat torus' short 3D embedding and is empty otherwise.
struct SampledManifold {
  std::string name;
  Matrix points;  // #samples x ambient dim
  Matrix params;  // #samples x intrinsic dim
  Matrix aux_r3;
};

/// Swiss roll (t cos t, h, t sin t), t in [1.5 pi, 4.5 pi], h in [0, 21],
/// uniform in parameter space. Params are (arc length along the spiral, h).
SampledManifold swiss_roll(int n, std::uint64_t seed);

/// Klein bottle figure in R^3, uniform (u, v) in [0, 2 pi)^2.
SampledManifold klein_bottle(int n, std::uint64_t seed);

/// Flat torus (2 cos u, 2 sin u, cos v, sin v) in R^4 plus the short R^3
/// embedding (cos u (2 + sin v), sin u (2 + sin v), cos v).
SampledManifold flat_torus(int n, std::uint64_t seed);

struct TwoNnOptions {
  bool cdf_fit = false;           // linear fit on the empirical CDF instead of the MLE
  double discard_fraction = 0.1;  // top ratios discarded by the fit variant
};

/// TwoNN intrinsic-dimension estimate from the ratio of each sample's two
/// nearest-neighbor distances.
double twonn_dimension(const Matrix& points, const TwoNnOptions& opts = {});

/// Graph variant: the two smallest incident edge weights stand in for the
/// nearest-neighbor distances; vertices of degree one are skipped.
double twonn_dimension(const DistanceGraph& g, const TwoNnOptions& opts = {});

}  // namespace distembed
