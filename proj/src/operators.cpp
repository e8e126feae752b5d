#include "distembed/operators.hpp"

#include <string>

namespace distembed {

namespace {

void check_shapes(const SpMatR& z, const SpMatR& f) {
  if (z.rows() != f.rows() || z.cols() != f.cols())
    throw InputError("edge function shape does not match the frame pattern");
}

}  // namespace

Vector edge_projection(const EdgeFunction& edge_fn, const SpMatR& frame_inv_comp) {
  check_shapes(edge_fn, frame_inv_comp);
  const int n = static_cast<int>(frame_inv_comp.rows());
  Vector h = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    SpMatR::InnerIterator zit(edge_fn, i);
    SpMatR::InnerIterator fit(frame_inv_comp, i);
    double acc = 0.0;
    for (; zit; ++zit) {
      while (fit && fit.col() < zit.col()) ++fit;
      if (!fit || fit.col() != zit.col())
        throw InputError("edge function entry (" + std::to_string(i) + ", " +
                         std::to_string(zit.col()) + ") lies outside the adjacency pattern");
      acc += fit.value() * zit.value();
    }
    h(i) = acc;
  }
  return h;
}

Vector inner_product_field(const EdgeFunction& eta, const EdgeFunction& zeta,
                           const LocalFrameSet& frames) {
  const int n = static_cast<int>(frames.frame_inv.front().rows());
  Vector out = Vector::Zero(n);
  for (int k = 0; k < frames.dim; ++k) {
    Vector he = edge_projection(eta, frames.frame_inv[k]);
    Vector hz = edge_projection(zeta, frames.frame_inv[k]);
    out.array() += he.array() * hz.array();
  }
  return out;
}

DeviationStack::DeviationStack(const LocalFrameSet& frames) {
  n_ = static_cast<int>(frames.frame_inv.front().rows());
  comp_.reserve(static_cast<size_t>(frames.dim));
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < frames.dim; ++k) {
    const SpMatR& f = frames.frame_inv[k];
    trip.clear();
    trip.reserve(static_cast<size_t>(f.nonZeros()) + n_);
    for (int i = 0; i < n_; ++i) {
      double rowsum = 0.0;
      for (SpMatR::InnerIterator it(f, i); it; ++it) {
        trip.emplace_back(i, static_cast<int>(it.col()), it.value());
        rowsum += it.value();
      }
      trip.emplace_back(i, i, -rowsum);
    }
    SpMatR d(n_, n_);
    d.setFromTriplets(trip.begin(), trip.end());
    d.makeCompressed();
    comp_.push_back(std::move(d));
  }
}

Vector DeviationStack::apply(int k, const Vector& f) const {
  // Difference form: only f(j) - f(i) enters, so constants are annihilated
  // exactly and large common offsets never cancel catastrophically.
  const SpMatR& d = comp_[k];
  Vector out = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    const double fi = f(i);
    double acc = 0.0;
    for (SpMatR::InnerIterator it(d, i); it; ++it)
      if (it.col() != i) acc += it.value() * (f(it.col()) - fi);
    out(i) = acc;
  }
  return out;
}

Vector DeviationStack::apply_transpose(int k, const Vector& h) const {
  const SpMatR& d = comp_[k];
  Vector out = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    const double hi = h(i);
    if (hi == 0.0) continue;
    for (SpMatR::InnerIterator it(d, i); it; ++it) out(it.col()) += it.value() * hi;
  }
  return out;
}

Vector divergence(const EdgeFunction& zeta, const LocalFrameSet& frames) {
  const int n = static_cast<int>(frames.frame_inv.front().rows());
  Vector out = Vector::Zero(n);
  for (int k = 0; k < frames.dim; ++k) {
    const SpMatR& f = frames.frame_inv[k];
    Vector h = edge_projection(zeta, f);
    // D_k^T h = F_k^T h - rowsum(F_k) .* h
    for (int i = 0; i < n; ++i) {
      const double hi = h(i);
      if (hi == 0.0) continue;
      double rowsum = 0.0;
      for (SpMatR::InnerIterator it(f, i); it; ++it) {
        out(it.col()) += it.value() * hi;
        rowsum += it.value();
      }
      out(i) -= rowsum * hi;
    }
  }
  return out;
}

SpMat assemble_laplacian(const LocalFrameSet& frames) {
  DeviationStack dev(frames);
  const int n = dev.size();
  SpMat lap(n, n);
  for (int k = 0; k < dev.count(); ++k) {
    SpMat d = dev.comp(k);  // column-major copy
    SpMat dtd = SpMat(d.transpose()) * d;
    lap = (k == 0) ? dtd : SpMat(lap + dtd);
  }
  // The product is symmetric up to roundoff in summation order; assemble
  // the symmetric part so L = L^T holds exactly.
  SpMat sym = SpMat(0.5 * (lap + SpMat(lap.transpose())));
  sym.makeCompressed();
  return sym;
}

MatrixStack alpha_projection(const LocalFrameSet& frames) {
  const int n = static_cast<int>(frames.frame_inv.front().rows());
  const int dim = frames.dim;
  MatrixStack a(n, dim);
  for (int k = 0; k < dim; ++k)
    for (int m = 0; m < dim; ++m) {
      const SpMatR& fi = frames.frame_inv[k];
      const SpMatR& fr = frames.frame[m];
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        SpMatR::InnerIterator a_it(fi, i);
        SpMatR::InnerIterator b_it(fr, i);
        for (; a_it && b_it; ++a_it, ++b_it) acc += a_it.value() * b_it.value();
        a.at(i)(k, m) = acc;
      }
    }
  return a;
}

}  // namespace distembed
