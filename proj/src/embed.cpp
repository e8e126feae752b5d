#include "distembed/embed.hpp"

#include <Eigen/SVD>

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace distembed {

namespace {

// h-projections of the embedding's differential: hphi[i](k, m) = (D_k phi_m)[i].
MatrixStack project_differential(const Matrix& phi, const DeviationStack& dev) {
  const int n = static_cast<int>(phi.rows());
  const int dim = static_cast<int>(phi.cols());
  MatrixStack hphi(n, dim);
  for (int k = 0; k < dev.count(); ++k)
    for (int m = 0; m < dim; ++m) {
      Vector col = dev.apply(k, phi.col(m));
      for (int i = 0; i < n; ++i) hphi.at(i)(k, m) = col(i);
    }
  return hphi;
}

Matrix rhs_divergence_impl(const MatrixStack& a, const DeviationStack& dev) {
  const int n = a.count();
  const int dim = a.dim();
  Matrix rhs = Matrix::Zero(n, dim);
  Vector column(n);
  for (int m = 0; m < dim; ++m)
    for (int k = 0; k < dim; ++k) {
      for (int i = 0; i < n; ++i) column(i) = a.at(i)(k, m);
      rhs.col(m) += dev.apply_transpose(k, column);
    }
  return rhs;
}

MatrixStack compute_B_impl(const MatrixStack& hphi, const MatrixStack& a) {
  const int n = a.count();
  MatrixStack b(n, a.dim());
  for (int i = 0; i < n; ++i) b.at(i) = hphi.at(i).transpose() * a.at(i);
  return b;
}

double objective_impl(const MatrixStack& hphi, const MatrixStack& a) {
  double j = 0.0;
  for (int i = 0; i < a.count(); ++i) j += (hphi.at(i) - a.at(i)).squaredNorm();
  return 0.5 * j;
}

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

}  // namespace

Matrix rhs_divergence(const MatrixStack& a, const LocalFrameSet& frames) {
  return rhs_divergence_impl(a, DeviationStack(frames));
}

MatrixStack compute_B(const Matrix& phi, const MatrixStack& a, const LocalFrameSet& frames) {
  DeviationStack dev(frames);
  return compute_B_impl(project_differential(phi, dev), a);
}

Matrix polar_align(const Matrix& b) {
  if (!b.allFinite()) throw NumericalError("non-finite alignment matrix");
  if (b.squaredNorm() == 0.0) return Matrix::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().transpose();
}

void gauge_fix(const MatrixStack& b, MatrixStack& q_candidate) {
  const int dim = b.dim();
  Matrix total = Matrix::Zero(dim, dim);
  for (int i = 0; i < b.count(); ++i) total += b.at(i);
  Matrix q0 = polar_align(total);
  for (int i = 0; i < q_candidate.count(); ++i)
    q_candidate.at(i) = (q0.transpose() * q_candidate.at(i)).eval();
}

double convergence_error(const MatrixStack& q_old, const MatrixStack& q_new) {
  const int n = q_old.count();
  const int dim = q_old.dim();
  Matrix eye = Matrix::Identity(dim, dim);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = spectral_norm(q_old.at(i).transpose() * q_new.at(i) - eye);
    acc += s * s;
  }
  return std::sqrt(acc / n);
}

double objective(const Matrix& phi, const MatrixStack& a, const LocalFrameSet& frames) {
  DeviationStack dev(frames);
  return objective_impl(project_differential(phi, dev), a);
}

namespace {

// Lowest nonzero eigenvectors of the deflated Laplacian by inverse subspace
// iteration, finished with a Rayleigh-Ritz rotation. Deterministic.
Matrix lowest_eigenvectors(const SpMat& laplacian, const IncompleteCholesky& precond, int count) {
  const int n = static_cast<int>(laplacian.rows());
  std::mt19937_64 rng(0x737065637472ULL);
  Matrix x(n, count);
  for (int c = 0; c < count; ++c)
    for (int i = 0; i < n; ++i)
      x(i, c) = static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;

  PcgOptions inner{1e-8, 0};
  for (int sweep = 0; sweep < 40; ++sweep) {
    for (int c = 0; c < count; ++c) x.col(c) = pcg_solve(laplacian, x.col(c), precond, inner).x;
    Eigen::HouseholderQR<Matrix> qr(x);
    x = qr.householderQ() * Matrix::Identity(n, count);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> ritz(x.transpose() * (laplacian * x));
  return x * ritz.eigenvectors();  // ascending Ritz values
}

}  // namespace

EmbedResult run_embedding(const DistanceGraph& g, int dim, const EmbedOptions& opts) {
  LocalFrameSet frames = build_frame_field(g, dim, opts.threads);
  return run_embedding(g, frames, opts);
}

EmbedResult run_embedding(const DistanceGraph& g, const LocalFrameSet& frames,
                          const EmbedOptions& opts) {
  using Clock = std::chrono::steady_clock;
  const int n = g.num_vertices();
  const int dim = frames.dim;
  if (static_cast<int>(frames.frame_inv.front().rows()) != n)
    throw InputError("frame field does not match the graph");

  DeviationStack dev(frames);
  SpMat laplacian = assemble_laplacian(frames);
  IncompleteCholesky precond(laplacian, {opts.ict_drop_tol, opts.ict_shift, 8});

  EmbedResult result;
  MatrixStack a_initial = alpha_projection(frames);
  MatrixStack a = a_initial;
  MatrixStack q_total = MatrixStack::identity(n, dim);
  result.report.initial_objective = [&] {
    double j = 0.0;
    for (int i = 0; i < n; ++i) j += a.at(i).squaredNorm();
    return 0.5 * j;
  }();

  if (opts.spectral_init && n > dim) {
    // Align the transport once against a spectral sketch of the manifold;
    // the identity start then carries the right global winding.
    Matrix sketch = lowest_eigenvectors(laplacian, precond, dim);
    MatrixStack hsketch = project_differential(sketch, dev);
    for (int i = 0; i < n; ++i) {
      Matrix seed = polar_align(Matrix(hsketch.at(i).transpose() * a.at(i)));
      q_total.at(i) = seed;
      a.at(i) = (a_initial.at(i) * seed).eval();
    }
  }

  // Scale reference for detecting an exactly divergence-free transport.
  double rhs_scale = 0.0;
  {
    double a_max = 0.0;
    for (int i = 0; i < n; ++i) a_max = std::max(a_max, a.at(i).cwiseAbs().maxCoeff());
    double d_max = 0.0;
    for (int k = 0; k < dim; ++k) {
      for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (SpMatR::InnerIterator it(dev.comp(k), i); it; ++it) row += std::abs(it.value());
        d_max = std::max(d_max, row);
      }
    }
    rhs_scale = a_max * d_max * dim;
  }

  Matrix phi = Matrix::Zero(n, dim);
  Matrix phi_prev = Matrix::Zero(n, dim);
  double err_prev = std::numeric_limits<double>::quiet_NaN();
  double objective_prev = result.report.initial_objective;

  PcgOptions pcg_opts{opts.pcg_tol, opts.pcg_max_iterations};

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    auto t0 = Clock::now();
    IterationRecord rec;
    rec.n = iter;

    Matrix rhs = rhs_divergence_impl(a, dev);

    // A transport with exactly zero divergence pins the scheme to phi = 0
    // with no alignment information (mirror-symmetric degenerate inputs).
    // Restart once from a deterministic reflection seed.
    if (iter == 1 && rhs.cwiseAbs().maxCoeff() <= 1e-12 * rhs_scale) {
      for (int i = 1; i < n; i += 2) {
        q_total.at(i)(dim - 1, dim - 1) = -1.0;
        a.at(i) = (a_initial.at(i) * q_total.at(i)).eval();
      }
      result.report.degenerate_restart = true;
      rhs = rhs_divergence_impl(a, dev);
    }

    for (int m = 0; m < dim; ++m) {
      PcgResult sol = pcg_solve(laplacian, rhs.col(m), precond, pcg_opts);
      phi.col(m) = sol.x;
      rec.pcg_iterations.push_back(sol.iterations);
    }
    if (!phi.allFinite()) throw NumericalError("non-finite embedding iterate");

    MatrixStack hphi = project_differential(phi, dev);
    rec.objective_solve = objective_impl(hphi, a);
    {
      MatrixStack hdelta = project_differential(phi - phi_prev, dev);
      double e = 0.0;
      for (int i = 0; i < n; ++i) e += hdelta.at(i).squaredNorm();
      rec.dphi_energy = 0.5 * e;
    }

    MatrixStack b = compute_B_impl(hphi, a);
    MatrixStack q_update(n, dim);
    for (int i = 0; i < n; ++i) q_update.at(i) = polar_align(b.at(i));
    gauge_fix(b, q_update);

    MatrixStack q_next(n, dim);
    for (int i = 0; i < n; ++i) q_next.at(i) = q_total.at(i) * q_update.at(i);
    rec.err = convergence_error(q_total, q_next);

    q_total = q_next;
    for (int i = 0; i < n; ++i) a.at(i) = (a.at(i) * q_update.at(i)).eval();
    rec.objective = objective_impl(hphi, a);

    if (rec.objective > objective_prev + 1e-8 * std::abs(objective_prev))
      ++result.report.monotonicity_violations;
    objective_prev = rec.objective;

    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    result.report.iterations.push_back(rec);

    if (rec.err < opts.tol) {
      result.report.converged = true;
      result.report.stop_reason = "convergence error below tol";
      break;
    }
    if (iter > 1 && std::abs(rec.err - err_prev) < opts.var_tol) {
      result.report.converged = true;
      result.report.stop_reason = "sequential variation below var_tol";
      break;
    }
    if (iter == opts.max_iterations) {
      result.report.converged = false;
      result.report.stop_reason = "maximum iterations reached";
    }
    err_prev = rec.err;
    phi_prev = phi;
  }

  result.embedding.coords = phi;
  result.alignment.q = std::move(q_total);
  result.alignment.a = std::move(a);
  return result;
}

}  // namespace distembed
