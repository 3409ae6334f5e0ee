#pragma once

#include <Eigen/Dense>

#include <complex>
#ifndef LAPACK_COMPLEX_CPP
#define LAPACK_COMPLEX_CPP
#endif
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"

namespace opsub::detail {

/// A factor R with R * R^T == W for a symmetric positive semidefinite W.
/// Negative eigenvalues produced by rounding are clamped to zero.
inline Matrix psd_half_factor(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(w);
  Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

struct EigenPairs {
  Vector values;   // descending
  Matrix vectors;  // matching columns
};

/// The r largest eigenpairs of a symmetric matrix (lower triangle read).
inline EigenPairs top_eigenpairs(const Matrix& sym, Index r) {
  const Index n = sym.rows();
  EigenPairs out{Vector(r), Matrix(n, r)};
  if (r == 0) return out;
  Matrix a = sym;
  Vector w(n);
  Matrix z(n, r);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(r));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'L', static_cast<lapack_int>(n), a.data(), static_cast<lapack_int>(n), 0.0,
      0.0, static_cast<lapack_int>(n - r + 1), static_cast<lapack_int>(n), 0.0, &found, w.data(), z.data(),
      static_cast<lapack_int>(n), support.data());
  if (info != 0 || found != r) {
    // Fall back to the full decomposition.
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym.selfadjointView<Eigen::Lower>());
    for (Index i = 0; i < r; ++i) {
      out.values(i) = eig.eigenvalues()(n - 1 - i);
      out.vectors.col(i) = eig.eigenvectors().col(n - 1 - i);
    }
    return out;
  }
  for (Index i = 0; i < r; ++i) {
    out.values(i) = w(r - 1 - i);
    out.vectors.col(i) = z.col(r - 1 - i);
  }
  return out;
}

struct LeadingSubspace {
  Matrix basis;      // d x r, orthonormal columns
  Vector energies;   // top r eigenvalues of Z Z^T, descending
};

/// Top-r left singular subspace of Z (d x k) computed through the smaller of
/// the two Gram matrices Z Z^T (d x d) and Z^T Z (k x k).
///
/// Directions with zero energy are completed by an orthonormal complement,
/// which leaves every residual unchanged. With `complete` set, r may exceed
/// the column count of Z and the extra directions are such a completion.
inline LeadingSubspace leading_subspace(const Matrix& z, Index r, const std::string& mode,
                                        bool complete = false) {
  const Index d = z.rows();
  const Index k = z.cols();
  const Index attainable = complete ? d : std::min(d, k);
  if (r < 0 || r > attainable)
    throw RankDeficiencyError(mode, static_cast<std::size_t>(std::max<Index>(r, 0)),
                              static_cast<std::size_t>(attainable));
  LeadingSubspace out;
  out.basis.resize(d, r);
  out.energies.resize(r);
  if (r == 0) return out;

  if (d <= k) {
    Matrix gram = Matrix::Zero(d, d);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(z);
    const EigenPairs eig = top_eigenpairs(gram, r);
    out.basis = eig.vectors;
    out.energies = eig.values.cwiseMax(0.0);
    return out;
  }

  Matrix gram = Matrix::Zero(k, k);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose());
  const EigenPairs eig = top_eigenpairs(gram, std::min(r, k));
  const double top = std::max(0.0, eig.values(0));
  Matrix lifted(d, r);
  for (Index i = 0; i < r; ++i) {
    const double lambda = i < k ? std::max(0.0, eig.values(i)) : 0.0;
    out.energies(i) = lambda;
    const double sigma = std::sqrt(lambda);
    if (sigma > 0.0 && lambda > top * 1e-28)
      lifted.col(i) = z * eig.vectors.col(i) / sigma;
    else
      lifted.col(i).setZero();
  }
  // Re-orthonormalize; Householder QR keeps the span of each leading
  // prefix of columns and completes zero columns with orthogonal directions.
  Eigen::HouseholderQR<Matrix> qr(lifted);
  Matrix q = qr.householderQ() * Matrix::Identity(d, r);
  const Matrix& rr = qr.matrixQR();
  for (Index i = 0; i < r; ++i)
    if (rr(i, i) < 0.0) q.col(i) = -q.col(i);
  out.basis = std::move(q);
  return out;
}

/// Deterministic unit start vector for power iteration.
inline Vector power_start(Index n) {
  std::mt19937_64 rng(0x5eed5eedULL);
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = 0.5 + static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return v.normalized();
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
inline double largest_eigenvalue_psd(const Matrix& g, double tol = 1e-10, int max_iters = 1000) {
  const Index n = g.rows();
  if (n == 0) return 0.0;
  if (g.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Vector v = power_start(n);
  double rq = v.dot(g * v);
  for (int it = 0; it < max_iters; ++it) {
    Vector w = g * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    v = w / norm;
    const double next = v.dot(g * v);
    if (std::abs(next - rq) <= tol * std::abs(next)) return std::max(next, 0.0);
    rq = next;
  }
  // No convergence within the cap; fall back to a direct solve.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues()(n - 1));
}

}  // namespace opsub::detail
