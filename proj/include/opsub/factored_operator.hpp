#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "opsub/error.hpp"

namespace opsub {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Default cap on the number of entries of any dense operator or stack.
inline constexpr std::size_t kDefaultDenseCap = std::size_t{1} << 24;

using DenseOperator = Matrix;

/// An m x n operator stored as a sum of rank-one products
///   S = sum_k alpha_k (x) beta_k,   i.e. S = A * B^T,
/// with the alphas as the columns of A (m x K) and the betas as the columns
/// of B (n x K). Immutable after construction.
class FactoredOperator {
 public:
  FactoredOperator(Matrix alphas, Matrix betas)
      : alphas_(std::move(alphas)), betas_(std::move(betas)) {
    if (alphas_.cols() != betas_.cols())
      throw DimensionError("alpha and beta blocks disagree on the number of pairs");
    if (alphas_.cols() < 1) throw DimensionError("a factored operator needs at least one pair");
    if (alphas_.rows() < 1 || betas_.rows() < 1)
      throw DimensionError("factored operator dimensions must be positive");
  }

  /// Builds from explicit (alpha, beta) pairs; all alphas (betas) must share a length.
  static FactoredOperator from_pairs(const std::vector<std::pair<Vector, Vector>>& pairs) {
    if (pairs.empty()) throw DimensionError("a factored operator needs at least one pair");
    const Index m = pairs.front().first.size();
    const Index n = pairs.front().second.size();
    Matrix a(m, static_cast<Index>(pairs.size()));
    Matrix b(n, static_cast<Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].first.size() != m || pairs[k].second.size() != n)
        throw DimensionError("pair " + std::to_string(k) + " has inconsistent lengths");
      a.col(static_cast<Index>(k)) = pairs[k].first;
      b.col(static_cast<Index>(k)) = pairs[k].second;
    }
    return FactoredOperator(std::move(a), std::move(b));
  }

  Index rows() const noexcept { return alphas_.rows(); }  // m
  Index cols() const noexcept { return betas_.rows(); }   // n
  Index rank_bound() const noexcept { return alphas_.cols(); }  // |K|

  const Matrix& alphas() const noexcept { return alphas_; }
  const Matrix& betas() const noexcept { return betas_; }

 private:
  Matrix alphas_;
  Matrix betas_;
};

using Family = std::vector<FactoredOperator>;

/// y = sum_k alpha_k <beta_k, u>
inline Vector apply(const FactoredOperator& s, const Eigen::Ref<const Vector>& u) {
  if (u.size() != s.cols())
    throw DimensionError("apply: input has length " + std::to_string(u.size()) +
                         ", operator expects " + std::to_string(s.cols()));
  return s.alphas() * (s.betas().transpose() * u);
}

/// Frobenius inner product tr(Sa^T Sb) evaluated on the factors only.
inline double inner(const FactoredOperator& sa, const FactoredOperator& sb) {
  if (sa.rows() != sb.rows() || sa.cols() != sb.cols())
    throw DimensionError("inner: operator shapes differ");
  const Matrix ga = sa.alphas().transpose() * sb.alphas();
  const Matrix gb = sa.betas().transpose() * sb.betas();
  return ga.cwiseProduct(gb).sum();
}

inline double frobenius_norm(const FactoredOperator& s) {
  return std::sqrt(std::max(0.0, inner(s, s)));
}

/// Squared Frobenius norm; identical to inner(s, s).
inline double frobenius_norm_sq(const FactoredOperator& s) { return inner(s, s); }

inline double total_energy(const Family& samples) {
  double acc = 0.0;
  for (const auto& s : samples) acc += inner(s, s);
  return acc;
}

inline void check_dense_cap(std::size_t entries, std::size_t cap) {
  if (entries > cap) throw SizeCapError(entries, cap);
}

/// Materializes A * B^T. Refuses above `cap` entries.
inline DenseOperator densify(const FactoredOperator& s, std::size_t cap = kDefaultDenseCap) {
  check_dense_cap(static_cast<std::size_t>(s.rows()) * static_cast<std::size_t>(s.cols()), cap);
  return s.alphas() * s.betas().transpose();
}

/// Common (m, n) of a non-empty family; throws when shapes disagree.
inline std::pair<Index, Index> family_shape(const Family& samples) {
  if (samples.empty()) throw InvalidArgument("empty operator family");
  const Index m = samples.front().rows();
  const Index n = samples.front().cols();
  for (std::size_t l = 1; l < samples.size(); ++l)
    if (samples[l].rows() != m || samples[l].cols() != n)
      throw DimensionError("operator " + std::to_string(l) + " has shape " +
                           std::to_string(samples[l].rows()) + "x" +
                           std::to_string(samples[l].cols()) + ", family is " +
                           std::to_string(m) + "x" + std::to_string(n));
  return {m, n};
}

inline Index total_pairs(const Family& samples) {
  Index k = 0;
  for (const auto& s : samples) k += s.rank_bound();
  return k;
}

}  // namespace opsub
