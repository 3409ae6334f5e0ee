#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"
#include "opsub/linalg.hpp"

namespace opsub {

/// Which side of the operator a basis acts on: the output side (alphas, E)
/// or the input side (betas, F).
enum class Mode { Output, Input };

inline const char* mode_name(Mode mode) { return mode == Mode::Output ? "output" : "input"; }

/// Orthonormal family of r vectors in dimension d, stored as d x r columns.
class OrthoBasis {
 public:
  static constexpr double kOrthoTol = 1e-10;

  OrthoBasis() = default;

  OrthoBasis(Matrix vectors, Mode mode) : vectors_(std::move(vectors)), mode_(mode) {
    if (vectors_.cols() > vectors_.rows())
      throw DimensionError("basis has more vectors than its ambient dimension");
    if (orthonormality_defect(vectors_) > kOrthoTol)
      throw InvalidArgument("basis columns are not orthonormal");
  }

  /// Max-norm of V^T V - Id.
  static double orthonormality_defect(const Matrix& v) {
    if (v.cols() == 0) return 0.0;
    return (v.transpose() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
  }

  const Matrix& vectors() const noexcept { return vectors_; }
  Mode mode() const noexcept { return mode_; }
  Index dim() const noexcept { return vectors_.rows(); }
  Index size() const noexcept { return vectors_.cols(); }
  bool complete() const noexcept { return vectors_.cols() == vectors_.rows(); }

  /// First `r` vectors as a basis of the same mode.
  OrthoBasis leading(Index r) const {
    if (r < 0 || r > size()) throw DimensionError("leading: requested more vectors than available");
    return OrthoBasis(vectors_.leftCols(r), mode_);
  }

 private:
  Matrix vectors_;
  Mode mode_ = Mode::Output;
};

/// Tucker-2 model E (x) F, with E of size m x |I| and F of size n x |J|.
/// `fit` is the summed squared residual sum_l ||S_l - P(S_l)||_F^2 and
/// `history` its value after initialization and after every half-step.
struct SubspaceModel {
  OrthoBasis E;
  OrthoBasis F;
  double fit = 0.0;
  std::vector<double> history;

  Index rows() const noexcept { return E.dim(); }
  Index cols() const noexcept { return F.dim(); }
  Index rank_out() const noexcept { return E.size(); }
  Index rank_in() const noexcept { return F.size(); }
};

/// Coefficients gamma of a projected operator in the E (x) F basis.
struct CoeffMatrix {
  Matrix gamma;
  std::size_t sample_id = 0;
};

namespace detail {

inline void check_model_shape(const FactoredOperator& s, const OrthoBasis& e, const OrthoBasis& f) {
  if (s.rows() != e.dim() || s.cols() != f.dim())
    throw DimensionError("operator is " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()) + " but the subspace acts on " +
                         std::to_string(e.dim()) + "x" + std::to_string(f.dim()));
}

inline Matrix coeffs(const FactoredOperator& s, const Matrix& e, const Matrix& f) {
  return (e.transpose() * s.alphas()) * (f.transpose() * s.betas()).transpose();
}

/// sum_l (||S_l||^2 - ||E^T S_l F||^2), each term clamped at zero.
inline double residual_sum(const Family& samples, const Matrix& e, const Matrix& f) {
  double acc = 0.0;
  for (const auto& s : samples)
    acc += std::max(0.0, frobenius_norm_sq(s) - coeffs(s, e, f).squaredNorm());
  return acc;
}

/// Columns whose Gram equals sum_l S_l W S_l^T where W = other * other^T and
/// `other` is a basis on the opposite mode (or the identity when absent).
/// For the output mode with other = F this spans [S_1 F | ... | S_L F].
inline Matrix mode_block(const Family& samples, Mode mode, const Matrix* other) {
  const bool out = mode == Mode::Output;
  const Index d = out ? samples.front().rows() : samples.front().cols();
  std::vector<Matrix> parts;
  parts.reserve(samples.size());
  Index width = 0;
  for (const auto& s : samples) {
    const Matrix& near = out ? s.alphas() : s.betas();
    const Matrix& far = out ? s.betas() : s.alphas();
    Matrix part;
    if (other == nullptr) {
      part = near * psd_half_factor(far.transpose() * far);
    } else {
      const Matrix proj = far.transpose() * (*other);  // K x r
      if (proj.cols() <= proj.rows())
        part = near * proj;  // literal block S_l * other
      else
        part = near * psd_half_factor(proj * proj.transpose());
    }
    width += part.cols();
    parts.push_back(std::move(part));
  }
  Matrix z(d, width);
  Index at = 0;
  for (auto& p : parts) {
    z.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return z;
}

}  // namespace detail

/// gamma_{ij} = <S, e_i (x) f_j> = sum_k <alpha_k, e_i><beta_k, f_j>.
inline CoeffMatrix project_coeffs(const FactoredOperator& s, const SubspaceModel& model,
                                  std::size_t sample_id = 0) {
  detail::check_model_shape(s, model.E, model.F);
  return {detail::coeffs(s, model.E.vectors(), model.F.vectors()), sample_id};
}

/// Dense form E * gamma * F^T of a projected operator.
inline DenseOperator reconstruct(const CoeffMatrix& c, const SubspaceModel& model,
                                 std::size_t cap = kDefaultDenseCap) {
  check_dense_cap(static_cast<std::size_t>(model.rows()) * static_cast<std::size_t>(model.cols()), cap);
  return model.E.vectors() * c.gamma * model.F.vectors().transpose();
}

/// The projection E * gamma * F^T written back as a factored operator with
/// |J| pairs (alpha_j = E gamma_{:,j}, beta_j = f_j).
inline FactoredOperator to_factored(const CoeffMatrix& c, const SubspaceModel& model) {
  if (c.gamma.rows() != model.rank_out() || c.gamma.cols() != model.rank_in())
    throw DimensionError("coefficient matrix does not match the model ranks");
  if (model.rank_in() == 0)
    return FactoredOperator(Matrix::Zero(model.rows(), 1), Matrix::Zero(model.cols(), 1));
  return FactoredOperator(model.E.vectors() * c.gamma, model.F.vectors());
}

/// ||S - P(S)||_F^2 = ||S||_F^2 - ||gamma||_F^2, clamped at zero.
inline double residual_norm_sq(const FactoredOperator& s, const SubspaceModel& model) {
  detail::check_model_shape(s, model.E, model.F);
  const double total = frobenius_norm_sq(s);
  const double kept = detail::coeffs(s, model.E.vectors(), model.F.vectors()).squaredNorm();
  return std::max(0.0, total - kept);
}

/// Summed squared residual of a whole family; the objective minimized by the fit.
inline double fit_value(const Family& samples, const OrthoBasis& e, const OrthoBasis& f) {
  for (const auto& s : samples) detail::check_model_shape(s, e, f);
  return detail::residual_sum(samples, e.vectors(), f.vectors());
}

/// Per-direction energies ||sum_k <b_i, x_k> y_k||^2 of S against a complete
/// basis, where (x, y) = (alpha, beta) for the output mode and (beta, alpha)
/// for the input mode.
inline Vector direction_energies(const FactoredOperator& s, const OrthoBasis& full) {
  const bool out = full.mode() == Mode::Output;
  const Matrix& near = out ? s.alphas() : s.betas();
  const Matrix& far = out ? s.betas() : s.alphas();
  if (near.rows() != full.dim()) throw DimensionError("basis dimension does not match operator");
  if (!full.complete()) throw InvalidArgument("truncation error needs a complete basis");
  const Matrix c = full.vectors().transpose() * near;  // d x K
  const Matrix gfar = far.transpose() * far;            // K x K
  return (c * gfar).cwiseProduct(c).rowwise().sum().cwiseMax(0.0);
}

/// ||S - S~||_F^2 where S~ keeps only the first `keep` directions of `full`
/// on one side and leaves the other side untouched. Summed over the
/// discarded directions, last to first.
inline double truncation_error_one_sided(const FactoredOperator& s, const OrthoBasis& full, Index keep) {
  const Vector energy = direction_energies(s, full);
  if (keep < 0 || keep > full.dim()) throw DimensionError("keep outside [0, d]");
  double acc = 0.0;
  for (Index i = full.dim() - 1; i >= keep; --i) acc += energy(i);
  return acc;
}

struct StoppingRule {
  int max_iters = 20;
  double rel_tol = 1e-8;
};

/// Truncated HOSVD: E holds the top-|I| eigenvectors of
/// sum_l A_l (B_l^T B_l) A_l^T and F the top-|J| eigenvectors of
/// sum_l B_l (A_l^T A_l) B_l^T, both in descending eigenvalue order.
inline SubspaceModel hosvd_init(const Family& samples, Index rank_out, Index rank_in) {
  family_shape(samples);
  auto e = detail::leading_subspace(detail::mode_block(samples, Mode::Output, nullptr), rank_out,
                                    "output");
  auto f = detail::leading_subspace(detail::mode_block(samples, Mode::Input, nullptr), rank_in,
                                    "input");
  SubspaceModel model{OrthoBasis(std::move(e.basis), Mode::Output),
                      OrthoBasis(std::move(f.basis), Mode::Input), 0.0, {}};
  model.fit = fit_value(samples, model.E, model.F);
  model.history = {model.fit};
  return model;
}

/// Alternating least squares on the Tucker-2 objective. Each half-step
/// replaces one basis with the leading singular subspace of the family with
/// the other basis held fixed. Returns the best model visited.
inline SubspaceModel als_fit(const Family& samples, Index rank_out, Index rank_in,
                             const SubspaceModel& init, StoppingRule stopping = {}) {
  const auto [m, n] = family_shape(samples);
  if (init.rows() != m || init.cols() != n || init.rank_out() != rank_out ||
      init.rank_in() != rank_in)
    throw DimensionError("initial model does not match the family and requested ranks");
  if (stopping.max_iters < 0) throw InvalidArgument("max_iters must be nonnegative");
  const Index pairs = total_pairs(samples);
  if (rank_out > std::min(m, pairs))
    throw RankDeficiencyError("output", static_cast<std::size_t>(rank_out), static_cast<std::size_t>(std::min(m, pairs)));
  if (rank_in > std::min(n, pairs))
    throw RankDeficiencyError("input", static_cast<std::size_t>(rank_in), static_cast<std::size_t>(std::min(n, pairs)));

  const double energy = total_energy(samples);
  Matrix e = init.E.vectors();
  Matrix f = init.F.vectors();
  double current = detail::residual_sum(samples, e, f);

  SubspaceModel best{init.E, init.F, current, {current}};
  std::vector<double> history{current};
  // Nothing left to fit at the start.
  const double floor = energy * 1e-15;

  for (int it = 0; it < stopping.max_iters && current > floor; ++it) {
    const double start = current;

    e = detail::leading_subspace(detail::mode_block(samples, Mode::Output, &f), rank_out, "output", true)
            .basis;
    current = detail::residual_sum(samples, e, f);
    history.push_back(current);
    if (current < best.fit) best = {OrthoBasis(e, Mode::Output), OrthoBasis(f, Mode::Input), current, {}};

    f = detail::leading_subspace(detail::mode_block(samples, Mode::Input, &e), rank_in, "input", true)
            .basis;
    current = detail::residual_sum(samples, e, f);
    history.push_back(current);
    if (current < best.fit) best = {OrthoBasis(e, Mode::Output), OrthoBasis(f, Mode::Input), current, {}};

    if (start - current < stopping.rel_tol * start) break;
  }
  best.history = std::move(history);
  return best;
}

/// Orthonormal DCT-II family: column k is c_k cos(pi (i + 1/2) k / d) for
/// the lowest r frequencies.
inline OrthoBasis dct_basis(Index d, Index r, Mode mode = Mode::Output) {
  if (d < 1 || r < 0 || r > d) throw InvalidArgument("dct_basis requires 0 <= r <= d, d >= 1");
  Matrix v(d, r);
  for (Index k = 0; k < r; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / static_cast<double>(d))
                                : std::sqrt(2.0 / static_cast<double>(d));
    for (Index i = 0; i < d; ++i)
      v(i, k) = scale * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) *
                                 static_cast<double>(k) / static_cast<double>(d));
  }
  return OrthoBasis(std::move(v), mode);
}

/// Separable 2-D DCT-II on a rows x cols grid flattened row-major, keeping
/// the r products with the lowest normalized frequency (ky/rows)^2 + (kx/cols)^2.
inline OrthoBasis dct_basis_2d(Index rows, Index cols, Index r, Mode mode = Mode::Output) {
  const Index d = rows * cols;
  if (rows < 1 || cols < 1 || r < 0 || r > d) throw InvalidArgument("dct_basis_2d: bad sizes");
  const Matrix vy = dct_basis(rows, rows).vectors();
  const Matrix vx = dct_basis(cols, cols).vectors();
  std::vector<std::tuple<double, Index, Index>> order;
  order.reserve(static_cast<std::size_t>(d));
  for (Index ky = 0; ky < rows; ++ky)
    for (Index kx = 0; kx < cols; ++kx) {
      const double fy = static_cast<double>(ky) / static_cast<double>(rows);
      const double fx = static_cast<double>(kx) / static_cast<double>(cols);
      order.emplace_back(fy * fy + fx * fx, ky, kx);
    }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
  Matrix v(d, r);
  for (Index k = 0; k < r; ++k) {
    const auto [_, ky, kx] = order[static_cast<std::size_t>(k)];
    for (Index y = 0; y < rows; ++y)
      for (Index x = 0; x < cols; ++x) v(y * cols + x, k) = vy(y, ky) * vx(x, kx);
  }
  return OrthoBasis(std::move(v), mode);
}

/// Fixed-basis model; the fit is evaluated on `samples`.
inline SubspaceModel fixed_model(const Family& samples, OrthoBasis e, OrthoBasis f) {
  SubspaceModel model{std::move(e), std::move(f), 0.0, {}};
  model.fit = fit_value(samples, model.E, model.F);
  model.history = {model.fit};
  return model;
}

/// Residual curve of the SVD of the vectorized family: entry r is
/// sum_l ||vec(S_l) - P_r vec(S_l)||^2 for r = 0..|L|, with P_r the projector
/// onto the top-r left singular vectors of the (mn) x |L| stack.
inline std::vector<double> full_svd_baseline(const Family& samples,
                                             std::size_t cap = kDefaultDenseCap) {
  const auto [m, n] = family_shape(samples);
  const auto count = static_cast<Index>(samples.size());
  check_dense_cap(static_cast<std::size_t>(m) * static_cast<std::size_t>(n) *
                      static_cast<std::size_t>(count),
                  cap);
  Matrix stack(m * n, count);
  for (Index l = 0; l < count; ++l) {
    const auto& s = samples[static_cast<std::size_t>(l)];
    Eigen::Map<Matrix>(stack.col(l).data(), m, n).noalias() =
        s.alphas() * s.betas().transpose();
  }
  Eigen::BDCSVD<Matrix> svd(stack, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  std::vector<double> curve(static_cast<std::size_t>(count) + 1, 0.0);
  for (Index r = count - 1; r >= 0; --r) {
    const double s = r < sv.size() ? sv(r) : 0.0;
    curve[static_cast<std::size_t>(r)] = curve[static_cast<std::size_t>(r) + 1] + s * s;
  }
  curve[0] = total_energy(samples);
  return curve;
}

}  // namespace opsub
