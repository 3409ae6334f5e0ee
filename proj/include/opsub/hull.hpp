#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"
#include "opsub/linalg.hpp"
#include "opsub/simplex.hpp"
#include "opsub/subspace.hpp"

namespace opsub {

/// Convex hull of |L| coefficient matrices in the reduced E (x) F space.
///
/// `gram` holds the pairwise Frobenius inner products of the vertices and
/// `lipschitz` its largest eigenvalue, which is the squared operator norm of
/// lambda -> sum_l lambda_l gamma_l.
struct HullModel {
  std::vector<CoeffMatrix> vertices;
  Matrix gram;
  double lipschitz = 0.0;
  std::optional<SubspaceModel> model;

  Index size() const noexcept { return static_cast<Index>(vertices.size()); }
  Index rank_out() const noexcept { return vertices.empty() ? 0 : vertices.front().gamma.rows(); }
  Index rank_in() const noexcept { return vertices.empty() ? 0 : vertices.front().gamma.cols(); }

  /// (|I||J|) x |L| matrix of vectorized vertices.
  Matrix stacked() const {
    Matrix v(rank_out() * rank_in(), size());
    for (Index l = 0; l < size(); ++l)
      v.col(l) = vertices[static_cast<std::size_t>(l)].gamma.reshaped();
    return v;
  }
};

/// Hull over explicit coefficient matrices, all of one shape.
inline HullModel build_hull(std::vector<CoeffMatrix> vertices,
                            std::optional<SubspaceModel> model = std::nullopt) {
  if (vertices.empty()) throw InvalidArgument("build_hull: empty sample list");
  const Index rows = vertices.front().gamma.rows();
  const Index cols = vertices.front().gamma.cols();
  for (const auto& v : vertices)
    if (v.gamma.rows() != rows || v.gamma.cols() != cols)
      throw DimensionError("build_hull: vertices disagree in shape");
  if (model && (model->rank_out() != rows || model->rank_in() != cols))
    throw DimensionError("build_hull: vertices do not match the model ranks");
  HullModel hull{std::move(vertices), {}, 0.0, std::move(model)};
  const Matrix v = hull.stacked();
  hull.gram = v.transpose() * v;
  hull.lipschitz = detail::largest_eigenvalue_psd(hull.gram);
  return hull;
}

/// Hull of the projections of `samples` onto the subspace of `model`.
inline HullModel build_hull(const Family& samples, const SubspaceModel& model) {
  if (samples.empty()) throw InvalidArgument("build_hull: empty sample list");
  std::vector<CoeffMatrix> vertices;
  vertices.reserve(samples.size());
  for (std::size_t l = 0; l < samples.size(); ++l)
    vertices.push_back(project_coeffs(samples[l], model, l));
  return build_hull(std::move(vertices), model);
}

struct HullOptions {
  int k_end = 500;
  double rel_tol = 1e-10;
  SimplexMethod simplex = SimplexMethod::Sort;
};

/// Step denominators are inflated by this factor over the estimated Lipschitz constant.
inline constexpr double kLipschitzInflation = 1.01;

struct HullProjection {
  SimplexWeights weights;
  CoeffMatrix coeffs;            // sum_l lambda_l gamma_l
  double objective = 0.0;        // 1/2 ||sum_l lambda_l gamma_l - c||^2
  std::vector<double> history;   // objective at lambda_0 and after every iteration
  int iterations = 0;
  bool degenerate = false;       // all vertices zero; weights are uniform
};

/// Accelerated projected gradient on the simplex:
///   x_k     = P(y_k - step * grad(y_k))
///   y_{k+1} = x_k + (k - 1) / (k + 2) * (x_k - x_{k-1})
/// starting from the uniform point. Returns the best iterate seen.
///
/// `grad(y)` and `objective(x)` define the smooth term; `observe(k, x_k)` is
/// called after each projected step.
template <class Gradient, class Objective, class Observer>
SimplexWeights accelerated_simplex_descent(Index count, Gradient&& grad, Objective&& objective,
                                           double step, const HullOptions& opts,
                                           std::vector<double>& history, int& iterations,
                                           Observer&& observe) {
  if (opts.k_end < 1) throw InvalidArgument("k_end must be at least 1");
  Vector previous = Vector::Constant(count, 1.0 / static_cast<double>(count));
  Vector y = previous;
  Vector best = previous;
  const double f0 = objective(previous);
  double best_value = f0;
  history.assign(1, f0);
  std::vector<double> best_history{f0};
  iterations = 0;
  if (f0 <= 0.0) return {best};

  for (int k = 1; k <= opts.k_end; ++k) {
    Vector x = project_simplex(y - step * grad(y), opts.simplex).lambda;
    const double fx = objective(x);
    history.push_back(fx);
    if (fx < best_value) {
      best_value = fx;
      best = x;
    }
    best_history.push_back(best_value);
    observe(k, x);
    iterations = k;
    const double momentum = static_cast<double>(k - 1) / static_cast<double>(k + 2);
    y = x + momentum * (x - previous);
    previous = std::move(x);
    if (k >= 5 && best_history[static_cast<std::size_t>(k - 5)] - best_value < opts.rel_tol * f0)
      break;
  }
  return {best};
}

/// Projects coefficients `c` (|I| x |J|) onto the hull, in Gram form:
/// f(lambda) = 1/2 lambda^T G lambda - lambda^T b + 1/2 ||c||^2 with b_l = <gamma_l, c>.
template <class Observer>
HullProjection project_onto_hull(const CoeffMatrix& c, const HullModel& hull, const HullOptions& opts,
                                 Observer&& observe) {
  if (c.gamma.rows() != hull.rank_out() || c.gamma.cols() != hull.rank_in())
    throw DimensionError("project_onto_hull: coefficients do not match the hull shape");
  const Index count = hull.size();
  const Matrix v = hull.stacked();
  const Vector target = c.gamma.reshaped();
  const Vector b = v.transpose() * target;
  const double c2 = target.squaredNorm();

  HullProjection out;
  auto objective = [&](const Vector& lambda) {
    return std::max(0.0, 0.5 * lambda.dot(hull.gram * lambda) - lambda.dot(b) + 0.5 * c2);
  };

  SimplexWeights weights;
  if (hull.lipschitz <= 0.0) {
    out.degenerate = true;
    weights.lambda = Vector::Constant(count, 1.0 / static_cast<double>(count));
    out.history = {objective(weights.lambda)};
  } else {
    const double step = 1.0 / (kLipschitzInflation * hull.lipschitz);
    auto grad = [&](const Vector& lambda) -> Vector { return hull.gram * lambda - b; };
    weights = accelerated_simplex_descent(count, grad, objective, step, opts, out.history,
                                          out.iterations, observe);
  }
  out.objective = objective(weights.lambda);
  Vector combined = v * weights.lambda;
  out.coeffs = {combined.reshaped(hull.rank_out(), hull.rank_in()), c.sample_id};
  out.weights = std::move(weights);
  return out;
}

inline HullProjection project_onto_hull(const CoeffMatrix& c, const HullModel& hull,
                                        const HullOptions& opts = {}) {
  return project_onto_hull(c, hull, opts, [](int, const Vector&) {});
}

inline const SubspaceModel& require_model(const HullModel& hull) {
  if (!hull.model) throw InvalidArgument("hull has no subspace model attached");
  return *hull.model;
}

/// Reduces `s` to its coefficients in the hull's subspace first; the part of
/// `s` orthogonal to the subspace does not depend on lambda.
inline HullProjection project_onto_hull(const FactoredOperator& s, const HullModel& hull,
                                        const HullOptions& opts = {}) {
  return project_onto_hull(project_coeffs(s, require_model(hull)), hull, opts);
}

struct HullDistance {
  double reduced = 0.0;     // ||sum lambda* gamma_l - c|| in the subspace
  double orthogonal = 0.0;  // ||S - P(S)||_F
  double total() const { return std::sqrt(reduced * reduced + orthogonal * orthogonal); }
};

inline HullDistance hull_membership_distance(const FactoredOperator& s, const HullModel& hull,
                                             const HullOptions& opts = {}) {
  const SubspaceModel& model = require_model(hull);
  const CoeffMatrix c = project_coeffs(s, model);
  const HullProjection p = project_onto_hull(c, hull, opts);
  return {(p.coeffs.gamma - c.gamma).norm(), std::sqrt(residual_norm_sq(s, model))};
}

}  // namespace opsub
