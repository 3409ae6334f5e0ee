#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"

namespace opsub {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Parameters of a simulated diffusion-like family. Operators act on
/// grid_rows x grid_cols images flattened row-major, so m = n = rows * cols.
struct FamilyParams {
  Index grid_rows = 16;
  Index grid_cols = 16;
  Index pairs = 10;      // K
  Index operators = 50;  // L
  Interval sigma{0.05, 0.3};
  Interval a{0.5, 2.0};
  Interval b{0.5, 2.0};
  Interval c1{-0.5, 0.5};
  Interval c2{-0.5, 0.5};
  double c_min = 0.5;
  double c_max = 1.0;
  std::uint64_t seed = 0;

  Index dim() const noexcept { return grid_rows * grid_cols; }

  /// Square grid of side g.
  void set_grid(Index g) { grid_rows = grid_cols = g; }

  /// Near-square grid with rows * cols == n and rows <= cols.
  void set_size(Index n) {
    if (n < 4) throw InvalidArgument("grid size must be at least 4");
    Index rows = static_cast<Index>(std::sqrt(static_cast<double>(n)));
    while (rows > 1 && n % rows != 0) --rows;
    grid_rows = rows;
    grid_cols = n / rows;
  }

  void validate() const {
    if (grid_rows < 2 || grid_cols < 2) throw InvalidArgument("grid sides must be at least 2");
    if (pairs < 1 || operators < 1) throw InvalidArgument("K and L must be positive");
    auto check = [](const Interval& iv, const char* name) {
      if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw InvalidArgument(std::string("interval ") + name + " is invalid");
    };
    check(sigma, "sigma");
    check(a, "a");
    check(b, "b");
    check(c1, "c1");
    check(c2, "c2");
    if (!(sigma.lo > 0.0)) throw InvalidArgument("sigma must be positive");
    if (!(c_min <= c_max)) throw InvalidArgument("c_min must not exceed c_max");
  }
};

namespace detail {

/// Uniform draw on [lo, hi] from the top 53 bits of a 64-bit Mersenne Twister
/// output, so the stream is fixed by the generator alone.
inline double draw(std::mt19937_64& rng, const Interval& iv) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return iv.lo + (iv.hi - iv.lo) * u;
}

inline double grid_coord(Index i, Index count) {
  return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(count - 1);
}

}  // namespace detail

/// Unit-norm Gaussian bump exp(-(X^2 + Y^2) / (2 sigma^2)) on the grid.
inline Vector gaussian_bump(Index rows, Index cols, double sigma) {
  Vector v(rows * cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      const double gx = detail::grid_coord(x, cols);
      const double gy = detail::grid_coord(y, rows);
      v(y * cols + x) = std::exp(-(gx * gx + gy * gy) / (2.0 * sigma * sigma));
    }
  return v / v.norm();
}

/// a (X - c1)^2 + b (Y - c2)^2 on the grid, before rescaling.
inline Vector quadratic_profile(Index rows, Index cols, double a, double b, double c1, double c2) {
  Vector v(rows * cols);
  for (Index y = 0; y < rows; ++y)
    for (Index x = 0; x < cols; ++x) {
      const double dx = detail::grid_coord(x, cols) - c1;
      const double dy = detail::grid_coord(y, rows) - c2;
      v(y * cols + x) = a * dx * dx + b * dy * dy;
    }
  return v;
}

/// Affine map of v onto [c_min, c_max]; a constant v maps to c_min.
inline Vector rescale_to(const Vector& v, double c_min, double c_max) {
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (!(hi > lo)) return Vector::Constant(v.size(), c_min);
  Vector out = c_min + (c_max - c_min) * ((v.array() - lo) / (hi - lo));
  // Pin the extremes exactly.
  Index imin = 0, imax = 0;
  v.minCoeff(&imin);
  v.maxCoeff(&imax);
  out(imin) = c_min;
  out(imax) = c_max;
  return out;
}

/// Draws |L| operators of K pairs each. Per operator and per pair the draws
/// are consumed in the order sigma, a, b, c1, c2 from one mt19937_64 stream
/// seeded with `params.seed`.
inline Family generate_family(const FamilyParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  const Index d = params.dim();
  Family family;
  family.reserve(static_cast<std::size_t>(params.operators));
  for (Index l = 0; l < params.operators; ++l) {
    Matrix alphas(d, params.pairs);
    Matrix betas(d, params.pairs);
    for (Index k = 0; k < params.pairs; ++k) {
      const double sigma = detail::draw(rng, params.sigma);
      const double a = detail::draw(rng, params.a);
      const double b = detail::draw(rng, params.b);
      const double c1 = detail::draw(rng, params.c1);
      const double c2 = detail::draw(rng, params.c2);
      alphas.col(k) = gaussian_bump(params.grid_rows, params.grid_cols, sigma);
      betas.col(k) = rescale_to(quadratic_profile(params.grid_rows, params.grid_cols, a, b, c1, c2),
                                params.c_min, params.c_max);
    }
    family.emplace_back(std::move(alphas), std::move(betas));
  }
  return family;
}

}  // namespace opsub
