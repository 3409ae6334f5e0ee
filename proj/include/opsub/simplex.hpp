#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"

namespace opsub {

/// A point of the probability simplex: nonnegative weights summing to one.
struct SimplexWeights {
  Vector lambda;
};

enum class SimplexMethod {
  Sort,    // O(N log N) threshold search over sorted entries
  Linear,  // Condat's pivot-free scan, linear in practice
};

namespace detail {

inline double simplex_threshold_sort(const Vector& v) {
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

// L. Condat, "Fast projection onto the simplex and the l1 ball" (2016).
inline double simplex_threshold_linear(const Vector& y) {
  std::vector<double> active{y(0)};
  std::vector<double> parked;
  double rho = y(0) - 1.0;
  for (Index i = 1; i < y.size(); ++i) {
    const double yi = y(i);
    if (yi > rho) {
      rho += (yi - rho) / static_cast<double>(active.size() + 1);
      if (rho > yi - 1.0) {
        active.push_back(yi);
      } else {
        parked.insert(parked.end(), active.begin(), active.end());
        active.assign(1, yi);
        rho = yi - 1.0;
      }
    }
  }
  for (double yi : parked) {
    if (yi > rho) {
      active.push_back(yi);
      rho += (yi - rho) / static_cast<double>(active.size());
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < active.size();) {
      const double yj = active[j];
      if (yj <= rho) {
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(j));
        rho += (rho - yj) / static_cast<double>(active.size());
        changed = true;
      } else {
        ++j;
      }
    }
  }
  return rho;
}

}  // namespace detail

/// Euclidean projection onto { x : x >= 0, sum x = 1 }.
inline SimplexWeights project_simplex(const Vector& v, SimplexMethod method = SimplexMethod::Sort) {
  if (v.size() < 1) throw InvalidArgument("project_simplex: empty input");
  if (!v.allFinite()) throw InvalidArgument("project_simplex: non-finite input");
  const double tau = method == SimplexMethod::Sort ? detail::simplex_threshold_sort(v)
                                                   : detail::simplex_threshold_linear(v);
  return {(v.array() - tau).cwiseMax(0.0).matrix()};
}

}  // namespace opsub
