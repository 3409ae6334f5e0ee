#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "opsub/simplex.hpp"
#include "oracles.hpp"

using namespace opsub;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

void expect_feasible(const Vector& x) {
  EXPECT_GE(x.minCoeff(), 0.0);
  EXPECT_NEAR(x.sum(), 1.0, 1e-10);
}

// Best point of a barycentric grid of step 1/steps, refined by solving the
// equality-constrained problem on the grid point's support.
Vector grid_projection(const Vector& v, int steps) {
  const Index n = v.size();
  Vector best;
  double best_d = std::numeric_limits<double>::infinity();
  std::vector<int> counts(static_cast<std::size_t>(n), 0);
  auto visit = [&](auto&& self, Index i, int left) -> void {
    if (i == n - 1) {
      counts[static_cast<std::size_t>(i)] = left;
      Vector x(n);
      for (Index j = 0; j < n; ++j) x(j) = static_cast<double>(counts[static_cast<std::size_t>(j)]) / steps;
      const double d = (x - v).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = x;
      }
      return;
    }
    for (int c = 0; c <= left; ++c) {
      counts[static_cast<std::size_t>(i)] = c;
      self(self, i + 1, left - c);
    }
  };
  visit(visit, 0, steps);
  // Refine on the support: x_S = v_S - tau with tau fixing the sum.
  double sum = 0.0;
  int support = 0;
  for (Index j = 0; j < n; ++j)
    if (best(j) > 0.0) {
      sum += v(j);
      ++support;
    }
  const double tau = (sum - 1.0) / support;
  Vector refined = Vector::Zero(n);
  for (Index j = 0; j < n; ++j)
    if (best(j) > 0.0) refined(j) = std::max(0.0, v(j) - tau);
  return refined / refined.sum();
}

}  // namespace

TEST(ProjectSimplex, PointInsideIsFixed) {
  Vector v = vec({0.2, 0.3, 0.5});
  for (auto method : {SimplexMethod::Sort, SimplexMethod::Linear})
    EXPECT_LT((project_simplex(v, method).lambda - v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProjectSimplex, ClampsToVertex) {
  for (auto method : {SimplexMethod::Sort, SimplexMethod::Linear}) {
    Vector x = project_simplex(vec({2, 0}), method).lambda;
    EXPECT_DOUBLE_EQ(x(0), 1.0);
    EXPECT_DOUBLE_EQ(x(1), 0.0);
  }
}

TEST(ProjectSimplex, DropsNegativeEntry) {
  for (auto method : {SimplexMethod::Sort, SimplexMethod::Linear}) {
    Vector x = project_simplex(vec({0.5, 0.5, -1}), method).lambda;
    EXPECT_NEAR(x(0), 0.5, 1e-15);
    EXPECT_NEAR(x(1), 0.5, 1e-15);
    EXPECT_EQ(x(2), 0.0);
  }
}

TEST(ProjectSimplex, SingleEntry) {
  EXPECT_DOUBLE_EQ(project_simplex(vec({-3.0})).lambda(0), 1.0);
  EXPECT_DOUBLE_EQ(project_simplex(vec({7.0}), SimplexMethod::Linear).lambda(0), 1.0);
}

TEST(ProjectSimplex, RejectsBadInput) {
  EXPECT_THROW(project_simplex(Vector()), InvalidArgument);
  EXPECT_THROW(project_simplex(vec({1.0, std::numeric_limits<double>::quiet_NaN()})), InvalidArgument);
  EXPECT_THROW(project_simplex(vec({std::numeric_limits<double>::infinity()})), InvalidArgument);
}

TEST(ProjectSimplex, MatchesGridOracle) {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> size(2, 4);
  for (int trial = 0; trial < 200; ++trial) {
    Vector v = oracle::random_vector(rng, size(rng));
    Vector ref = grid_projection(v, v.size() == 4 ? 60 : 200);
    Vector x = project_simplex(v).lambda;
    EXPECT_LT((x - ref).cwiseAbs().maxCoeff(), 1e-10) << v.transpose();
  }
}

TEST(ProjectSimplex, MethodsAgreeAndMatchKkt) {
  std::mt19937_64 rng(52);
  std::uniform_int_distribution<int> size(1, 8);
  for (int trial = 0; trial < 2000; ++trial) {
    Vector v = 2.0 * oracle::random_vector(rng, size(rng));
    Vector ref = oracle::simplex_kkt(v);
    Vector sorted = project_simplex(v, SimplexMethod::Sort).lambda;
    Vector linear = project_simplex(v, SimplexMethod::Linear).lambda;
    EXPECT_LT((sorted - ref).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((linear - ref).cwiseAbs().maxCoeff(), 1e-10);
    expect_feasible(sorted);
    expect_feasible(linear);
  }
}

TEST(ProjectSimplex, LargeInputsWithTies) {
  std::mt19937_64 rng(53);
  Vector v(500);
  std::uniform_int_distribution<int> level(-3, 3);
  for (Index i = 0; i < v.size(); ++i) v(i) = 0.01 * level(rng);
  Vector a = project_simplex(v, SimplexMethod::Sort).lambda;
  Vector b = project_simplex(v, SimplexMethod::Linear).lambda;
  expect_feasible(a);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectSimplex, IdempotentAndPermutationEquivariant) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    Vector v = oracle::random_vector(rng, 6);
    Vector x = project_simplex(v).lambda;
    EXPECT_LT((project_simplex(x).lambda - x).cwiseAbs().maxCoeff(), 1e-14);
    std::vector<Index> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector pv(6);
    for (Index i = 0; i < 6; ++i) pv(i) = v(perm[static_cast<std::size_t>(i)]);
    Vector px = project_simplex(pv, SimplexMethod::Linear).lambda;
    for (Index i = 0; i < 6; ++i) EXPECT_NEAR(px(i), x(perm[static_cast<std::size_t>(i)]), 1e-14);
  }
}
