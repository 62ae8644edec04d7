#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "compdes/criteria.hpp"
#include "compdes/line_examples.hpp"
#include "compdes/model.hpp"

namespace compdes::testing {

// Reference optimal weights at x = 1, three decimals: (w1*, w2*) per case.
inline constexpr std::array<std::array<double, 2>, 12> kTable1 = {{
    {0.298, 0.450}, {0.414, 0.414}, {0.450, 0.298}, {0.300, 0.450}, {0.414, 0.414}, {0.450, 0.300},
    {0.256, 0.439}, {0.414, 0.414}, {0.460, 0.338}, {0.258, 0.439}, {0.414, 0.414}, {0.460, 0.339},
}};
inline constexpr std::array<std::array<double, 2>, 12> kTable2 = {{
    {0.725, 0.181}, {0.290, 0.290}, {0.181, 0.725}, {0.579, 0.145}, {0.232, 0.232}, {0.145, 0.579},
    {0.823, 0.206}, {0.290, 0.290}, {0.155, 0.618}, {0.651, 0.163}, {0.232, 0.232}, {0.125, 0.500},
}};

inline Design line_design(double w) { return Design({1.0 - w, w}); }
inline std::vector<Design> line_designs(double w1, double w2) { return {line_design(w1), line_design(w2)}; }

inline CompoundProblem straight_line_problem(std::vector<std::array<int, 2>> nm, Matrix dmat,
                                             CriterionSpec crit, std::vector<double> grid = {0.0, 1.0}) {
  std::vector<GroupSpec> groups;
  for (const auto& [n, m] : nm) {
    groups.emplace_back(monomial_grid(grid, 1), Matrix{{1.0}}, dmat, m, n);
  }
  return CompoundProblem(std::move(groups), std::move(crit));
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> normal;
  Matrix a(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) a(i, j) = normal(rng);
  return a;
}

// A A^T + shift I
inline Matrix random_spd(std::mt19937_64& rng, std::size_t n, double shift = 0.1) {
  const Matrix a = random_matrix(rng, n, n);
  return (a * a.transpose() + Matrix::identity(n) * shift).symmetrized();
}

// PSD with random rank in [0, n].
inline Matrix random_psd(std::mt19937_64& rng, std::size_t n) {
  const std::size_t rank = std::uniform_int_distribution<std::size_t>(0, n)(rng);
  if (rank == 0) return Matrix(n, n);
  const Matrix a = random_matrix(rng, n, rank);
  return (a * a.transpose() * 0.5).symmetrized();
}

inline Design random_design(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  Vector w(k);
  double total = 0.0;
  for (double& x : w) total += (x = e(rng) + 1e-3);
  for (double& x : w) x /= total;
  return Design(std::move(w));
}

inline std::vector<Design> random_designs(std::mt19937_64& rng, const CompoundProblem& prob) {
  std::vector<Design> out;
  for (const auto& g : prob.groups()) out.push_back(random_design(rng, g.size()));
  return out;
}

// Random problem with p <= 4, s <= 3, k <= 6 and the requested criterion kind.
inline CompoundProblem random_problem(std::mt19937_64& rng, CriterionKind kind) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::size_t p = pick(1, 4);
  const std::size_t s = pick(1, 3);
  std::vector<GroupSpec> groups;
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t l = pick(1, 2);
    const std::size_t k = pick(static_cast<int>((p + l - 1) / l) + 1, 6);
    std::vector<GridPoint> grid;
    for (std::size_t t = 0; t < k; ++t) grid.push_back({"x" + std::to_string(t), random_matrix(rng, l, p), {}});
    groups.emplace_back(std::move(grid), random_spd(rng, l, 0.5), random_psd(rng, p), pick(1, 8), pick(1, 4));
  }
  CriterionSpec crit = kind == CriterionKind::D ? CriterionSpec::d_optimal()
                                                : CriterionSpec::linear(random_psd(rng, p) + Matrix::identity(p) * 0.05);
  return CompoundProblem(std::move(groups), std::move(crit));
}

// Gauss-Jordan with partial pivoting; independent of the library's Cholesky.
inline Matrix gauss_jordan_inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix work = a;
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(work(r, c)) > std::abs(work(piv, c))) piv = r;
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(work(c, j), work(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const double d = work(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      work(c, j) /= d;
      inv(c, j) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = work(r, c);
      for (std::size_t j = 0; j < n; ++j) {
        work(r, j) -= f * work(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

inline double lu_determinant(Matrix a) {
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (piv != c) {
      det = -det;
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
    }
    det *= a(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return det;
}

// The criterion from its defining formula with explicit inverses; for
// cross-checks only.
inline double naive_value(const CompoundProblem& prob, const std::vector<Matrix>& moments) {
  const std::size_t p = prob.p();
  Matrix info(p, p);
  for (std::size_t i = 0; i < prob.s(); ++i) {
    const auto& g = prob.group(i);
    const Matrix minv = gauss_jordan_inverse(moments[i]);
    info += gauss_jordan_inverse(minv + g.dmat() * g.m()) * (g.n() * g.m());
  }
  if (prob.criterion().kind == CriterionKind::D) return -std::log(lu_determinant(info));
  return trace_product(gauss_jordan_inverse(info), prob.criterion().vmat);
}

}  // namespace compdes::testing
