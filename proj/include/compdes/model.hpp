#pragma once

// Multiple-group random coefficient regression problems on finite grids.
//
// Each group i carries a tabulated l x p regression matrix G_i(x) at every
// grid point, an SPD error covariance Sigma_i, a PSD random-effects
// covariance D_i, and the counts m_i (observations per unit) and n_i (units).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compdes/criterion_spec.hpp"
#include "compdes/matrix.hpp"

namespace compdes {

inline constexpr double kDefaultSupportThreshold = 1e-8;
// Weight vectors whose sum is off by at most this much are renormalized.
inline constexpr double kRenormalizeTolerance = 1e-9;

struct GridPoint {
  std::string label;
  Matrix gmat;                 // l x p
  std::optional<double> x;     // numeric setting, when the grid is numeric
};

// Grid points x_0..x_{k-1} with monomial rows (1, x, ..., x^degree).
std::vector<GridPoint> monomial_grid(std::span<const double> points, int degree);
std::string format_setting(double x);

class GroupSpec {
 public:
  GroupSpec(std::vector<GridPoint> points, Matrix sigma, Matrix dmat, int m, int n);

  std::size_t size() const { return points_.size(); }
  std::size_t p() const { return p_; }
  std::size_t l() const { return l_; }
  int m() const { return m_; }
  int n() const { return n_; }

  const std::vector<GridPoint>& points() const { return points_; }
  const GridPoint& point(std::size_t t) const;
  const SpdMatrix& sigma() const { return sigma_; }
  const Matrix& dmat() const { return dmat_; }
  // Delta_i = m_i D_i
  Matrix adjusted_dispersion() const { return dmat_ * static_cast<double>(m_); }

  // Sigma^{-1/2} G(x_t), computed once at construction.
  const Matrix& transformed_gmat(std::size_t t) const;
  // G~(x_t)^T G~(x_t), the moment matrix of the one-point design at x_t.
  const Matrix& point_moment(std::size_t t) const;

  // Same grid labels and regression tables (bitwise).
  bool same_grid(const GroupSpec& other) const;
  // Same grid, Sigma, D and m.
  bool statistically_identical(const GroupSpec& other) const;

 private:
  std::vector<GridPoint> points_;
  SpdMatrix sigma_;
  Matrix dmat_;
  int m_;
  int n_;
  std::size_t p_ = 0;
  std::size_t l_ = 0;
  std::vector<Matrix> transformed_;
  std::vector<Matrix> point_moments_;
};

// Probability vector over one group's grid.
class Design {
 public:
  explicit Design(Vector weights);

  static Design uniform(std::size_t k);
  static Design point(std::size_t k, std::size_t t);

  std::size_t size() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }
  double operator[](std::size_t t) const { return weights_[t]; }
  std::vector<std::size_t> support(double threshold = kDefaultSupportThreshold) const;

  friend bool operator==(const Design&, const Design&) = default;

 private:
  Vector weights_;
};

class CompoundProblem {
 public:
  CompoundProblem(std::vector<GroupSpec> groups, CriterionSpec criterion);

  std::size_t s() const { return groups_.size(); }
  std::size_t p() const { return groups_.front().p(); }
  const std::vector<GroupSpec>& groups() const { return groups_; }
  const GroupSpec& group(std::size_t i) const { return groups_.at(i); }
  const CriterionSpec& criterion() const { return criterion_; }
  int total_units() const;

  // Copy with a different criterion (same groups).
  CompoundProblem with_criterion(CriterionSpec criterion) const;

 private:
  std::vector<GroupSpec> groups_;
  CriterionSpec criterion_;
};

Matrix moment_matrix(const GroupSpec& g, const Design& d);
// Raw weights, not renormalized; used for gradient checks.
Matrix moment_matrix(const GroupSpec& g, std::span<const double> weights);

// max-norm of M(d) - sum_t w_t M(delta_t).
double moment_linearity_check(const GroupSpec& g, const Design& d);

Design exact_to_approximate(std::span<const int> counts, int m);

}  // namespace compdes
