#include "compdes/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "compdes/errors.hpp"

namespace compdes {

std::string format_setting(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::vector<GridPoint> monomial_grid(std::span<const double> points, int degree) {
  if (degree < 0) throw InvalidModel("monomial degree must be non-negative");
  std::vector<GridPoint> grid;
  grid.reserve(points.size());
  for (double x : points) {
    Matrix row(1, static_cast<std::size_t>(degree) + 1);
    double power = 1.0;
    for (int j = 0; j <= degree; ++j) {
      row(0, j) = power;
      power *= x;
    }
    grid.push_back({format_setting(x), std::move(row), x});
  }
  return grid;
}

GroupSpec::GroupSpec(std::vector<GridPoint> points, Matrix sigma, Matrix dmat, int m, int n)
    : points_(std::move(points)), sigma_(std::move(sigma)), dmat_(std::move(dmat)), m_(m), n_(n) {
  if (points_.empty()) throw InvalidModel("group grid is empty");
  if (m_ < 1 || n_ < 1) throw InvalidModel("m and n must be positive integers");
  l_ = points_.front().gmat.rows();
  p_ = points_.front().gmat.cols();
  if (l_ == 0 || p_ == 0) throw InvalidModel("regression matrix must be non-empty");
  for (const auto& pt : points_) {
    if (pt.gmat.rows() != l_ || pt.gmat.cols() != p_) {
      throw InvalidModel("regression matrices differ in shape at point '" + pt.label + "'");
    }
    if (!pt.gmat.all_finite()) throw InvalidModel("non-finite regression entry at '" + pt.label + "'");
  }
  if (sigma_.dim() != l_) throw InvalidModel("Sigma dimension does not match regression rows");
  if (!dmat_.is_square() || dmat_.rows() != p_) throw InvalidModel("D must be p x p");
  if (!dmat_.all_finite() || !dmat_.is_symmetric()) throw InvalidModel("D must be symmetric");
  dmat_ = dmat_.symmetrized();
  if (min_eigenvalue(dmat_) < -1e-10) throw InvalidModel("D must be positive semidefinite");

  const bool identity_sigma = sigma_.matrix() == Matrix::identity(l_);
  const Matrix root_inv = identity_sigma ? Matrix() : spd_sqrt_inverse(sigma_).matrix();
  transformed_.reserve(points_.size());
  point_moments_.reserve(points_.size());
  for (const auto& pt : points_) {
    Matrix gt = identity_sigma ? pt.gmat : root_inv * pt.gmat;
    point_moments_.push_back((gt.transpose() * gt).symmetrized());
    transformed_.push_back(std::move(gt));
  }
}

const GridPoint& GroupSpec::point(std::size_t t) const {
  if (t >= points_.size()) throw IndexOutOfRange("grid index " + std::to_string(t) + " out of range");
  return points_[t];
}

const Matrix& GroupSpec::transformed_gmat(std::size_t t) const {
  if (t >= transformed_.size()) throw IndexOutOfRange("grid index " + std::to_string(t) + " out of range");
  return transformed_[t];
}

const Matrix& GroupSpec::point_moment(std::size_t t) const {
  if (t >= point_moments_.size()) throw IndexOutOfRange("grid index " + std::to_string(t) + " out of range");
  return point_moments_[t];
}

bool GroupSpec::same_grid(const GroupSpec& other) const {
  if (size() != other.size()) return false;
  for (std::size_t t = 0; t < size(); ++t) {
    if (points_[t].gmat != other.points_[t].gmat) return false;
    if (points_[t].label != other.points_[t].label) return false;
  }
  return true;
}

bool GroupSpec::statistically_identical(const GroupSpec& other) const {
  return same_grid(other) && m_ == other.m_ && sigma_.matrix() == other.sigma_.matrix() &&
         dmat_ == other.dmat_;
}

Design::Design(Vector weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidDesign("design has no weights");
  double sum = 0.0;
  for (double& w : weights_) {
    if (!std::isfinite(w)) throw InvalidDesign("non-finite design weight");
    if (w < 0.0) {
      if (w < -1e-12) throw InvalidDesign("negative design weight");
      w = 0.0;
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw InvalidDesign("design weights sum to " + format_setting(sum) + ", expected 1");
  }
  for (double& w : weights_) w /= sum;
}

Design Design::uniform(std::size_t k) {
  if (k == 0) throw InvalidDesign("design has no weights");
  return Design(Vector(k, 1.0 / static_cast<double>(k)));
}

Design Design::point(std::size_t k, std::size_t t) {
  if (t >= k) throw IndexOutOfRange("one-point design index out of range");
  Vector w(k, 0.0);
  w[t] = 1.0;
  return Design(std::move(w));
}

std::vector<std::size_t> Design::support(double threshold) const {
  std::vector<std::size_t> s;
  for (std::size_t t = 0; t < weights_.size(); ++t)
    if (weights_[t] > threshold) s.push_back(t);
  return s;
}

CompoundProblem::CompoundProblem(std::vector<GroupSpec> groups, CriterionSpec criterion)
    : groups_(std::move(groups)), criterion_(std::move(criterion)) {
  if (groups_.empty()) throw InvalidModel("problem needs at least one group");
  const std::size_t p = groups_.front().p();
  for (const auto& g : groups_) {
    if (g.p() != p) throw InvalidModel("all groups must share the parameter dimension p");
  }
  if (criterion_.kind == CriterionKind::L) {
    if (criterion_.vmat.rows() != p || criterion_.vmat.cols() != p) {
      throw CriterionMismatch("criterion matrix V must be p x p");
    }
  }
  if (criterion_.name == "IMSE") {
    for (const auto& g : groups_) {
      if (!g.same_grid(groups_.front())) {
        throw CriterionMismatch("IMSE needs identical grids and regression matrices in all groups");
      }
    }
  }
}

int CompoundProblem::total_units() const {
  return std::accumulate(groups_.begin(), groups_.end(), 0,
                         [](int acc, const GroupSpec& g) { return acc + g.n(); });
}

CompoundProblem CompoundProblem::with_criterion(CriterionSpec criterion) const {
  return CompoundProblem(groups_, std::move(criterion));
}

Matrix moment_matrix(const GroupSpec& g, std::span<const double> weights) {
  if (weights.size() != g.size()) {
    throw ShapeMismatch("design has " + std::to_string(weights.size()) + " weights, grid has " +
                        std::to_string(g.size()) + " points");
  }
  Matrix m(g.p(), g.p());
  for (std::size_t t = 0; t < weights.size(); ++t) {
    if (weights[t] == 0.0) continue;
    m += g.point_moment(t) * weights[t];
  }
  return m;
}

Matrix moment_matrix(const GroupSpec& g, const Design& d) { return moment_matrix(g, d.weights()); }

double moment_linearity_check(const GroupSpec& g, const Design& d) {
  Matrix combined(g.p(), g.p());
  for (std::size_t t = 0; t < d.size(); ++t) {
    combined += moment_matrix(g, Design::point(g.size(), t)) * d[t];
  }
  return max_abs_diff(moment_matrix(g, d), combined);
}

Design exact_to_approximate(std::span<const int> counts, int m) {
  if (m < 1) throw CountMismatch("m must be positive");
  long total = 0;
  for (int c : counts) {
    if (c < 0) throw CountMismatch("negative replication count");
    total += c;
  }
  if (total != m) {
    throw CountMismatch("counts sum to " + std::to_string(total) + ", expected " + std::to_string(m));
  }
  Vector w(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) w[t] = static_cast<double>(counts[t]) / m;
  return Design(std::move(w));
}

}  // namespace compdes
