#include "compdes/criteria.hpp"

#include <cmath>

#include "compdes/errors.hpp"

namespace compdes {

namespace {

const char* kind_name(CriterionKind kind) { return kind == CriterionKind::D ? "D" : "L"; }

void require_kind(const CompoundProblem& prob, CriterionKind kind) {
  if (prob.criterion().kind != kind) {
    throw CriterionMismatch(std::string("problem criterion is ") + kind_name(prob.criterion().kind) +
                            ", expected " + kind_name(kind));
  }
}

void require_designs(const CompoundProblem& prob, std::span<const Design> designs) {
  if (designs.size() != prob.s()) {
    throw ShapeMismatch("expected " + std::to_string(prob.s()) + " designs, got " +
                        std::to_string(designs.size()));
  }
}

}  // namespace

CriterionSpec CriterionSpec::linear(Matrix v, std::string name) {
  if (!v.is_square() || v.empty()) throw CriterionMismatch("V must be a non-empty square matrix");
  if (!v.all_finite() || !v.is_symmetric()) throw CriterionMismatch("V must be symmetric");
  v = v.symmetrized();
  if (min_eigenvalue(v) < -1e-10 * std::max(1.0, v.max_abs())) {
    throw CriterionMismatch("V must be positive semidefinite");
  }
  return {CriterionKind::L, std::move(v), std::move(name)};
}

Matrix build_v_identity(std::size_t p) {
  if (p == 0) throw ShapeMismatch("p must be positive");
  return Matrix::identity(p);
}

Matrix build_v_c(std::span<const double> c) {
  bool nonzero = false;
  for (double x : c) nonzero = nonzero || x != 0.0;
  if (!nonzero) throw ZeroVector("c must be a nonzero vector");
  return Matrix::outer(c, c);
}

Vector uniform_measure(std::size_t k) { return Vector(k, 1.0 / static_cast<double>(k)); }

Matrix build_v_imse(const std::vector<GridPoint>& grid, std::span<const double> nu) {
  if (grid.empty() || nu.size() != grid.size()) {
    throw ShapeMismatch("measure length must match the grid size");
  }
  double total = 0.0;
  for (double v : nu) {
    if (v < 0.0 || !std::isfinite(v)) throw MeasureNotNormalized("measure weights must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw MeasureNotNormalized("measure weights must sum to 1");
  const std::size_t p = grid.front().gmat.cols();
  Matrix v(p, p);
  for (std::size_t t = 0; t < grid.size(); ++t) {
    if (nu[t] == 0.0) continue;
    const Matrix& g = grid[t].gmat;
    v += (g.transpose() * g) * nu[t];
  }
  return v.symmetrized();
}

Matrix psi(const Matrix& m, const Matrix& delta) {
  const SpdMatrix moment(m);
  return inverse_matrix(SpdMatrix(inverse_matrix(moment) + delta));
}

Evaluation::Evaluation(const CompoundProblem& prob, std::vector<Matrix> moments)
    : prob_(&prob), moments_(std::move(moments)) {
  if (moments_.size() != prob.s()) throw ShapeMismatch("one moment matrix per group required");
  const std::size_t p = prob.p();
  const std::size_t s = prob.s();

  std::vector<Matrix> minv(s);
  std::vector<Matrix> psis(s);
  Matrix sum(p, p);
  for (std::size_t i = 0; i < s; ++i) {
    Matrix lower;
    if (!moments_[i].is_symmetric() || !try_cholesky(moments_[i].symmetrized(), lower)) {
      reason_ = "singular moment matrix";
      bad_group_ = i;
      return;
    }
    minv[i] = inverse_matrix(SpdMatrix(moments_[i].symmetrized()));
    const Matrix inner = minv[i] + prob.group(i).adjusted_dispersion();
    if (!try_cholesky(inner, lower)) {
      reason_ = "singular dispersion-adjusted matrix";
      bad_group_ = i;
      return;
    }
    psis[i] = inverse_matrix(SpdMatrix(inner));
    sum += psis[i] * scale(i);
  }
  Matrix lower;
  if (!try_cholesky(sum, lower)) {
    reason_ = "singular information sum";
    bad_group_ = s;
    return;
  }
  const SpdMatrix info(sum);
  cov_ = inverse_matrix(info);

  const CriterionSpec& crit = prob.criterion();
  Matrix inner_weight;
  if (crit.kind == CriterionKind::L) {
    value_ = trace_product(cov_, crit.vmat);
    inner_weight = (cov_ * crit.vmat * cov_).symmetrized();
  } else {
    value_ = -logdet(info);
    inner_weight = cov_;
  }
  if (!std::isfinite(value_)) {
    reason_ = "non-finite criterion value";
    return;
  }

  kernels_.resize(s);
  rhs_.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    const Matrix h = psis[i] * minv[i];
    kernels_[i] = (h.transpose() * inner_weight * h).symmetrized();
    rhs_[i] = trace_product(moments_[i], kernels_[i]);
  }
  feasible_ = true;
}

void Evaluation::require_feasible() const {
  if (!feasible_) throw Infeasible("infeasible: " + reason_);
}

const Matrix& Evaluation::covariance() const {
  require_feasible();
  return cov_;
}

const Matrix& Evaluation::sensitivity_kernel(std::size_t i) const {
  require_feasible();
  return kernels_.at(i);
}

double Evaluation::rhs(std::size_t i) const {
  require_feasible();
  return rhs_.at(i);
}

double Evaluation::lhs(std::size_t i, std::size_t t) const {
  require_feasible();
  return trace_product(prob_->group(i).point_moment(t), kernels_.at(i));
}

double Evaluation::scale(std::size_t i) const {
  const GroupSpec& g = prob_->group(i);
  return static_cast<double>(g.n()) * static_cast<double>(g.m());
}

double Evaluation::partial_derivative(std::size_t i, const Matrix& target) const {
  require_feasible();
  return -scale(i) * (trace_product(target, kernels_.at(i)) - rhs_.at(i));
}

double Evaluation::point_derivative(std::size_t i, std::size_t t) const {
  return scale(i) * (rhs(i) - lhs(i, t));
}

Vector Evaluation::weight_gradient(std::size_t i) const {
  require_feasible();
  const std::size_t k = prob_->group(i).size();
  Vector g(k);
  for (std::size_t t = 0; t < k; ++t) g[t] = -scale(i) * lhs(i, t);
  return g;
}

std::vector<Matrix> moment_matrices(const CompoundProblem& prob, std::span<const Design> designs) {
  require_designs(prob, designs);
  std::vector<Matrix> moments;
  moments.reserve(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i) {
    moments.push_back(moment_matrix(prob.group(i), designs[i]));
  }
  return moments;
}

Evaluation evaluate(const CompoundProblem& prob, std::span<const Design> designs) {
  return Evaluation(prob, moment_matrices(prob, designs));
}

Matrix covariance(const CompoundProblem& prob, std::span<const Design> designs) {
  return evaluate(prob, designs).covariance();
}

double criterion_value(const CompoundProblem& prob, std::span<const Design> designs) {
  return evaluate(prob, designs).value();
}

double l_value(const CompoundProblem& prob, std::span<const Design> designs) {
  require_kind(prob, CriterionKind::L);
  return criterion_value(prob, designs);
}

double d_value(const CompoundProblem& prob, std::span<const Design> designs) {
  require_kind(prob, CriterionKind::D);
  return criterion_value(prob, designs);
}

double partial_derivative(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, const Design& direction) {
  const Evaluation eval = evaluate(prob, designs);
  return eval.partial_derivative(group, moment_matrix(prob.group(group), direction));
}

double partial_derivative_L(const CompoundProblem& prob, std::span<const Design> designs,
                            std::size_t group, const Design& direction) {
  require_kind(prob, CriterionKind::L);
  return partial_derivative(prob, designs, group, direction);
}

double partial_derivative_D(const CompoundProblem& prob, std::span<const Design> designs,
                            std::size_t group, const Design& direction) {
  require_kind(prob, CriterionKind::D);
  return partial_derivative(prob, designs, group, direction);
}

double directional_derivative(const CompoundProblem& prob, std::span<const Design> designs,
                              std::span<const Design> directions) {
  require_designs(prob, directions);
  const Evaluation eval = evaluate(prob, designs);
  double total = 0.0;
  for (std::size_t i = 0; i < prob.s(); ++i) {
    total += eval.partial_derivative(i, moment_matrix(prob.group(i), directions[i]));
  }
  return total;
}

Sensitivity sensitivity(const CompoundProblem& prob, std::span<const Design> designs,
                        std::size_t group, std::size_t point) {
  const Evaluation eval = evaluate(prob, designs);
  if (point >= prob.group(group).size()) throw IndexOutOfRange("grid index out of range");
  return {eval.lhs(group, point), eval.rhs(group)};
}

Sensitivity sensitivity_L(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, std::size_t point) {
  require_kind(prob, CriterionKind::L);
  return sensitivity(prob, designs, group, point);
}

Sensitivity sensitivity_D(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, std::size_t point) {
  require_kind(prob, CriterionKind::D);
  return sensitivity(prob, designs, group, point);
}

Vector weight_gradient(const CompoundProblem& prob, std::span<const Design> designs,
                       std::size_t group) {
  return evaluate(prob, designs).weight_gradient(group);
}

}  // namespace compdes
