#pragma once

// Compound L- and D-criteria for the mean parameters of a multiple-group RCR
// model, with their analytic directional derivatives and sensitivity
// functions.
//
// With psi_i = (M_i^{-1} + Delta_i)^{-1} and S = sum_i n_i m_i psi_i:
//   Cov   = S^{-1}
//   phi_L = tr(Cov V)
//   phi_D = -ln det S
// The partial directional derivative in group i towards M~ is
//   Phi_i(M_i, M~) = -n_i m_i tr((M~ - M_i) B_i),
// where B_i = H_i^T W H_i with H_i = psi_i M_i^{-1} and W = Cov V Cov (L) or
// W = Cov (D). The sensitivity sides at grid point t are
//   lhs_t = tr(G~_t B_i G~_t^T),  rhs = tr(M_i B_i),
// so Phi_i(xi_i, delta_t) = n_i m_i (rhs - lhs_t).

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "compdes/criterion_spec.hpp"
#include "compdes/matrix.hpp"
#include "compdes/model.hpp"

namespace compdes {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

Matrix build_v_identity(std::size_t p);
Matrix build_v_c(std::span<const double> c);
// V = sum_t nu_t G(x_t)^T G(x_t) over the (untransformed) grid tables.
Matrix build_v_imse(const std::vector<GridPoint>& grid, std::span<const double> nu);
Vector uniform_measure(std::size_t k);

// (M^{-1} + Delta)^{-1}; NotPositiveDefinite when m is singular.
Matrix psi(const Matrix& m, const Matrix& delta);

// One evaluation point of the criterion with all factors the derivative and
// sensitivity formulas share.
class Evaluation {
 public:
  Evaluation(const CompoundProblem& prob, std::vector<Matrix> moments);

  bool feasible() const { return feasible_; }
  // +inf when infeasible.
  double value() const { return value_; }
  const std::string& infeasible_reason() const { return reason_; }
  std::size_t infeasible_group() const { return bad_group_; }

  // Throw Infeasible when not feasible.
  const Matrix& covariance() const;
  const Matrix& moment(std::size_t i) const { return moments_.at(i); }
  const Matrix& sensitivity_kernel(std::size_t i) const;  // B_i
  double rhs(std::size_t i) const;
  double lhs(std::size_t i, std::size_t t) const;
  // n_i m_i
  double scale(std::size_t i) const;

  // Phi_i(M_i, target)
  double partial_derivative(std::size_t i, const Matrix& target) const;
  // Phi_i(xi_i, delta_t)
  double point_derivative(std::size_t i, std::size_t t) const;
  // d phi / d w_it for raw weights
  Vector weight_gradient(std::size_t i) const;

 private:
  void require_feasible() const;

  const CompoundProblem* prob_;
  std::vector<Matrix> moments_;
  bool feasible_ = false;
  double value_ = kInfinity;
  std::string reason_;
  std::size_t bad_group_ = 0;
  Matrix cov_;
  std::vector<Matrix> kernels_;
  Vector rhs_;
};

std::vector<Matrix> moment_matrices(const CompoundProblem& prob, std::span<const Design> designs);
Evaluation evaluate(const CompoundProblem& prob, std::span<const Design> designs);

// Cov = S^{-1}; Infeasible if any M_i is singular.
Matrix covariance(const CompoundProblem& prob, std::span<const Design> designs);
// The problem's own criterion; +inf when infeasible.
double criterion_value(const CompoundProblem& prob, std::span<const Design> designs);
// Require the matching criterion kind (CriterionMismatch otherwise).
double l_value(const CompoundProblem& prob, std::span<const Design> designs);
double d_value(const CompoundProblem& prob, std::span<const Design> designs);

double partial_derivative(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, const Design& direction);
double partial_derivative_L(const CompoundProblem& prob, std::span<const Design> designs,
                            std::size_t group, const Design& direction);
double partial_derivative_D(const CompoundProblem& prob, std::span<const Design> designs,
                            std::size_t group, const Design& direction);

// Full directional derivative Phi(xi, xi~) = sum_i Phi_i(xi_i, xi~_i).
double directional_derivative(const CompoundProblem& prob, std::span<const Design> designs,
                              std::span<const Design> directions);

struct Sensitivity {
  double lhs = 0.0;
  double rhs = 0.0;
};

Sensitivity sensitivity(const CompoundProblem& prob, std::span<const Design> designs,
                        std::size_t group, std::size_t point);
Sensitivity sensitivity_L(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, std::size_t point);
Sensitivity sensitivity_D(const CompoundProblem& prob, std::span<const Design> designs,
                          std::size_t group, std::size_t point);

Vector weight_gradient(const CompoundProblem& prob, std::span<const Design> designs,
                       std::size_t group);

}  // namespace compdes
