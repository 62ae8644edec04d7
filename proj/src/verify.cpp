#include "compdes/verify.hpp"

#include <cmath>
#include <random>

#include "compdes/criteria.hpp"
#include "compdes/errors.hpp"

namespace compdes {

namespace {

Design random_design(std::size_t k, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector w(k);
  double total = 0.0;
  for (double& x : w) {
    x = expo(rng);
    total += x;
  }
  for (double& x : w) x /= total;
  return Design(std::move(w));
}

}  // namespace

VerificationReport verify(const CompoundProblem& prob, std::span<const Design> designs, double tol,
                          double support_threshold) {
  const Evaluation eval = evaluate(prob, designs);
  if (!eval.feasible()) throw Infeasible("infeasible: " + eval.infeasible_reason());

  VerificationReport report;
  report.value = eval.value();
  report.tolerance = tol;
  for (std::size_t i = 0; i < prob.s(); ++i) {
    const GroupSpec& g = prob.group(i);
    GroupVerification gv;
    const double rhs = eval.rhs(i);
    for (std::size_t t = 0; t < g.size(); ++t) {
      PointSensitivity ps;
      ps.index = t;
      ps.label = g.point(t).label;
      ps.weight = designs[i][t];
      ps.lhs = eval.lhs(i, t);
      ps.rhs = rhs;
      ps.slack = rhs - ps.lhs;
      ps.normalized_slack = ps.slack / (1.0 + std::abs(rhs));
      ps.support = ps.weight > support_threshold;
      gv.max_violation = std::max(gv.max_violation, -ps.normalized_slack);
      gv.max_violation_raw = std::max(gv.max_violation_raw, -ps.slack);
      if (ps.support) {
        gv.max_support_residual = std::max(gv.max_support_residual, std::abs(ps.normalized_slack));
        gv.max_support_residual_raw = std::max(gv.max_support_residual_raw, std::abs(ps.slack));
      }
      gv.weighted_slack_sum += ps.weight * ps.slack;
      gv.points.push_back(std::move(ps));
    }
    report.max_violation = std::max(report.max_violation, gv.max_violation);
    report.max_support_residual = std::max(report.max_support_residual, gv.max_support_residual);
    report.max_violation_raw = std::max(report.max_violation_raw, gv.max_violation_raw);
    report.max_support_residual_raw =
        std::max(report.max_support_residual_raw, gv.max_support_residual_raw);
    report.groups.push_back(std::move(gv));
  }
  report.certified = report.max_violation <= tol && report.max_support_residual <= tol;
  return report;
}

SaddleCheck saddle_check(const CompoundProblem& prob, std::span<const Design> designs, int trials,
                         std::uint64_t seed) {
  const Evaluation at_candidate = evaluate(prob, designs);
  if (!at_candidate.feasible()) throw Infeasible("infeasible: " + at_candidate.infeasible_reason());
  const std::vector<Matrix> candidate_moments = moment_matrices(prob, designs);

  std::mt19937_64 rng(seed);
  SaddleCheck check;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Design> other;
    for (const auto& g : prob.groups()) other.push_back(random_design(g.size(), rng));
    const std::vector<Matrix> other_moments = moment_matrices(prob, other);

    // Phi(xi*, xi~) >= 0
    double forward = 0.0;
    for (std::size_t i = 0; i < prob.s(); ++i) {
      forward += at_candidate.partial_derivative(i, other_moments[i]);
    }
    check.second_argument = std::max(check.second_argument, -forward);

    // Phi(xi~, xi*) <= 0
    const Evaluation at_other(prob, other_moments);
    if (at_other.feasible()) {
      double backward = 0.0;
      for (std::size_t i = 0; i < prob.s(); ++i) {
        backward += at_other.partial_derivative(i, candidate_moments[i]);
      }
      check.first_argument = std::max(check.first_argument, backward);
    }
    ++check.trials;
  }
  return check;
}

IdenticalGroupsCheck identical_groups_check(const CompoundProblem& prob, double tol,
                                            const SolverConfig& config) {
  const GroupSpec& first = prob.group(0);
  for (const auto& g : prob.groups()) {
    if (!g.statistically_identical(first)) {
      throw GroupsNotIdentical("groups differ in grid, regression, Sigma, D or m");
    }
  }
  // Fixed-effects model for L; single-group RCR model for D.
  const Matrix dmat = prob.criterion().kind == CriterionKind::L ? Matrix(first.p(), first.p())
                                                                : first.dmat();
  GroupSpec single(first.points(), first.sigma().matrix(), dmat, first.m(), 1);
  const CompoundProblem reduced({single}, prob.criterion());

  SolverConfig cfg = config;
  cfg.gap_tol = std::min(cfg.gap_tol, 1e-10);
  const SolveReport solved = solve(reduced, cfg);

  IdenticalGroupsCheck out{false, solved.designs.front(), {}};
  const std::vector<Design> replicated(prob.s(), out.group_design);
  out.report = verify(prob, replicated, tol);
  out.certified = out.report.certified;
  return out;
}

}  // namespace compdes
