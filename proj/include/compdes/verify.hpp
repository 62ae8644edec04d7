#pragma once

// Optimality certificates for a candidate design tuple, independent of how
// the candidate was produced. Every grid point of every group is scanned with
// the sensitivity sides (lhs, rhs); the candidate is optimal iff every slack
// rhs - lhs is non-negative, with equality on the support.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "compdes/model.hpp"
#include "compdes/solver.hpp"

namespace compdes {

struct PointSensitivity {
  std::size_t index = 0;
  std::string label;
  double weight = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;             // rhs - lhs
  double normalized_slack = 0.0;  // slack / (1 + |rhs|)
  bool support = false;
};

struct GroupVerification {
  std::vector<PointSensitivity> points;
  double max_violation = 0.0;          // normalized
  double max_support_residual = 0.0;   // normalized
  double max_violation_raw = 0.0;
  double max_support_residual_raw = 0.0;
  double weighted_slack_sum = 0.0;     // sum_t w_t slack_t
};

struct VerificationReport {
  std::vector<GroupVerification> groups;
  double value = 0.0;
  double max_violation = 0.0;
  double max_support_residual = 0.0;
  double max_violation_raw = 0.0;
  double max_support_residual_raw = 0.0;
  double tolerance = 0.0;
  bool certified = false;
};

VerificationReport verify(const CompoundProblem& prob, std::span<const Design> designs, double tol,
                          double support_threshold = kDefaultSupportThreshold);

struct SaddleCheck {
  // max(0, Phi(xi~, xi*)) over the samples
  double first_argument = 0.0;
  // max(0, -Phi(xi*, xi~)) over the samples
  double second_argument = 0.0;
  int trials = 0;
  double max_violation() const { return std::max(first_argument, second_argument); }
};

// Random tuples xi~ are drawn uniformly from each group's simplex.
SaddleCheck saddle_check(const CompoundProblem& prob, std::span<const Design> designs, int trials,
                         std::uint64_t seed);

struct IdenticalGroupsCheck {
  bool certified = false;
  Design group_design;
  VerificationReport report;
};

// For statistically identical groups: solve the single-group problem (the
// fixed-effects L-criterion, or the single-group RCR D-criterion), replicate
// the optimum to every group and verify the tuple.
IdenticalGroupsCheck identical_groups_check(const CompoundProblem& prob, double tol = 1e-6,
                                            const SolverConfig& config = {});

}  // namespace compdes
