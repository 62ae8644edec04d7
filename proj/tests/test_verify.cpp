#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "compdes/errors.hpp"
#include "compdes/verify.hpp"
#include "test_support.hpp"

using namespace compdes;
using namespace compdes::testing;

namespace {

const Matrix kIntercept{{1, 0}, {0, 0}};
const Matrix kSlope{{0, 0}, {0, 1}};
const CriterionSpec kA = CriterionSpec::linear(Matrix::identity(2), "A");

}  // namespace

TEST(Verify, ReferenceCandidateAtTablePrecision) {
  const auto prob = straight_line_problem({{1, 8}, {1, 2}}, kIntercept, kA);
  const VerificationReport ok = verify(prob, line_designs(0.450, 0.298), 2e-3);
  EXPECT_TRUE(ok.certified) << ok.max_violation << " " << ok.max_support_residual;
  const VerificationReport bad = verify(prob, line_designs(0.5, 0.5), 2e-3);
  EXPECT_FALSE(bad.certified);
  EXPECT_GT(bad.max_violation, 0.0);
}

TEST(Verify, SolverOutputIsCertified) {
  std::mt19937_64 rng(10);
  SolverConfig cfg;
  cfg.gap_tol = 1e-8;
  for (int trial = 0; trial < 10; ++trial) {
    const auto prob = random_problem(rng, trial % 2 ? CriterionKind::D : CriterionKind::L);
    const SolveReport r = solve(prob, cfg);
    if (!r.converged) continue;
    EXPECT_TRUE(verify(prob, r.designs, 1e-6).certified) << "trial " << trial;
  }
}

TEST(Verify, InfeasibleCandidateThrows) {
  const auto prob = straight_line_problem({{1, 1}}, Matrix(2, 2), kA);
  EXPECT_THROW(verify(prob, std::vector<Design>{Design::point(2, 0)}, 1e-6), Infeasible);
}

TEST(Verify, IsPureAndRepeatable) {
  const auto prob = straight_line_problem({{1, 2}, {2, 8}}, kIntercept, kA);
  const auto designs = line_designs(0.3, 0.6);
  const auto copy = designs;
  const VerificationReport a = verify(prob, designs, 1e-6);
  const VerificationReport b = verify(prob, designs, 1e-6);
  EXPECT_EQ(designs, copy);
  EXPECT_EQ(a.max_violation, b.max_violation);
  EXPECT_EQ(a.value, b.value);
  for (std::size_t i = 0; i < a.groups.size(); ++i)
    for (std::size_t t = 0; t < a.groups[i].points.size(); ++t)
      EXPECT_EQ(a.groups[i].points[t].slack, b.groups[i].points[t].slack);
}

TEST(Verify, WeightedSlackSumVanishes) {
  // sum_t w_t (rhs - lhs_t) = rhs - tr(M B) = 0 for any feasible tuple.
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto prob = random_problem(rng, trial % 2 ? CriterionKind::D : CriterionKind::L);
    const auto designs = random_designs(rng, prob);
    const VerificationReport rep = verify(prob, designs, 1e-6);
    for (const auto& g : rep.groups) {
      double scale = 0.0;
      for (const auto& p : g.points) scale = std::max(scale, std::abs(p.rhs));
      EXPECT_NEAR(g.weighted_slack_sum, 0.0, 1e-9 * std::max(1.0, scale));
    }
  }
}

TEST(Verify, NonNegativeSlacksImplyNonNegativeDirectionalDerivatives) {
  const auto prob = straight_line_problem({{1, 2}, {2, 8}}, kIntercept, kA);
  SolverConfig cfg;
  cfg.gap_tol = 1e-10;
  const SolveReport r = solve(prob, cfg);
  ASSERT_TRUE(verify(prob, r.designs, 1e-6).certified);
  std::mt19937_64 rng(3);
  for (std::size_t i = 0; i < prob.s(); ++i)
    for (int k = 0; k < 20; ++k) {
      EXPECT_GE(partial_derivative(prob, r.designs, i, random_design(rng, 2)), -1e-9);
    }
}

TEST(SaddleCheck, OptimaAndNonOptima) {
  const auto intercept = straight_line_problem({{1, 5}, {2, 8}}, kIntercept, CriterionSpec::d_optimal());
  EXPECT_LE(saddle_check(intercept, line_designs(0.5, 0.5), 50, 1).max_violation(), 1e-8);

  const auto classical = straight_line_problem({{1, 1}}, Matrix(2, 2), CriterionSpec::d_optimal());
  EXPECT_LE(saddle_check(classical, std::vector<Design>{line_design(0.5)}, 50, 2).max_violation(), 1e-8);

  const SaddleCheck off = saddle_check(intercept, line_designs(0.9, 0.9), 50, 3);
  EXPECT_GT(off.max_violation(), 1e-3);
  EXPECT_EQ(off.trials, 50);
}

TEST(IdenticalGroups, IdenticalGroups) {
  const double root = std::sqrt(2.0) - 1.0;
  const auto a_prob = straight_line_problem({{1, 5}, {3, 5}}, kIntercept, kA);
  const IdenticalGroupsCheck a = identical_groups_check(a_prob);
  EXPECT_TRUE(a.certified);
  EXPECT_NEAR(a.group_design[1], root, 1e-4);

  const auto slope_prob = straight_line_problem({{1, 5}, {2, 5}}, kSlope, CriterionSpec::d_optimal());
  const IdenticalGroupsCheck s = identical_groups_check(slope_prob);
  EXPECT_TRUE(s.certified);
  // Stationary point of the single-group criterion: 5w^2 + 2w - 1 = 0.
  EXPECT_NEAR(s.group_design[1], (std::sqrt(6.0) - 1.0) / 5.0, 1e-6);
  EXPECT_NEAR(s.group_design[1], 0.290, 1e-3);

  const auto intercept_prob = straight_line_problem({{2, 7}, {1, 7}}, kIntercept, CriterionSpec::d_optimal());
  const IdenticalGroupsCheck c = identical_groups_check(intercept_prob);
  EXPECT_TRUE(c.certified);
  EXPECT_NEAR(c.group_design[1], 0.5, 1e-6);
}

TEST(IdenticalGroups, RejectsDifferentGroups) {
  const auto prob = straight_line_problem({{1, 2}, {1, 8}}, kIntercept, kA);
  EXPECT_THROW(identical_groups_check(prob), GroupsNotIdentical);
}
