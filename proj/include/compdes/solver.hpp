#pragma once

// Minimization of a compound criterion over the product of probability
// simplices, one per group. Sweeps update the groups cyclically; after every
// sweep the equivalence gap (the largest negative point derivative, scaled by
// 1 + |phi|) is evaluated and the solve stops once it falls below gap_tol.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "compdes/criteria.hpp"
#include "compdes/model.hpp"

namespace compdes {

enum class Algorithm { VertexDirection, Multiplicative, ProjectedGradient };
enum class StepRule { ExactLineSearch, Golden, Armijo };
enum class SolveStatus { Converged, MaxItersExceeded, Stalled, NotAttained };

std::string to_string(Algorithm a);
std::string to_string(StepRule r);
std::string to_string(SolveStatus s);
Algorithm parse_algorithm(const std::string& s);
StepRule parse_step_rule(const std::string& s);

struct SolverConfig {
  Algorithm algorithm = Algorithm::VertexDirection;
  int max_iters = 5000;
  double gap_tol = 1e-7;
  StepRule step_rule = StepRule::ExactLineSearch;
  int restarts = 20;
  std::uint64_t seed = 0;
  // Weights below this are zeroed after each sweep (when that does not
  // increase the criterion).
  double prune_threshold = 1e-10;
  // A moment matrix with lambda_min / lambda_max below this, while the gap is
  // still open, means the infimum lies on the singular boundary.
  double singular_tol = 1e-8;

  void validate() const;
};

struct HistoryEntry {
  int iteration = 0;
  double value = 0.0;
  double gap = 0.0;
};

struct SolveReport {
  std::vector<Design> designs;
  double value = kInfinity;
  double gap = kInfinity;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::MaxItersExceeded;
  std::vector<HistoryEntry> history;
};

// max over groups and grid points of max(0, -Phi_i(xi_i, delta_t)) / (1 + |phi|).
double equivalence_gap(const CompoundProblem& prob, std::span<const Design> designs);
double equivalence_gap(const Evaluation& eval, const CompoundProblem& prob);

SolveReport solve(const CompoundProblem& prob, const SolverConfig& config = {});
// Warm start from the given designs (must be feasible).
SolveReport solve(const CompoundProblem& prob, const SolverConfig& config,
                  std::vector<Design> start);

// Initial feasible tuple: uniform weights, falling back to uniform weights on
// random p-point subsets. NoFeasibleStart if nothing works.
std::vector<Design> initial_designs(const CompoundProblem& prob, const SolverConfig& config);

// One conditional-gradient move of group i towards the grid point with the
// most negative Phi_i(xi_i, delta_t). Other groups are untouched.
Design vertex_direction_step(const CompoundProblem& prob, std::span<const Design> designs,
                             std::size_t group, StepRule rule = StepRule::ExactLineSearch);

Design project_simplex(std::span<const double> v);

// Largest-remainder rounding; ties go to the lower index.
std::vector<int> round_to_exact(const Design& d, int m);

}  // namespace compdes
