#pragma once

// Two-group straight-line model Y = b1 + b2 x + e on x in {0, 1}, Sigma = 1,
// D_i = diag(d, 0) (random intercept) or diag(0, d) (random slope). Closed
// forms of the criteria serve as oracles for the general matrix path, and the
// two twelve-case reference tables are reproduced with the general solver.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "compdes/model.hpp"
#include "compdes/solver.hpp"

namespace compdes {

enum class LineVariant { RandomIntercept, RandomSlope };
enum class LineCriterion { A, D };

struct TwoGroupLineCase {
  std::array<int, 2> n{1, 1};
  std::array<int, 2> m{1, 1};
  double d = 1.0;
  LineVariant variant = LineVariant::RandomIntercept;
  LineCriterion criterion = LineCriterion::D;
};

// Weights w_i are the masses at x = 1; DomainError outside (0, 1)^2.
double phi_d_intercept(const TwoGroupLineCase& c, double w1, double w2);
double phi_a_intercept(const TwoGroupLineCase& c, double w1, double w2);
double phi_d_slope(const TwoGroupLineCase& c, double w1, double w2);

// The case as a general compound problem on the given grid of [0, 1].
CompoundProblem line_problem(const TwoGroupLineCase& c, std::span<const double> grid);
CompoundProblem line_problem(const TwoGroupLineCase& c);

// Table 1: A-criterion, random intercept, d = 1. Table 2: D-criterion,
// random slope, d = 1.
std::vector<TwoGroupLineCase> table_cases(int table_id);

struct TableRow {
  int case_no = 0;
  int n1 = 0;
  int n2 = 0;
  int m1 = 0;
  int m2 = 0;
  std::string ratio;  // m1/m2, reduced
  double w1 = 0.0;    // weight at x = 1, unrounded
  double w2 = 0.0;
  double gap = 0.0;
  std::string status;
};

SolverConfig table_solver_config();
std::vector<TableRow> reproduce_table(int table_id, const SolverConfig& config = table_solver_config());

double round3(double x);
// Header plus one line per row, weights rounded to 3 decimals.
std::string table_csv(const std::vector<TableRow>& rows);

}  // namespace compdes
