#include "compdes/line_examples.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "compdes/criteria.hpp"
#include "compdes/errors.hpp"

namespace compdes {

namespace {

void check_domain(double w1, double w2) {
  if (!(w1 > 0.0 && w1 < 1.0 && w2 > 0.0 && w2 < 1.0)) {
    throw DomainError("closed-form criteria need weights in the open interval (0, 1)");
  }
}

// Shared pieces of the random-intercept determinant.
struct InterceptSums {
  double a = 0.0;  // sum n m / (d m + 1)
  double b = 0.0;  // sum n m w (d m (1 - w) + 1) / (d m + 1)
  double c = 0.0;  // sum n m w / (d m + 1)
  double numerator_a = 0.0;  // sum n m (d m w (1 - w) + 1 + w) / (d m + 1)
};

InterceptSums intercept_sums(const TwoGroupLineCase& c, double w1, double w2) {
  const std::array<double, 2> w{w1, w2};
  InterceptSums s;
  for (int i = 0; i < 2; ++i) {
    const double nm = static_cast<double>(c.n[i]) * c.m[i];
    const double dm = c.d * c.m[i];
    s.a += nm / (dm + 1.0);
    s.b += nm * w[i] * (dm * (1.0 - w[i]) + 1.0) / (dm + 1.0);
    s.c += nm * w[i] / (dm + 1.0);
    s.numerator_a += nm * (dm * w[i] * (1.0 - w[i]) + 1.0 + w[i]) / (dm + 1.0);
  }
  return s;
}

std::string ratio_text(int a, int b) {
  const int g = std::gcd(a, b);
  a /= g;
  b /= g;
  return b == 1 ? std::to_string(a) : std::to_string(a) + "/" + std::to_string(b);
}

}  // namespace

double phi_d_intercept(const TwoGroupLineCase& c, double w1, double w2) {
  check_domain(w1, w2);
  const InterceptSums s = intercept_sums(c, w1, w2);
  return -std::log(s.a * s.b - s.c * s.c);
}

double phi_a_intercept(const TwoGroupLineCase& c, double w1, double w2) {
  check_domain(w1, w2);
  const InterceptSums s = intercept_sums(c, w1, w2);
  return s.numerator_a / (s.a * s.b - s.c * s.c);
}

double phi_d_slope(const TwoGroupLineCase& c, double w1, double w2) {
  check_domain(w1, w2);
  const std::array<double, 2> w{w1, w2};
  double first = 0.0;
  double second = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double nm = static_cast<double>(c.n[i]) * c.m[i];
    first += nm * w[i] / (c.d * c.m[i] * w[i] + 1.0);
    second += nm * (1.0 - w[i]);
  }
  return -std::log(first * second);
}

CompoundProblem line_problem(const TwoGroupLineCase& c, std::span<const double> grid) {
  const Vector diag = c.variant == LineVariant::RandomIntercept ? Vector{c.d, 0.0}
                                                                : Vector{0.0, c.d};
  std::vector<GroupSpec> groups;
  for (int i = 0; i < 2; ++i) {
    groups.emplace_back(monomial_grid(grid, 1), Matrix{{1.0}}, Matrix::diagonal(diag), c.m[i], c.n[i]);
  }
  CriterionSpec crit = c.criterion == LineCriterion::A
                           ? CriterionSpec::linear(build_v_identity(2), "A")
                           : CriterionSpec::d_optimal();
  return CompoundProblem(std::move(groups), std::move(crit));
}

CompoundProblem line_problem(const TwoGroupLineCase& c) {
  const Vector grid{0.0, 1.0};
  return line_problem(c, grid);
}

std::vector<TwoGroupLineCase> table_cases(int table_id) {
  if (table_id != 1 && table_id != 2) throw InputError("table id must be 1 or 2");
  static constexpr int kSettings[12][4] = {
      {1, 1, 2, 8},  {1, 1, 5, 5},   {1, 1, 8, 2},  {1, 1, 4, 16}, {1, 1, 10, 10}, {1, 1, 16, 4},
      {1, 2, 2, 8},  {1, 2, 5, 5},   {1, 2, 8, 2},  {1, 2, 4, 16}, {1, 2, 10, 10}, {1, 2, 16, 4}};
  std::vector<TwoGroupLineCase> cases;
  for (const auto& row : kSettings) {
    TwoGroupLineCase c;
    c.n = {row[0], row[1]};
    c.m = {row[2], row[3]};
    c.d = 1.0;
    c.variant = table_id == 1 ? LineVariant::RandomIntercept : LineVariant::RandomSlope;
    c.criterion = table_id == 1 ? LineCriterion::A : LineCriterion::D;
    cases.push_back(c);
  }
  return cases;
}

SolverConfig table_solver_config() {
  SolverConfig cfg;
  cfg.gap_tol = 1e-10;
  return cfg;
}

std::vector<TableRow> reproduce_table(int table_id, const SolverConfig& config) {
  std::vector<TableRow> rows;
  int case_no = 0;
  for (const auto& c : table_cases(table_id)) {
    TableRow row;
    row.case_no = ++case_no;
    row.n1 = c.n[0];
    row.n2 = c.n[1];
    row.m1 = c.m[0];
    row.m2 = c.m[1];
    row.ratio = ratio_text(c.m[0], c.m[1]);
    try {
      const SolveReport rep = solve(line_problem(c), config);
      row.w1 = rep.designs[0][1];
      row.w2 = rep.designs[1][1];
      row.gap = rep.gap;
      row.status = to_string(rep.status);
    } catch (const Error& e) {
      row.w1 = row.w2 = std::nan("");
      row.gap = kInfinity;
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::string table_csv(const std::vector<TableRow>& rows) {
  std::string out = "case,n1,n2,m1,m2,m1/m2,w1,1-w1,w2,1-w2\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%d,%s,%.3f,%.3f,%.3f,%.3f\n", r.case_no, r.n1,
                  r.n2, r.m1, r.m2, r.ratio.c_str(), round3(r.w1), round3(1.0 - r.w1),
                  round3(r.w2), round3(1.0 - r.w2));
    out += buf;
  }
  return out;
}

}  // namespace compdes
