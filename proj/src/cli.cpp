#include "compdes/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>

#include "compdes/criteria.hpp"
#include "compdes/errors.hpp"
#include "compdes/estimate.hpp"
#include "compdes/io.hpp"
#include "compdes/line_examples.hpp"
#include "compdes/solver.hpp"
#include "compdes/verify.hpp"

namespace compdes {

namespace {

enum ExitCode { kOk = 0, kFailed = 1, kInput = 2, kInfeasible = 3 };

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string padded(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

void emit_json(const Json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = canonical_dump(doc);
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
}

void print_matrix(const Matrix& m, std::ostream& out) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << " ";
    for (double v : m.row(r)) out << " " << padded(num(v), 20);
    out << "\n";
  }
}

void print_verification(const VerificationReport& rep, std::ostream& out) {
  out << "value " << num(rep.value) << "\n";
  for (std::size_t i = 0; i < rep.groups.size(); ++i) {
    const auto& g = rep.groups[i];
    out << "group " << i << "\n";
    out << "  " << padded("point", 14) << padded("weight", 20) << padded("lhs", 20)
        << padded("rhs", 20) << padded("slack", 20) << "normalized\n";
    for (const auto& p : g.points) {
      out << "  " << padded(p.label + (p.support ? "*" : ""), 14) << padded(num(p.weight), 20)
          << padded(num(p.lhs), 20) << padded(num(p.rhs), 20) << padded(num(p.slack), 20)
          << num(p.normalized_slack) << "\n";
    }
  }
  out << "max violation " << num(rep.max_violation) << "\n";
  out << "max support residual " << num(rep.max_support_residual) << "\n";
  out << (rep.certified ? "certified" : "not certified") << " at tol " << num(rep.tolerance) << "\n";
}

struct Options {
  std::string problem;
  std::string design;
  std::string out;
  std::string algorithm;
  double tol = -1.0;
  long long seed = -1;
  std::string which = "all";
  int reps = 10000;
};

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  ProblemDocument doc = load_problem(o.problem);
  SolverConfig cfg = doc.solver;
  if (!o.algorithm.empty()) cfg.algorithm = parse_algorithm(o.algorithm);
  if (o.tol >= 0.0) cfg.gap_tol = o.tol;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  cfg.validate();
  const SolveReport rep = solve(doc.problem, cfg);
  emit_json(to_json(rep, doc.problem), o.out, out);
  if (!o.out.empty()) {
    out << to_string(rep.status) << ": value " << num(rep.value) << ", gap " << num(rep.gap) << ", "
        << rep.iterations << " iterations\n";
  }
  if (rep.status == SolveStatus::Converged) return kOk;
  err << "solve did not converge: " << to_string(rep.status) << "\n";
  return rep.status == SolveStatus::NotAttained ? kInfeasible : kFailed;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream&) {
  const ProblemDocument doc = load_problem(o.problem);
  const auto designs = load_designs(o.design, doc.problem);
  const double tol = o.tol >= 0.0 ? o.tol : 1e-6;
  const VerificationReport rep = verify(doc.problem, designs, tol);
  if (!o.out.empty()) write_file_atomic(o.out, canonical_dump(to_json(rep)));
  print_verification(rep, out);
  return rep.certified ? kOk : kFailed;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
  const ProblemDocument doc = load_problem(o.problem);
  const auto designs = load_designs(o.design, doc.problem);
  const Evaluation eval = evaluate(doc.problem, designs);
  if (!eval.feasible()) throw Infeasible("infeasible: " + eval.infeasible_reason());
  out << "criterion " << doc.problem.criterion().name << "\n";
  out << "value " << num(eval.value()) << "\n";
  out << "covariance\n";
  print_matrix(eval.covariance(), out);
  for (std::size_t i = 0; i < doc.problem.s(); ++i) {
    const GroupSpec& g = doc.problem.group(i);
    out << "group " << i << " rhs " << num(eval.rhs(i)) << "\n";
    out << "  " << padded("point", 14) << padded("weight", 20) << padded("lhs", 20) << "derivative\n";
    for (std::size_t t = 0; t < g.size(); ++t) {
      out << "  " << padded(g.point(t).label, 14) << padded(num(designs[i][t]), 20)
          << padded(num(eval.lhs(i, t)), 20) << num(eval.point_derivative(i, t)) << "\n";
    }
  }
  return kOk;
}

int cmd_gap(const Options& o, std::ostream& out, std::ostream&) {
  const ProblemDocument doc = load_problem(o.problem);
  const auto designs = load_designs(o.design, doc.problem);
  const Evaluation eval = evaluate(doc.problem, designs);
  if (!eval.feasible()) throw Infeasible("infeasible: " + eval.infeasible_reason());
  out << num(equivalence_gap(eval, doc.problem)) << "\n";
  return kOk;
}

int cmd_tables(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<int> ids;
  if (o.which == "1" || o.which == "all") ids.push_back(1);
  if (o.which == "2" || o.which == "all") ids.push_back(2);
  if (ids.empty()) throw InputError("--which must be 1, 2 or all");
  if (!o.out.empty()) std::filesystem::create_directories(o.out);
  int code = kOk;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto rows = reproduce_table(ids[k]);
    for (const auto& r : rows) {
      if (r.status != to_string(SolveStatus::Converged)) {
        err << "table " << ids[k] << " case " << r.case_no << ": " << r.status << "\n";
        code = kFailed;
      }
    }
    const std::string csv = table_csv(rows);
    if (o.out.empty()) {
      if (k > 0) out << "\n";
      out << csv;
    } else {
      const std::filesystem::path dir(o.out);
      const std::string stem = "table" + std::to_string(ids[k]);
      write_file_atomic(dir / (stem + ".csv"), csv);
      write_file_atomic(dir / (stem + ".json"), canonical_dump(to_json(rows)));
      out << "wrote " << (dir / (stem + ".csv")).string() << "\n";
    }
  }
  return code;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream&) {
  const ProblemDocument doc = load_problem(o.problem);
  const auto designs = load_designs(o.design, doc.problem);
  if (o.reps < 2) throw InputError("--reps must be at least 2");
  std::vector<std::vector<int>> counts;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    counts.push_back(round_to_exact(designs[i], doc.problem.group(i).m()));
  }
  const std::uint64_t seed = o.seed >= 0 ? static_cast<std::uint64_t>(o.seed) : 0;
  const SimulationSummary sum = simulate_covariance(doc.problem, counts, o.reps, seed);
  Json j = to_json(sum);
  j["counts"] = counts;
  emit_json(j, o.out, out);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal designs for multiple-group random coefficient regression models", "compdes"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_problem = [&](CLI::App* sub) {
    sub->add_option("--problem", o.problem, "Problem document (JSON)")->required()->check(CLI::ExistingFile);
  };
  auto add_design = [&](CLI::App* sub) {
    sub->add_option("--design", o.design, "Design document (JSON), e.g. a solve report")
        ->required()
        ->check(CLI::ExistingFile);
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "Compute an optimal design tuple");
  add_problem(solve_cmd);
  solve_cmd->add_option("--out", o.out, "Write the JSON report here instead of standard output");
  solve_cmd->add_option("--algorithm", o.algorithm,
                        "vertex-direction (default), multiplicative or projected-gradient");
  solve_cmd->add_option("--tol", o.tol, "Equivalence-gap tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", o.seed, "Seed for randomized restarts")->check(CLI::NonNegativeNumber);

  CLI::App* verify_cmd = app.add_subcommand("verify", "Certify a design tuple with the equivalence theorem");
  add_problem(verify_cmd);
  add_design(verify_cmd);
  verify_cmd->add_option("--tol", o.tol, "Normalized slack tolerance (default 1e-6)")
      ->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--out", o.out, "Also write the JSON verification report here");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Print criterion value, covariance and per-point sensitivities");
  add_problem(eval_cmd);
  add_design(eval_cmd);

  CLI::App* gap_cmd = app.add_subcommand("gap", "Print the equivalence gap of a design tuple");
  add_problem(gap_cmd);
  add_design(gap_cmd);

  CLI::App* tables_cmd = app.add_subcommand("tables", "Reproduce the two-group straight-line tables as CSV");
  tables_cmd->add_option("--which", o.which, "1, 2 or all")->check(CLI::IsMember({"1", "2", "all"}));
  tables_cmd->add_option("--out", o.out, "Directory for tableN.csv and tableN.json");

  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Monte Carlo check of the estimator covariance for a rounded design");
  add_problem(sim_cmd);
  add_design(sim_cmd);
  sim_cmd->add_option("--reps", o.reps, "Number of replications")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", o.seed, "Random seed")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--out", o.out, "Write the JSON summary here instead of standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*solve_cmd) return cmd_solve(o, out, err);
    if (*verify_cmd) return cmd_verify(o, out, err);
    if (*eval_cmd) return cmd_eval(o, out, err);
    if (*gap_cmd) return cmd_gap(o, out, err);
    if (*tables_cmd) return cmd_tables(o, out, err);
    if (*sim_cmd) return cmd_simulate(o, out, err);
  } catch (const Infeasible& e) {
    err << e.what() << "\n";
    return kInfeasible;
  } catch (const NoFeasibleStart& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const RankDeficient& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}

}  // namespace compdes
