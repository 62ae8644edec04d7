#pragma once

// JSON problem/design documents and report serialization. Documents are
// written with sorted keys and every number rounded to 12 significant digits
// so identical runs produce byte-identical files; non-finite numbers become
// null.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "compdes/estimate.hpp"
#include "compdes/line_examples.hpp"
#include "compdes/model.hpp"
#include "compdes/solver.hpp"
#include "compdes/verify.hpp"

namespace compdes {

using Json = nlohmann::json;

struct ProblemDocument {
  CompoundProblem problem;
  SolverConfig solver;
};

ProblemDocument parse_problem(const Json& doc);
ProblemDocument load_problem(const std::filesystem::path& path);

CriterionSpec parse_criterion(const Json& doc, const std::vector<GroupSpec>& groups);
SolverConfig parse_solver_config(const Json& doc, SolverConfig base = {});

// Accepts {"designs": [[...], ...]} (a solve report qualifies) or a bare array
// of weight arrays.
std::vector<Design> parse_designs(const Json& doc, const CompoundProblem& prob);
std::vector<Design> load_designs(const std::filesystem::path& path, const CompoundProblem& prob);

Json load_json(const std::filesystem::path& path);

Json to_json(const Matrix& m);
Json to_json(const SolveReport& report, const CompoundProblem& prob);
Json to_json(const VerificationReport& report);
Json to_json(const SimulationSummary& summary);
Json to_json(const std::vector<TableRow>& rows);

double round_significant(double x, int digits = 12);
std::string canonical_dump(const Json& doc);

// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace compdes
