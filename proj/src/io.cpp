#include "compdes/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "compdes/criteria.hpp"
#include "compdes/errors.hpp"

namespace compdes {

namespace {

double number(const Json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

int positive_int(const Json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer()) {
    throw InputError(std::string("'") + key + "' must be an integer");
  }
  const int v = obj.at(key).get<int>();
  if (v < 1) throw InputError(std::string("'") + key + "' must be positive");
  return v;
}

Vector number_array(const Json& v, const std::string& what) {
  if (!v.is_array()) throw InputError(what + " must be an array of numbers");
  Vector out;
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

// A scalar (1x1), a flat array (one row), or an array of rows.
Matrix parse_matrix(const Json& v, const std::string& what) {
  if (v.is_number()) return Matrix{{v.get<double>()}};
  if (!v.is_array() || v.empty()) throw InputError(what + " must be a number or a matrix");
  if (v.front().is_number()) {
    const Vector row = number_array(v, what);
    return Matrix(1, row.size(), row);
  }
  std::vector<Vector> rows;
  for (const auto& r : v) rows.push_back(number_array(r, what));
  try {
    return Matrix::from_rows(rows);
  } catch (const ShapeMismatch&) {
    throw InputError(what + " has rows of different lengths");
  }
}

std::vector<GridPoint> parse_grid(const Json& v) {
  if (v.is_object()) {
    const std::string basis = v.value("basis", "");
    if (basis != "monomial") throw InputError("grid basis must be \"monomial\"");
    if (!v.contains("degree") || !v.at("degree").is_number_integer()) {
      throw InputError("monomial grid needs an integer 'degree'");
    }
    const Vector points = number_array(v.at("points"), "grid points");
    return monomial_grid(points, v.at("degree").get<int>());
  }
  if (!v.is_array() || v.empty()) throw InputError("'grid' must be a non-empty array or object");
  std::vector<GridPoint> grid;
  for (const auto& pt : v) {
    if (!pt.is_object() || !pt.contains("G")) throw InputError("grid points need a 'G' matrix");
    GridPoint gp;
    if (pt.contains("x")) {
      gp.x = number(pt.at("x"), "grid x");
      gp.label = format_setting(*gp.x);
    }
    if (pt.contains("label")) gp.label = pt.at("label").get<std::string>();
    if (gp.label.empty()) gp.label = std::to_string(grid.size());
    gp.gmat = parse_matrix(pt.at("G"), "G");
    grid.push_back(std::move(gp));
  }
  return grid;
}

GroupSpec parse_group(const Json& g) {
  if (!g.is_object()) throw InputError("each group must be an object");
  std::vector<GridPoint> grid = parse_grid(g.at("grid"));
  const std::size_t l = grid.front().gmat.rows();
  const std::size_t p = grid.front().gmat.cols();
  const Matrix sigma = g.contains("sigma") ? parse_matrix(g.at("sigma"), "sigma") : Matrix::identity(l);
  Matrix dmat = g.contains("D") ? parse_matrix(g.at("D"), "D") : Matrix(p, p);
  return GroupSpec(std::move(grid), sigma, std::move(dmat), positive_int(g, "m"), positive_int(g, "n"));
}

Json design_array(const Design& d) {
  Json arr = Json::array();
  for (double w : d.weights()) arr.push_back(w);
  return arr;
}

Json round_numbers(const Json& v) {
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) return nullptr;
    return round_significant(x);
  }
  if (v.is_array()) {
    Json out = Json::array();
    for (const auto& x : v) out.push_back(round_numbers(x));
    return out;
  }
  if (v.is_object()) {
    Json out = Json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = round_numbers(it.value());
    return out;
  }
  return v;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

CriterionSpec parse_criterion(const Json& doc, const std::vector<GroupSpec>& groups) {
  if (!doc.is_object() || !doc.contains("type")) throw InputError("criterion needs a 'type'");
  const std::string type = doc.at("type").get<std::string>();
  const std::size_t p = groups.front().p();
  if (type == "D") return CriterionSpec::d_optimal();
  if (type == "A") return CriterionSpec::linear(build_v_identity(p), "A");
  if (type == "c") {
    const Vector c = number_array(doc.at("c"), "c");
    if (c.size() != p) throw InputError("c must have length p");
    return CriterionSpec::linear(build_v_c(c), "c");
  }
  if (type == "IMSE") {
    const auto& grid = groups.front().points();
    Vector nu = uniform_measure(grid.size());
    if (doc.contains("nu") && !(doc.at("nu").is_string() && doc.at("nu") == "uniform")) {
      nu = number_array(doc.at("nu"), "nu");
    }
    return CriterionSpec::linear(build_v_imse(grid, nu), "IMSE");
  }
  if (type == "L") return CriterionSpec::linear(parse_matrix(doc.at("V"), "V"), "L");
  throw InputError("unknown criterion type '" + type + "'");
}

SolverConfig parse_solver_config(const Json& doc, SolverConfig cfg) {
  if (doc.is_null()) return cfg;
  if (!doc.is_object()) throw InputError("'solver' must be an object");
  if (doc.contains("algorithm")) cfg.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
  if (doc.contains("step_rule")) cfg.step_rule = parse_step_rule(doc.at("step_rule").get<std::string>());
  if (doc.contains("max_iters")) cfg.max_iters = doc.at("max_iters").get<int>();
  if (doc.contains("gap_tol")) cfg.gap_tol = number(doc.at("gap_tol"), "gap_tol");
  if (doc.contains("restarts")) cfg.restarts = doc.at("restarts").get<int>();
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("prune_threshold")) cfg.prune_threshold = number(doc.at("prune_threshold"), "prune_threshold");
  if (doc.contains("singular_tol")) cfg.singular_tol = number(doc.at("singular_tol"), "singular_tol");
  cfg.validate();
  return cfg;
}

ProblemDocument parse_problem(const Json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("groups") || !doc.at("groups").is_array() ||
        doc.at("groups").empty()) {
      throw InputError("problem document needs a non-empty 'groups' array");
    }
    std::vector<GroupSpec> groups;
    for (const auto& g : doc.at("groups")) groups.push_back(parse_group(g));
    if (!doc.contains("criterion")) throw InputError("problem document needs a 'criterion'");
    CriterionSpec crit = parse_criterion(doc.at("criterion"), groups);
    SolverConfig cfg = parse_solver_config(doc.value("solver", Json()));
    return {CompoundProblem(std::move(groups), std::move(crit)), cfg};
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed problem document: ") + e.what());
  }
}

ProblemDocument load_problem(const std::filesystem::path& path) { return parse_problem(load_json(path)); }

std::vector<Design> parse_designs(const Json& doc, const CompoundProblem& prob) {
  const Json& arr = doc.is_object() ? doc.at("designs") : doc;
  if (!arr.is_array() || arr.size() != prob.s()) {
    throw InputError("design document must list one weight array per group");
  }
  std::vector<Design> designs;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Vector w = number_array(arr[i], "design weights");
    if (w.size() != prob.group(i).size()) {
      throw InputError("design " + std::to_string(i) + " has the wrong number of weights");
    }
    designs.emplace_back(std::move(w));
  }
  return designs;
}

std::vector<Design> load_designs(const std::filesystem::path& path, const CompoundProblem& prob) {
  const Json doc = load_json(path);
  try {
    return parse_designs(doc, prob);
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed design document: ") + e.what());
  }
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (double v : m.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const SolveReport& report, const CompoundProblem& prob) {
  Json doc;
  doc["criterion"] = prob.criterion().name;
  doc["value"] = report.value;
  doc["gap"] = report.gap;
  doc["iterations"] = report.iterations;
  doc["converged"] = report.converged;
  doc["status"] = to_string(report.status);
  doc["designs"] = Json::array();
  for (const auto& d : report.designs) doc["designs"].push_back(design_array(d));
  doc["support"] = Json::array();
  for (std::size_t i = 0; i < report.designs.size(); ++i) {
    Json sup = Json::array();
    for (std::size_t t : report.designs[i].support()) sup.push_back(prob.group(i).point(t).label);
    doc["support"].push_back(std::move(sup));
  }
  doc["history"] = Json::array();
  for (const auto& h : report.history) {
    doc["history"].push_back({{"iteration", h.iteration}, {"value", h.value}, {"gap", h.gap}});
  }
  return doc;
}

Json to_json(const VerificationReport& report) {
  Json doc;
  doc["certified"] = report.certified;
  doc["tolerance"] = report.tolerance;
  doc["value"] = report.value;
  doc["max_violation"] = report.max_violation;
  doc["max_support_residual"] = report.max_support_residual;
  doc["max_violation_raw"] = report.max_violation_raw;
  doc["max_support_residual_raw"] = report.max_support_residual_raw;
  doc["groups"] = Json::array();
  for (const auto& g : report.groups) {
    Json gj;
    gj["max_violation"] = g.max_violation;
    gj["max_support_residual"] = g.max_support_residual;
    gj["weighted_slack_sum"] = g.weighted_slack_sum;
    gj["points"] = Json::array();
    for (const auto& p : g.points) {
      gj["points"].push_back({{"index", p.index},
                              {"label", p.label},
                              {"weight", p.weight},
                              {"lhs", p.lhs},
                              {"rhs", p.rhs},
                              {"slack", p.slack},
                              {"normalized_slack", p.normalized_slack},
                              {"support", p.support}});
    }
    doc["groups"].push_back(std::move(gj));
  }
  return doc;
}

Json to_json(const SimulationSummary& s) {
  Json doc;
  doc["replications"] = s.replications;
  doc["beta0"] = s.beta0;
  doc["mean"] = s.mean;
  doc["mean_standard_error"] = s.mean_standard_error;
  doc["empirical_covariance"] = to_json(s.empirical);
  doc["analytic_covariance"] = to_json(s.analytic);
  doc["standard_error"] = to_json(s.standard_error);
  doc["z_scores"] = to_json(s.z_scores);
  doc["max_abs_z"] = s.max_abs_z;
  return doc;
}

Json to_json(const std::vector<TableRow>& rows) {
  Json arr = Json::array();
  for (const auto& r : rows) {
    arr.push_back({{"case", r.case_no},
                   {"n1", r.n1},
                   {"n2", r.n2},
                   {"m1", r.m1},
                   {"m2", r.m2},
                   {"m1/m2", r.ratio},
                   {"w1", round3(r.w1)},
                   {"1-w1", round3(1.0 - r.w1)},
                   {"w2", round3(r.w2)},
                   {"1-w2", round3(1.0 - r.w2)},
                   {"status", r.status}});
  }
  return arr;
}

double round_significant(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

std::string canonical_dump(const Json& doc) { return round_numbers(doc).dump(2) + "\n"; }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw InputError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

}  // namespace compdes
