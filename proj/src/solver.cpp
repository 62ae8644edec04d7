#include "compdes/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "compdes/errors.hpp"

namespace compdes {

namespace {

// The criterion restricted to the segment w + alpha d of one group's weights.
// Moment matrices are linear in the weights, so M_i(alpha) = M_i + alpha dM.
class GroupSegment {
 public:
  GroupSegment(const CompoundProblem& prob, const std::vector<Matrix>& moments, std::size_t group,
               const Matrix& direction_moment)
      : prob_(prob), moments_(moments), group_(group), base_(moments[group]),
        step_(direction_moment) {}

  Evaluation at(double alpha) {
    moments_[group_] = base_ + step_ * alpha;
    return Evaluation(prob_, moments_);
  }

  // Derivative along the segment: -n m tr(dM B_i).
  double derivative(const Evaluation& e) const {
    return -e.scale(group_) * trace_product(step_, e.sensitivity_kernel(group_));
  }

 private:
  const CompoundProblem& prob_;
  std::vector<Matrix> moments_;
  std::size_t group_;
  Matrix base_;
  Matrix step_;
};

// Bisection on the sign of the analytic derivative; the restriction of a
// convex criterion to a segment has a monotone derivative. Infeasible points
// count as "past the minimum".
double exact_line_search(GroupSegment& seg, double f0, double d0, double alpha_max) {
  if (!(d0 < 0.0) || alpha_max <= 0.0) return 0.0;
  {
    const Evaluation e = seg.at(alpha_max);
    if (e.feasible() && seg.derivative(e) <= 0.0 && e.value() <= f0) return alpha_max;
  }
  double lo = 0.0;
  double hi = alpha_max;
  for (int it = 0; it < 200 && hi - lo > 1e-17 * alpha_max; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const Evaluation e = seg.at(mid);
    if (!e.feasible() || seg.derivative(e) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return lo;
}

double golden_line_search(GroupSegment& seg, double f0, double alpha_max) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0;
  double b = alpha_max;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = seg.at(c).value();
  double fd = seg.at(d).value();
  double best_alpha = 0.0;
  double best = f0;
  auto consider = [&](double alpha, double f) {
    if (f < best) {
      best = f;
      best_alpha = alpha;
    }
  };
  consider(c, fc);
  consider(d, fd);
  while (b - a > 1e-10 * std::max(1.0, alpha_max)) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = seg.at(c).value();
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = seg.at(d).value();
      consider(d, fd);
    }
  }
  const double fe = seg.at(alpha_max).value();
  consider(alpha_max, fe);
  return best_alpha;
}

double armijo_line_search(GroupSegment& seg, double f0, double d0, double alpha_max) {
  if (!(d0 < 0.0)) return 0.0;
  constexpr double kSufficient = 1e-4;
  double alpha = alpha_max;
  for (int it = 0; it < 80; ++it, alpha *= 0.5) {
    const double f = seg.at(alpha).value();
    if (f <= f0 + kSufficient * alpha * d0) return alpha;
  }
  return 0.0;
}

double line_search(GroupSegment& seg, const Evaluation& current, StepRule rule, double alpha_max) {
  const double f0 = current.value();
  const double d0 = seg.derivative(current);
  switch (rule) {
    case StepRule::ExactLineSearch:
      return exact_line_search(seg, f0, d0, alpha_max);
    case StepRule::Golden:
      return d0 < 0.0 ? golden_line_search(seg, f0, alpha_max) : 0.0;
    case StepRule::Armijo:
      return armijo_line_search(seg, f0, d0, alpha_max);
  }
  return 0.0;
}

// Near the optimum the criterion changes by less than its rounding error while
// the derivative still carries information, so steps chosen by the
// derivative are accepted within this slack.
double value_noise(double f) { return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f)); }

Matrix direction_moment(const GroupSpec& g, std::span<const double> direction) {
  Matrix dm(g.p(), g.p());
  for (std::size_t t = 0; t < direction.size(); ++t) {
    if (direction[t] != 0.0) dm += g.point_moment(t) * direction[t];
  }
  return dm;
}

Vector apply_step(const Vector& w, const Vector& d, double alpha) {
  Vector out(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) out[t] = std::max(w[t] + alpha * d[t], 0.0);
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& x : out) x /= sum;
  return out;
}

// Moves group i along `direction` with the configured line search; returns
// true if the design changed.
bool segment_step(const CompoundProblem& prob, std::vector<Design>& designs,
                  std::vector<Matrix>& moments, Evaluation& current, std::size_t i,
                  const Vector& direction, double alpha_max, StepRule rule) {
  const GroupSpec& g = prob.group(i);
  GroupSegment seg(prob, moments, i, direction_moment(g, direction));
  const double alpha = line_search(seg, current, rule, alpha_max);
  if (!(alpha > 0.0)) return false;
  Design candidate(apply_step(designs[i].weights(), direction, alpha));
  if (candidate == designs[i]) return false;
  std::vector<Matrix> trial = moments;
  trial[i] = moment_matrix(g, candidate);
  Evaluation next(prob, trial);
  if (!next.feasible() || next.value() > current.value() + value_noise(current.value())) return false;
  designs[i] = std::move(candidate);
  moments = std::move(trial);
  current = std::move(next);
  return true;
}

bool toward_step(const CompoundProblem& prob, std::vector<Design>& designs,
                 std::vector<Matrix>& moments, Evaluation& current, std::size_t i, StepRule rule) {
  const std::size_t k = prob.group(i).size();
  std::size_t best = 0;
  double best_phi = kInfinity;
  for (std::size_t t = 0; t < k; ++t) {
    const double phi = current.point_derivative(i, t);
    if (phi < best_phi) {
      best_phi = phi;
      best = t;
    }
  }
  if (!(best_phi < 0.0)) return false;
  Vector direction(k);
  for (std::size_t t = 0; t < k; ++t) direction[t] = (t == best ? 1.0 : 0.0) - designs[i][t];
  return segment_step(prob, designs, moments, current, i, direction, 1.0, rule);
}

// Transfers weight from the worst support point to the best grid point.
bool exchange_step(const CompoundProblem& prob, std::vector<Design>& designs,
                   std::vector<Matrix>& moments, Evaluation& current, std::size_t i,
                   StepRule rule) {
  const std::size_t k = prob.group(i).size();
  std::size_t to = 0;
  std::size_t from = k;
  double to_phi = kInfinity;
  double from_phi = -kInfinity;
  for (std::size_t t = 0; t < k; ++t) {
    const double phi = current.point_derivative(i, t);
    if (phi < to_phi) {
      to_phi = phi;
      to = t;
    }
    if (designs[i][t] > 0.0 && phi > from_phi) {
      from_phi = phi;
      from = t;
    }
  }
  if (from == k || from == to || !(from_phi > to_phi)) return false;
  Vector direction(k, 0.0);
  direction[to] = 1.0;
  direction[from] = -1.0;
  return segment_step(prob, designs, moments, current, i, direction, designs[i][from], rule);
}

bool multiplicative_step(const CompoundProblem& prob, std::vector<Design>& designs,
                         std::vector<Matrix>& moments, Evaluation& current, std::size_t i,
                         StepRule rule) {
  const Vector grad = current.weight_gradient(i);
  const Vector& w = designs[i].weights();
  Vector target(w.size());
  double total = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) {
    target[t] = w[t] * std::max(-grad[t], 0.0);
    total += target[t];
  }
  if (!(total > 0.0)) return false;
  Vector direction(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) direction[t] = target[t] / total - w[t];
  return segment_step(prob, designs, moments, current, i, direction, 1.0, rule);
}

bool projected_gradient_step(const CompoundProblem& prob, std::vector<Design>& designs,
                             std::vector<Matrix>& moments, Evaluation& current, std::size_t i,
                             StepRule rule) {
  const Vector grad = current.weight_gradient(i);
  const Vector& w = designs[i].weights();
  double scale = 0.0;
  for (double g : grad) scale = std::max(scale, std::abs(g));
  if (!(scale > 0.0)) return false;
  constexpr double kStep = 0.5;
  Vector shifted(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) shifted[t] = w[t] - kStep * grad[t] / scale;
  const Design target = project_simplex(shifted);
  Vector direction(w.size());
  for (std::size_t t = 0; t < w.size(); ++t) direction[t] = target[t] - w[t];
  return segment_step(prob, designs, moments, current, i, direction, 1.0, rule);
}

bool prune(const CompoundProblem& prob, std::vector<Design>& designs, std::vector<Matrix>& moments,
           Evaluation& current, double threshold) {
  bool changed = false;
  for (std::size_t i = 0; i < designs.size(); ++i) {
    Vector w = designs[i].weights();
    bool any = false;
    for (double& x : w) {
      if (x > 0.0 && x < threshold) {
        x = 0.0;
        any = true;
      }
    }
    if (!any) continue;
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= sum;
    Design candidate(std::move(w));
    std::vector<Matrix> trial = moments;
    trial[i] = moment_matrix(prob.group(i), candidate);
    Evaluation next(prob, trial);
    if (next.feasible() && next.value() <= current.value()) {
      designs[i] = std::move(candidate);
      moments = std::move(trial);
      current = std::move(next);
      changed = true;
    }
  }
  return changed;
}

double min_relative_eigenvalue(const std::vector<Matrix>& moments) {
  double worst = kInfinity;
  for (const auto& m : moments) {
    const SymmetricEigen eig = jacobi_eigen(m);
    const double top = eig.values.back();
    worst = std::min(worst, top > 0.0 ? eig.values.front() / top : 0.0);
  }
  return worst;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::VertexDirection: return "vertex-direction";
    case Algorithm::Multiplicative: return "multiplicative";
    case Algorithm::ProjectedGradient: return "projected-gradient";
  }
  return "?";
}

std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::ExactLineSearch: return "exact-line-search-1d";
    case StepRule::Golden: return "golden";
    case StepRule::Armijo: return "armijo";
  }
  return "?";
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxItersExceeded: return "max-iters-exceeded";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::NotAttained: return "not-attained";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "vertex-direction") return Algorithm::VertexDirection;
  if (s == "multiplicative") return Algorithm::Multiplicative;
  if (s == "projected-gradient") return Algorithm::ProjectedGradient;
  throw InputError("unknown algorithm '" + s + "'");
}

StepRule parse_step_rule(const std::string& s) {
  if (s == "exact-line-search-1d" || s == "exact") return StepRule::ExactLineSearch;
  if (s == "golden") return StepRule::Golden;
  if (s == "armijo") return StepRule::Armijo;
  throw InputError("unknown step rule '" + s + "'");
}

void SolverConfig::validate() const {
  if (!(gap_tol > 0.0)) throw InputError("gap_tol must be positive");
  if (max_iters < 1) throw InputError("max_iters must be at least 1");
  if (restarts < 0) throw InputError("restarts must be non-negative");
}

double equivalence_gap(const Evaluation& eval, const CompoundProblem& prob) {
  if (!eval.feasible()) throw Infeasible("infeasible: " + eval.infeasible_reason());
  double worst = 0.0;
  for (std::size_t i = 0; i < prob.s(); ++i) {
    for (std::size_t t = 0; t < prob.group(i).size(); ++t) {
      worst = std::max(worst, -eval.point_derivative(i, t));
    }
  }
  return worst / (1.0 + std::abs(eval.value()));
}

double equivalence_gap(const CompoundProblem& prob, std::span<const Design> designs) {
  return equivalence_gap(evaluate(prob, designs), prob);
}

std::vector<Design> initial_designs(const CompoundProblem& prob, const SolverConfig& config) {
  std::vector<Design> designs;
  for (const auto& g : prob.groups()) designs.push_back(Design::uniform(g.size()));
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < prob.s(); ++i) {
    const GroupSpec& g = prob.group(i);
    Matrix lower;
    if (try_cholesky(moment_matrix(g, designs[i]), lower)) continue;
    bool found = false;
    if (g.size() >= g.p()) {
      std::vector<std::size_t> idx(g.size());
      for (int attempt = 0; attempt < config.restarts && !found; ++attempt) {
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        Vector w(g.size(), 0.0);
        for (std::size_t j = 0; j < g.p(); ++j) w[idx[j]] = 1.0 / static_cast<double>(g.p());
        Design candidate(std::move(w));
        if (try_cholesky(moment_matrix(g, candidate), lower)) {
          designs[i] = std::move(candidate);
          found = true;
        }
      }
    }
    if (!found) {
      throw NoFeasibleStart("no nonsingular starting design found for group " + std::to_string(i));
    }
  }
  if (!evaluate(prob, designs).feasible()) throw NoFeasibleStart("starting designs are infeasible");
  return designs;
}

Design vertex_direction_step(const CompoundProblem& prob, std::span<const Design> designs,
                             std::size_t group, StepRule rule) {
  std::vector<Design> work(designs.begin(), designs.end());
  std::vector<Matrix> moments = moment_matrices(prob, work);
  Evaluation current(prob, moments);
  if (!current.feasible()) throw Infeasible("infeasible: " + current.infeasible_reason());
  if (group >= prob.s()) throw IndexOutOfRange("group index out of range");
  toward_step(prob, work, moments, current, group, rule);
  return work[group];
}

Design project_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidDesign("cannot project an empty vector");
  Vector u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) tau = candidate;
  }
  Vector w(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) w[t] = std::max(v[t] - tau, 0.0);
  return Design(std::move(w));
}

std::vector<int> round_to_exact(const Design& d, int m) {
  if (m < 1) throw CountMismatch("m must be positive");
  const std::size_t k = d.size();
  std::vector<int> counts(k);
  Vector remainder(k);
  int assigned = 0;
  for (std::size_t t = 0; t < k; ++t) {
    const double target = d[t] * m;
    counts[t] = static_cast<int>(std::floor(target));
    remainder[t] = target - counts[t];
    assigned += counts[t];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t j = 0; assigned < m; ++j, ++assigned) counts[order[j % k]] += 1;
  return counts;
}

SolveReport solve(const CompoundProblem& prob, const SolverConfig& config) {
  config.validate();
  return solve(prob, config, initial_designs(prob, config));
}

SolveReport solve(const CompoundProblem& prob, const SolverConfig& config,
                  std::vector<Design> start) {
  config.validate();
  SolveReport report;
  std::vector<Design> designs = std::move(start);
  std::vector<Matrix> moments = moment_matrices(prob, designs);
  Evaluation current(prob, moments);
  if (!current.feasible()) throw Infeasible("infeasible start: " + current.infeasible_reason());

  double gap = equivalence_gap(current, prob);
  report.history.push_back({0, current.value(), gap});

  int iter = 0;
  while (gap > config.gap_tol && iter < config.max_iters) {
    ++iter;
    bool moved = false;
    for (std::size_t i = 0; i < prob.s(); ++i) {
      switch (config.algorithm) {
        case Algorithm::VertexDirection:
          moved |= toward_step(prob, designs, moments, current, i, config.step_rule);
          moved |= exchange_step(prob, designs, moments, current, i, config.step_rule);
          break;
        case Algorithm::Multiplicative:
          moved |= multiplicative_step(prob, designs, moments, current, i, config.step_rule);
          break;
        case Algorithm::ProjectedGradient:
          moved |= projected_gradient_step(prob, designs, moments, current, i, config.step_rule);
          break;
      }
    }
    moved |= prune(prob, designs, moments, current, config.prune_threshold);
    gap = equivalence_gap(current, prob);
    report.history.push_back({iter, current.value(), gap});
    if (gap <= config.gap_tol) break;
    if (min_relative_eigenvalue(moments) < config.singular_tol) {
      report.status = SolveStatus::NotAttained;
      break;
    }
    if (!moved) {
      report.status = SolveStatus::Stalled;
      break;
    }
  }

  report.designs = std::move(designs);
  report.value = current.value();
  report.gap = gap;
  report.iterations = iter;
  report.converged = gap <= config.gap_tol;
  if (report.converged) report.status = SolveStatus::Converged;
  // A vanishing gap next to a (numerically) singular moment matrix only
  // certifies the limit of a minimizing sequence, not an attained optimum.
  if (min_relative_eigenvalue(moments) < config.singular_tol) {
    report.converged = false;
    report.status = SolveStatus::NotAttained;
  }
  return report;
}

}  // namespace compdes
