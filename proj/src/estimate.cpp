#include "compdes/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "compdes/criteria.hpp"
#include "compdes/errors.hpp"

namespace compdes {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix sqrt_inverse_or_identity(const GroupSpec& g) {
  if (g.sigma().matrix() == Matrix::identity(g.l())) return Matrix::identity(g.l());
  return spd_sqrt_inverse(g.sigma()).matrix();
}

}  // namespace

std::vector<std::size_t> expand_counts(std::span<const int> counts) {
  std::vector<std::size_t> settings;
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] < 0) throw CountMismatch("negative replication count");
    settings.insert(settings.end(), static_cast<std::size_t>(counts[t]), t);
  }
  return settings;
}

BlueOperator::BlueOperator(const std::vector<GroupSpec>& groups,
                           const std::vector<std::vector<std::size_t>>& settings) {
  if (groups.size() != settings.size()) throw ShapeMismatch("one settings list per group required");
  const std::size_t p = groups.front().p();
  Matrix sum(p, p);
  std::vector<Matrix> group_info;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const GroupSpec& g = groups[i];
    const auto& xs = settings[i];
    if (xs.size() != static_cast<std::size_t>(g.m())) {
      throw CountMismatch("group " + std::to_string(i) + " has " + std::to_string(xs.size()) +
                          " observations per unit, expected m = " + std::to_string(g.m()));
    }
    Matrix info(p, p);
    for (std::size_t x : xs) info += g.point_moment(x);
    Matrix lower;
    if (!try_cholesky(info, lower)) {
      throw RankDeficient("design matrix of group " + std::to_string(i) + " is rank deficient");
    }
    const SpdMatrix info_spd(info);
    const Matrix info_inv = inverse_matrix(info_spd);

    // F~^T (I (x) Sigma^{-1/2}) = [G~(x_1)^T Sigma^{-1/2}, ..., G~(x_m)^T Sigma^{-1/2}]
    const Matrix root_inv = sqrt_inverse_or_identity(g);
    const std::size_t l = g.l();
    Matrix stacked(p, xs.size() * l);
    for (std::size_t h = 0; h < xs.size(); ++h) {
      const Matrix block = g.transformed_gmat(xs[h]).transpose() * root_inv;
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < l; ++c) stacked(r, h * l + c) = block(r, c);
    }
    projections_.push_back(info_inv * stacked);

    const Matrix a = inverse_matrix(SpdMatrix(info_inv + g.dmat())) * static_cast<double>(g.n());
    sum += a;
    group_info.push_back(a);
  }
  cov_ = inverse_matrix(SpdMatrix(sum.symmetrized()));
  for (const auto& a : group_info) weights_.push_back(cov_ * a);
}

Vector BlueOperator::group_estimate(std::size_t i, std::span<const double> mean_response) const {
  return projections_.at(i) * mean_response;
}

EstimateResult BlueOperator::apply(const std::vector<Vector>& mean_responses) const {
  EstimateResult out;
  const std::size_t p = cov_.rows();
  out.beta0_hat.assign(p, 0.0);
  for (std::size_t i = 0; i < projections_.size(); ++i) {
    Vector est = group_estimate(i, mean_responses.at(i));
    const Vector contrib = weights_[i] * est;
    for (std::size_t r = 0; r < p; ++r) out.beta0_hat[r] += contrib[r];
    out.per_group_estimates.push_back(std::move(est));
  }
  out.covariance = cov_;
  out.weight_factors = weights_;
  return out;
}

EstimateResult blue(const std::vector<GroupSpec>& groups, const ObservationSet& data) {
  if (data.size() != groups.size()) throw ShapeMismatch("one observation block per group required");
  std::vector<std::vector<std::size_t>> settings;
  std::vector<Vector> means;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const GroupSpec& g = groups[i];
    const GroupObservations& obs = data[i];
    if (obs.units.size() != static_cast<std::size_t>(g.n())) {
      throw CountMismatch("group " + std::to_string(i) + " has " + std::to_string(obs.units.size()) +
                          " units, expected n = " + std::to_string(g.n()));
    }
    for (std::size_t x : obs.settings) {
      if (x >= g.size()) throw IndexOutOfRange("setting index out of range in group " + std::to_string(i));
    }
    const std::size_t len = obs.settings.size() * g.l();
    Vector mean(len, 0.0);
    for (const auto& y : obs.units) {
      if (y.size() != len) throw ShapeMismatch("unit response length must be m * l");
      for (std::size_t k = 0; k < len; ++k) mean[k] += y[k];
    }
    for (double& v : mean) v /= static_cast<double>(obs.units.size());
    settings.push_back(obs.settings);
    means.push_back(std::move(mean));
  }
  return BlueOperator(groups, settings).apply(means);
}

SimulationSummary simulate_covariance(const CompoundProblem& prob,
                                      const std::vector<std::vector<int>>& counts,
                                      int replications, std::uint64_t seed,
                                      std::span<const double> beta0) {
  if (replications < 1) throw InputError("replications must be at least 1");
  if (counts.size() != prob.s()) throw ShapeMismatch("one count vector per group required");
  const std::size_t p = prob.p();
  Vector truth = beta0.empty() ? Vector(p, 0.0) : Vector(beta0.begin(), beta0.end());
  if (truth.size() != p) throw ShapeMismatch("beta0 must have length p");

  std::vector<std::vector<std::size_t>> settings;
  for (std::size_t i = 0; i < prob.s(); ++i) {
    const GroupSpec& g = prob.group(i);
    if (counts[i].size() != g.size()) throw ShapeMismatch("count vector length must match the grid");
    exact_to_approximate(counts[i], g.m());
    settings.push_back(expand_counts(counts[i]));
  }
  const BlueOperator op(prob.groups(), settings);

  std::vector<Matrix> effect_factors;
  std::vector<Matrix> noise_factors;
  for (const auto& g : prob.groups()) {
    effect_factors.push_back(psd_factor(g.dmat()));
    noise_factors.push_back(g.sigma().cholesky_factor());
  }

  std::vector<Vector> draws(static_cast<std::size_t>(replications));
  auto run_range = [&](int begin, int end) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int r = begin; r < end; ++r) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r))));
      std::vector<Vector> means;
      for (std::size_t i = 0; i < prob.s(); ++i) {
        const GroupSpec& g = prob.group(i);
        const std::size_t l = g.l();
        const auto& xs = settings[i];
        Vector mean(xs.size() * l, 0.0);
        Vector z_p(p);
        Vector z_l(l);
        for (int j = 0; j < g.n(); ++j) {
          for (double& z : z_p) z = normal(rng);
          Vector beta = effect_factors[i] * z_p;
          for (std::size_t k = 0; k < p; ++k) beta[k] += truth[k];
          for (std::size_t h = 0; h < xs.size(); ++h) {
            const Vector signal = g.point(xs[h]).gmat * beta;
            for (double& z : z_l) z = normal(rng);
            const Vector noise = noise_factors[i] * z_l;
            for (std::size_t c = 0; c < l; ++c) mean[h * l + c] += signal[c] + noise[c];
          }
        }
        for (double& v : mean) v /= static_cast<double>(g.n());
        means.push_back(std::move(mean));
      }
      draws[static_cast<std::size_t>(r)] = op.apply(means).beta0_hat;
    }
  };

  const int workers =
      std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, 8);
  std::vector<std::thread> threads;
  const int chunk = (replications + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(replications, begin + chunk);
    if (begin < end) threads.emplace_back(run_range, begin, end);
  }
  for (auto& t : threads) t.join();

  // Sequential reduction in replication order.
  const double reps = static_cast<double>(replications);
  SimulationSummary out;
  out.replications = replications;
  out.beta0 = truth;
  out.mean.assign(p, 0.0);
  for (const auto& d : draws)
    for (std::size_t k = 0; k < p; ++k) out.mean[k] += d[k];
  for (double& v : out.mean) v /= reps;

  out.empirical = Matrix(p, p);
  out.standard_error = Matrix(p, p);
  out.z_scores = Matrix(p, p);
  out.analytic = op.covariance();
  out.mean_standard_error.assign(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (const auto& d : draws) {
        const double q = (d[a] - out.mean[a]) * (d[b] - out.mean[b]);
        sum += q;
        sum_sq += q * q;
      }
      const double mean_q = sum / reps;
      const double var_q = std::max(sum_sq / reps - mean_q * mean_q, 0.0);
      out.empirical(a, b) = replications > 1 ? sum / (reps - 1.0) : 0.0;
      out.standard_error(a, b) = std::sqrt(var_q / reps);
      const double se = out.standard_error(a, b);
      out.z_scores(a, b) = se > 0.0 ? (out.empirical(a, b) - out.analytic(a, b)) / se : 0.0;
      out.max_abs_z = std::max(out.max_abs_z, std::abs(out.z_scores(a, b)));
    }
    out.mean_standard_error[a] = std::sqrt(std::max(out.empirical(a, a), 0.0) / reps);
  }
  return out;
}

GroupObservations read_group_csv(std::istream& in, const GroupSpec& group) {
  const std::size_t l = group.l();
  struct Row {
    std::size_t obs;
    std::size_t setting;
    Vector y;
  };
  std::map<std::string, std::vector<Row>> by_unit;
  std::vector<std::string> unit_order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 3 + l) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(3 + l) +
                       " columns");
    }
    Row row;
    try {
      row.obs = std::stoul(fields[1]);
      row.setting = std::stoul(fields[2]);
      for (std::size_t c = 0; c < l; ++c) row.y.push_back(std::stod(fields[3 + c]));
    } catch (const std::logic_error&) {
      if (line_no == 1) continue;  // header
      throw InputError("line " + std::to_string(line_no) + ": malformed number");
    }
    if (row.setting >= group.size()) {
      throw InputError("line " + std::to_string(line_no) + ": setting index out of range");
    }
    auto [it, inserted] = by_unit.try_emplace(fields[0]);
    if (inserted) unit_order.push_back(fields[0]);
    it->second.push_back(std::move(row));
  }
  if (unit_order.empty()) throw InputError("no observations");

  const std::size_t m = static_cast<std::size_t>(group.m());
  GroupObservations out;
  out.settings.assign(m, group.size());
  for (const auto& id : unit_order) {
    auto& rows = by_unit[id];
    if (rows.size() != m) {
      throw InputError("unit '" + id + "' has " + std::to_string(rows.size()) +
                       " observations, expected m = " + std::to_string(m));
    }
    Vector y(m * l, 0.0);
    std::vector<bool> seen(m, false);
    for (const auto& row : rows) {
      if (row.obs >= m || seen[row.obs]) {
        throw InputError("unit '" + id + "' has a missing or duplicate obs_index");
      }
      seen[row.obs] = true;
      if (out.settings[row.obs] == group.size()) {
        out.settings[row.obs] = row.setting;
      } else if (out.settings[row.obs] != row.setting) {
        throw InputError("units disagree on the setting of observation " + std::to_string(row.obs));
      }
      for (std::size_t c = 0; c < l; ++c) y[row.obs * l + c] = row.y[c];
    }
    out.units.push_back(std::move(y));
  }
  return out;
}

}  // namespace compdes
