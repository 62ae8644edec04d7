#pragma once

// Pooled best linear unbiased estimator of the mean parameters beta_0 from
// multi-group data, and a Monte Carlo check of its covariance.

#include <cstdint>
#include <istream>
#include <span>
#include <vector>

#include "compdes/matrix.hpp"
#include "compdes/model.hpp"

namespace compdes {

// One group's exact design and responses. `settings[h]` is the grid index of
// observation h (shared by all units); each unit vector stacks the m l-vectors
// Y_ij1, ..., Y_ijm.
struct GroupObservations {
  std::vector<std::size_t> settings;
  std::vector<Vector> units;
};

using ObservationSet = std::vector<GroupObservations>;

struct EstimateResult {
  Vector beta0_hat;
  std::vector<Vector> per_group_estimates;
  Matrix covariance;
  // W_i with beta0_hat = sum_i W_i beta_hat_{0,i}; sum_i W_i = I.
  std::vector<Matrix> weight_factors;
};

// The estimator as a fixed linear map of the group mean responses, for one
// set of exact designs.
class BlueOperator {
 public:
  BlueOperator(const std::vector<GroupSpec>& groups,
               const std::vector<std::vector<std::size_t>>& settings);

  const Matrix& covariance() const { return cov_; }
  const std::vector<Matrix>& weight_factors() const { return weights_; }
  // beta_hat_{0,i} from the group mean response (length m_i l).
  Vector group_estimate(std::size_t i, std::span<const double> mean_response) const;
  EstimateResult apply(const std::vector<Vector>& mean_responses) const;

 private:
  std::vector<Matrix> projections_;  // (F~^T F~)^{-1} F~^T (I (x) Sigma^{-1/2})
  std::vector<Matrix> weights_;
  Matrix cov_;
};

// Requires each group's data to have exactly n_i units of length m_i l, and
// every F_i of full column rank (RankDeficient otherwise).
EstimateResult blue(const std::vector<GroupSpec>& groups, const ObservationSet& data);

// Observation settings for an exact design: counts[t] copies of index t.
std::vector<std::size_t> expand_counts(std::span<const int> counts);

struct SimulationSummary {
  int replications = 0;
  Vector beta0;
  Vector mean;
  Vector mean_standard_error;
  Matrix empirical;
  Matrix analytic;
  Matrix standard_error;
  Matrix z_scores;
  double max_abs_z = 0.0;
};

// Draws beta_ij ~ N(beta0, D_i) and eps ~ N(0, Sigma_i) per replication, with
// replication r seeded from (seed, r) so the result does not depend on the
// thread count.
SimulationSummary simulate_covariance(const CompoundProblem& prob,
                                      const std::vector<std::vector<int>>& counts,
                                      int replications, std::uint64_t seed,
                                      std::span<const double> beta0 = {});

// CSV with columns unit_id, obs_index, setting_index, y_1..y_l (optional
// header row).
GroupObservations read_group_csv(std::istream& in, const GroupSpec& group);

}  // namespace compdes
