#pragma once

// The two-armed bandit statistic.
//
// Every subject carries a signed reward: pulling arm 1 yields +mu_hat[i],
// arm 0 yields -mu_hat[i]. The weighted statistic after the whole sequence is
//
//   T = sum_i [ w * s_i * mean / n + s_i * mu_hat[i] / (sqrt(n) * sigma_hat) ]
//
// with w = lambda / (1 - lambda) and s_i = +1 for arm 1, -1 for arm 0. The
// optimal policy plays arm 1 at step i >= 2 iff the running value of that
// sum over steps 1..i-1 is >= 0. The running value uses the final n in both
// normalizers, so the last partial value is the statistic itself.

#include <cstdint>
#include <span>
#include <vector>

namespace pwtab {

struct Dataset;
struct CounterfactualConfig;

// Per-subject pseudo-outcomes and their summary. Also serves as the DR
// engine's output type.
struct RewardSequence {
  std::vector<double> mu_hat;
  double mean = 0.0;
  double sigma_hat = 0.0;

  // Computes mean and the (n-1)-normalized standard deviation. Requires
  // n >= 2 and finite values. Does not reject zero variance; the policy does.
  static RewardSequence from_values(std::vector<double> values);

  std::size_t size() const noexcept { return mu_hat.size(); }
};

using PseudoOutcomes = RewardSequence;

struct PolicyTrace {
  std::vector<std::uint8_t> arms;      // 1 or 0 per step
  std::vector<double> partial_stats;   // running statistic after each step
  std::uint64_t first_arm_seed = 0;

  double statistic() const { return partial_stats.back(); }
};

// Arm chosen at step 1 by the fair coin keyed on `seed`.
std::uint8_t first_arm_from_seed(std::uint64_t seed) noexcept;

// Runs the tail-maximizing policy over `seq` in its stored order.
// Throws DegenerateVarianceError when sigma_hat == 0 and some reward is
// nonzero (all-zero rewards give the zero statistic), DomainError on an
// invalid lambda.
PolicyTrace run_optimal_policy(const RewardSequence& seq, double lambda, std::uint64_t seed);

// Same, reading rewards through `order` (a permutation of indices) without
// materializing the reordered sequence. Only the final statistic is kept.
double optimal_policy_statistic(const RewardSequence& seq, std::span<const std::size_t> order,
                                double lambda, std::uint64_t seed);

// Evaluates the statistic under a fixed, data-independent arm sequence.
// With all arms = 1 and lambda = 0 this is sum(mu_hat) / (sqrt(n) sigma_hat).
PolicyTrace run_fixed_policy(const RewardSequence& seq, double lambda,
                             std::span<const std::uint8_t> arms);

// 2 * Phi(-|t|).
double statistic_p_value(double t);

enum class LambdaMode { threshold, fixed, bootstrap };

struct LambdaConfig {
  double lambda = 0.0;  // used by LambdaMode::fixed
  double tau = 0.03;    // used by LambdaMode::threshold
  LambdaMode mode = LambdaMode::threshold;
  // Used by LambdaMode::bootstrap.
  std::vector<double> grid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::size_t bootstrap_reps = 200;

  void validate() const;
};

// Largest lambda with lambda * sigma_hat / ((1 - lambda) sqrt(n)) <= tau,
// i.e. tau sqrt(n) / (sigma_hat + tau sqrt(n)).
double select_lambda_threshold(double sigma_hat, std::size_t n, double tau);

// Data-driven choice. Builds `reps` null datasets by resampling the control
// group with replacement into pseudo control/treatment groups of the
// original sizes, computes their pseudo-outcomes once, then scans `grid` in
// ascending order. A lambda passes when the bootstrap p-values reject at
// level alpha at rate <= alpha and a KS uniformity test at level 0.05 does
// not reject. Returns the last lambda passing before the first failure, or
// grid.front() if the first already fails.
double select_lambda_bootstrap(const Dataset& data, std::span<const double> grid,
                               std::size_t reps, double alpha, std::uint64_t seed,
                               const CounterfactualConfig& estimator);

struct LambdaCandidate {
  double lambda = 0.0;
  double rejection_rate = 0.0;
  double uniformity_p = 1.0;
  bool passed = false;
};

struct BootstrapLambdaSelection {
  double lambda = 0.0;
  // Candidates examined, in grid order, up to and including the first failure.
  std::vector<LambdaCandidate> examined;
};

BootstrapLambdaSelection select_lambda_bootstrap_detailed(const Dataset& data,
                                                          std::span<const double> grid,
                                                          std::size_t reps, double alpha,
                                                          std::uint64_t seed,
                                                          const CounterfactualConfig& estimator);

}  // namespace pwtab
