#pragma once

// Permuted weighted bandit test: the weighted statistic is evaluated on B
// random reorderings of the pseudo-outcomes and the per-ordering p-values
// are merged with the Cauchy combination
//
//   C = (1/B) sum_b tan((0.5 - p_b) pi),   p = 0.5 - arctan(C) / pi.

#include "pwtab/dr_engine.hpp"
#include "pwtab/tab_statistic.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace pwtab {

inline constexpr std::size_t kDefaultPermutations = 25;
inline constexpr double kPValueClip = 1e-15;

struct PermutationPlan {
  std::size_t count = kDefaultPermutations;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> permutations;

  // `count` independent uniform shuffles of 0..n-1.
  static PermutationPlan make(std::size_t n, std::size_t count, std::uint64_t seed);
  // A single identity ordering.
  static PermutationPlan identity(std::size_t n);
};

struct CauchyResult {
  double statistic = 0.0;
  double p_value = 0.5;
};

// p-values are clipped to [1e-15, 1 - 1e-15] first. Throws DomainError on an
// empty or non-finite input.
CauchyResult cauchy_combine(std::span<const double> p_values);

// True when combining 1 - p negates the Cauchy statistic to within `tol`.
bool anti_symmetry_check(std::span<const double> p_values, double tol = 1e-12);

struct TestReport {
  std::vector<double> per_perm_stats;
  std::vector<double> per_perm_p;
  double cauchy_stat = 0.0;
  double p_aggregated = 1.0;
  double lambda_used = 0.0;
  double sigma_hat = 0.0;
  double ate_estimate = 0.0;
  std::size_t n = 0;
  std::map<double, bool> decision_at;
};

inline const std::vector<double> kReportLevels{0.01, 0.05, 0.1};

// Resolves lambda for the given pseudo-outcomes. Bootstrap mode needs the
// raw data and estimator; pass nullptrs otherwise.
double resolve_lambda(const LambdaConfig& config, const PseudoOutcomes& pseudo,
                      const Dataset* data, const CounterfactualConfig* estimator,
                      std::uint64_t seed);

// The permutation stage alone, on precomputed pseudo-outcomes. The first-arm
// coin of ordering b is keyed on derive_seed(seed, {b}).
TestReport pwtab_from_pseudo(const PseudoOutcomes& pseudo, double lambda,
                             const PermutationPlan& plan, std::uint64_t seed,
                             std::span<const double> levels = kReportLevels);

struct PwtabConfig {
  CounterfactualConfig estimator;
  LambdaConfig lambda;
  std::size_t permutations = kDefaultPermutations;
};

// Full pipeline: cross-fit, pseudo-outcomes, sigma_hat, lambda, B permuted
// runs, Cauchy aggregation. Reproducible from (data, config, seed).
TestReport pwtab_test(const Dataset& data, const PwtabConfig& config, std::uint64_t seed,
                      std::span<const double> levels = kReportLevels);

// As above with a caller-supplied ordering plan (config.permutations ignored).
TestReport pwtab_test(const Dataset& data, const PwtabConfig& config, const PermutationPlan& plan,
                      std::uint64_t seed, std::span<const double> levels = kReportLevels);

}  // namespace pwtab
