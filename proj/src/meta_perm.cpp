#include "pwtab/meta_perm.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pwtab {

PermutationPlan PermutationPlan::make(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count == 0 || n == 0) {
    throw DomainError("PermutationPlan: need n > 0 and at least one permutation");
  }
  PermutationPlan plan;
  plan.count = count;
  plan.seed = seed;
  plan.permutations.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    Rng rng(derive_seed(seed, {b}));
    plan.permutations.push_back(random_permutation(n, rng));
  }
  return plan;
}

PermutationPlan PermutationPlan::identity(std::size_t n) {
  PermutationPlan plan;
  plan.count = 1;
  plan.permutations.emplace_back(n);
  std::iota(plan.permutations[0].begin(), plan.permutations[0].end(), std::size_t{0});
  return plan;
}

CauchyResult cauchy_combine(std::span<const double> p_values) {
  if (p_values.empty()) {
    throw DomainError("cauchy_combine: no p-values");
  }
  double total = 0.0;
  for (double p : p_values) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw DomainError("cauchy_combine: p-values must lie in [0, 1]");
    }
    const double clipped = std::clamp(p, kPValueClip, 1.0 - kPValueClip);
    // tan((0.5 - p) pi) = cot(p pi); the cotangent form keeps relative
    // accuracy near the ends.
    if (clipped < 0.25) {
      total += 1.0 / std::tan(clipped * std::numbers::pi);
    } else if (clipped > 0.75) {
      total -= 1.0 / std::tan((1.0 - clipped) * std::numbers::pi);
    } else {
      total += std::tan((0.5 - clipped) * std::numbers::pi);
    }
  }
  CauchyResult result;
  result.statistic = total / static_cast<double>(p_values.size());
  // 0.5 - atan(C) / pi, written as atan(1 / C) / pi for C > 1 to avoid
  // cancellation in the small-p tail.
  result.p_value = result.statistic > 1.0 ? std::atan(1.0 / result.statistic) / std::numbers::pi
                                          : 0.5 - std::atan(result.statistic) / std::numbers::pi;
  return result;
}

bool anti_symmetry_check(std::span<const double> p_values, double tol) {
  std::vector<double> flipped(p_values.size());
  std::transform(p_values.begin(), p_values.end(), flipped.begin(), [](double p) { return 1.0 - p; });
  const double c = cauchy_combine(p_values).statistic;
  const double c_flip = cauchy_combine(flipped).statistic;
  return std::abs(c + c_flip) <= tol * std::max(1.0, std::abs(c));
}

double resolve_lambda(const LambdaConfig& config, const PseudoOutcomes& pseudo, const Dataset* data,
                      const CounterfactualConfig* estimator, std::uint64_t seed) {
  config.validate();
  switch (config.mode) {
    case LambdaMode::fixed:
      return config.lambda;
    case LambdaMode::threshold:
      if (pseudo.sigma_hat == 0.0) {
        throw DegenerateVarianceError("pseudo-outcomes have zero variance");
      }
      return select_lambda_threshold(pseudo.sigma_hat, pseudo.size(), config.tau);
    case LambdaMode::bootstrap:
      if (data == nullptr || estimator == nullptr) {
        throw DomainError("resolve_lambda: bootstrap mode needs the dataset and estimator");
      }
      return select_lambda_bootstrap(*data, config.grid, config.bootstrap_reps, 0.05, seed, *estimator);
  }
  return config.lambda;
}

TestReport pwtab_from_pseudo(const PseudoOutcomes& pseudo, double lambda, const PermutationPlan& plan,
                             std::uint64_t seed, std::span<const double> levels) {
  if (pseudo.sigma_hat == 0.0) {
    throw DegenerateVarianceError("pseudo-outcomes have zero variance");
  }
  TestReport report;
  report.n = pseudo.size();
  report.sigma_hat = pseudo.sigma_hat;
  report.ate_estimate = pseudo.mean;
  report.lambda_used = lambda;
  report.per_perm_stats.reserve(plan.permutations.size());
  report.per_perm_p.reserve(plan.permutations.size());
  for (std::size_t b = 0; b < plan.permutations.size(); ++b) {
    const double t = optimal_policy_statistic(pseudo, plan.permutations[b], lambda, derive_seed(seed, {b}));
    report.per_perm_stats.push_back(t);
    report.per_perm_p.push_back(statistic_p_value(t));
  }
  const CauchyResult combined = cauchy_combine(report.per_perm_p);
  report.cauchy_stat = combined.statistic;
  report.p_aggregated = combined.p_value;
  for (double level : levels) report.decision_at[level] = report.p_aggregated <= level;
  return report;
}

TestReport pwtab_test(const Dataset& data, const PwtabConfig& config, const PermutationPlan& plan,
                      std::uint64_t seed, std::span<const double> levels) {
  const PseudoOutcomes pseudo = estimate_pseudo_outcomes(data, config.estimator, derive_seed(seed, {0}));
  if (pseudo.sigma_hat == 0.0) {
    throw DegenerateVarianceError("pseudo-outcomes have zero variance");
  }
  const double lambda = resolve_lambda(config.lambda, pseudo, &data, &config.estimator, derive_seed(seed, {1}));
  for (const auto& perm : plan.permutations) {
    if (perm.size() != pseudo.size()) {
      throw DomainError("pwtab_test: permutation plan does not match the sample size");
    }
  }
  return pwtab_from_pseudo(pseudo, lambda, plan, derive_seed(seed, {3}), levels);
}

TestReport pwtab_test(const Dataset& data, const PwtabConfig& config, std::uint64_t seed,
                      std::span<const double> levels) {
  const PermutationPlan plan = PermutationPlan::make(data.size(), config.permutations, derive_seed(seed, {2}));
  return pwtab_test(data, config, plan, seed, levels);
}

}  // namespace pwtab
