#include "pwtab/dr_engine.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"
#include "pwtab/stats.hpp"
#include "pwtab/tab_statistic.hpp"

#include <numeric>

namespace pwtab {

namespace {
constexpr double kUniformityLevel = 0.05;
}

BootstrapLambdaSelection select_lambda_bootstrap_detailed(const Dataset& data,
                                                          std::span<const double> grid,
                                                          std::size_t reps, double alpha,
                                                          std::uint64_t seed,
                                                          const CounterfactualConfig& estimator) {
  if (grid.empty()) {
    throw DomainError("select_lambda_bootstrap: empty grid");
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > 0.0 && grid[j] < 1.0) || (j > 0 && !(grid[j] > grid[j - 1]))) {
      throw DomainError("select_lambda_bootstrap: grid must be ascending inside (0, 1)");
    }
  }
  if (reps < 2 || !(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("select_lambda_bootstrap: need reps >= 2 and alpha in (0, 1)");
  }
  std::vector<std::size_t> control;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.a[i] == 0) control.push_back(i);
  }
  if (control.empty()) {
    throw DomainError("select_lambda_bootstrap: empty control group");
  }
  const std::size_t n = data.size();
  const std::size_t n0 = control.size();

  CounterfactualConfig boot_estimator = estimator;
  boot_estimator.parallel_folds = false;

  // Null datasets: every subject is a control draw, relabelled into arms of
  // the original sizes.
  std::vector<PseudoOutcomes> pseudo;
  pseudo.reserve(reps);
  for (std::size_t b = 0; b < reps; ++b) {
    Rng rng(derive_seed(seed, {0, b}));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = control[rng.below(n0)];
    Dataset boot = Dataset::subset(data, rows);
    for (std::size_t i = 0; i < n; ++i) boot.a[i] = i < n0 ? 0 : 1;
    PseudoOutcomes p = estimate_pseudo_outcomes(boot, boot_estimator, derive_seed(seed, {1, b}));
    if (p.sigma_hat == 0.0) {
      throw DegenerateVarianceError("select_lambda_bootstrap: bootstrap pseudo-outcomes have zero variance");
    }
    pseudo.push_back(std::move(p));
  }

  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  BootstrapLambdaSelection selection;
  selection.lambda = grid.front();
  std::vector<double> p_values(reps);
  for (double lambda : grid) {
    std::size_t rejections = 0;
    for (std::size_t b = 0; b < reps; ++b) {
      const double t = optimal_policy_statistic(pseudo[b], identity, lambda, derive_seed(seed, {2, b}));
      p_values[b] = statistic_p_value(t);
      if (p_values[b] <= alpha) ++rejections;
    }
    LambdaCandidate candidate;
    candidate.lambda = lambda;
    candidate.rejection_rate = static_cast<double>(rejections) / static_cast<double>(reps);
    candidate.uniformity_p = ks_uniform_test(p_values).p_value;
    candidate.passed = candidate.rejection_rate <= alpha && candidate.uniformity_p >= kUniformityLevel;
    selection.examined.push_back(candidate);
    if (!candidate.passed) break;
    selection.lambda = lambda;
  }
  return selection;
}

double select_lambda_bootstrap(const Dataset& data, std::span<const double> grid, std::size_t reps,
                               double alpha, std::uint64_t seed,
                               const CounterfactualConfig& estimator) {
  return select_lambda_bootstrap_detailed(data, grid, reps, alpha, seed, estimator).lambda;
}

}  // namespace pwtab
