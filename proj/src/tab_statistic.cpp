#include "pwtab/tab_statistic.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/normal.hpp"
#include "pwtab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwtab {

RewardSequence RewardSequence::from_values(std::vector<double> values) {
  if (values.size() < 2) {
    throw DomainError("RewardSequence: need at least two rewards");
  }
  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DomainError("RewardSequence: non-finite reward");
    }
    total += v;
  }
  const double n = static_cast<double>(values.size());
  const bool constant = std::all_of(values.begin(), values.end(),
                                    [&](double v) { return v == values.front(); });
  const double m = constant ? values.front() : total / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);

  RewardSequence seq;
  seq.mu_hat = std::move(values);
  seq.mean = m;
  seq.sigma_hat = std::sqrt(ss / (n - 1.0));
  return seq;
}

std::uint8_t first_arm_from_seed(std::uint64_t seed) noexcept {
  Rng rng(seed);
  return static_cast<std::uint8_t>(rng() >> 63);
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw DomainError("bandit statistic: lambda must lie in [0, 1)");
  }
}

// Per-step constants of the weighted statistic. `zero` marks the all-zero
// reward sequence, whose statistic is identically zero.
struct StepScale {
  double mean_step = 0.0;
  double inv_scale = 0.0;
  bool zero = false;
};

StepScale step_scale(const RewardSequence& seq, double lambda) {
  check_lambda(lambda);
  if (seq.size() < 2) {
    throw DomainError("bandit statistic: need at least two rewards");
  }
  StepScale scale;
  if (seq.sigma_hat == 0.0) {
    const bool all_zero =
        std::all_of(seq.mu_hat.begin(), seq.mu_hat.end(), [](double v) { return v == 0.0; });
    if (!all_zero) {
      throw DegenerateVarianceError("bandit statistic: zero variance in the rewards");
    }
    scale.zero = true;
    return scale;
  }
  if (!(seq.sigma_hat > 0.0) || !std::isfinite(seq.sigma_hat)) {
    throw DegenerateVarianceError("bandit statistic: sigma_hat must be positive");
  }
  const double n = static_cast<double>(seq.size());
  scale.mean_step = lambda / (1.0 - lambda) * seq.mean / n;
  scale.inv_scale = 1.0 / (std::sqrt(n) * seq.sigma_hat);
  return scale;
}

}  // namespace

PolicyTrace run_optimal_policy(const RewardSequence& seq, double lambda, std::uint64_t seed) {
  const StepScale scale = step_scale(seq, lambda);
  const std::size_t n = seq.size();

  PolicyTrace trace;
  trace.first_arm_seed = seed;
  trace.arms.resize(n);
  trace.partial_stats.resize(n);

  std::uint8_t arm = first_arm_from_seed(seed);
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      arm = t >= 0.0 ? 1 : 0;
    }
    if (!scale.zero) {
      const double increment = scale.mean_step + seq.mu_hat[i] * scale.inv_scale;
      t += arm ? increment : -increment;
    }
    trace.arms[i] = arm;
    trace.partial_stats[i] = t;
  }
  return trace;
}

double optimal_policy_statistic(const RewardSequence& seq, std::span<const std::size_t> order,
                                double lambda, std::uint64_t seed) {
  const StepScale scale = step_scale(seq, lambda);
  if (order.size() != seq.size()) {
    throw DomainError("optimal_policy_statistic: ordering length mismatch");
  }
  if (scale.zero) {
    return 0.0;
  }
  std::uint8_t arm = first_arm_from_seed(seed);
  double t = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0) {
      arm = t >= 0.0 ? 1 : 0;
    }
    const double increment = scale.mean_step + seq.mu_hat[order[i]] * scale.inv_scale;
    t += arm ? increment : -increment;
  }
  return t;
}

PolicyTrace run_fixed_policy(const RewardSequence& seq, double lambda,
                             std::span<const std::uint8_t> arms) {
  const StepScale scale = step_scale(seq, lambda);
  if (arms.size() != seq.size()) {
    throw DomainError("run_fixed_policy: arm sequence length mismatch");
  }
  PolicyTrace trace;
  trace.arms.assign(arms.begin(), arms.end());
  trace.partial_stats.resize(arms.size());
  double t = 0.0;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (!scale.zero) {
      const double increment = scale.mean_step + seq.mu_hat[i] * scale.inv_scale;
      t += arms[i] ? increment : -increment;
    }
    trace.partial_stats[i] = t;
  }
  return trace;
}

double statistic_p_value(double t) {
  if (std::isnan(t)) {
    throw DomainError("statistic_p_value: NaN statistic");
  }
  return 2.0 * normal_cdf(-std::abs(t));
}

void LambdaConfig::validate() const {
  switch (mode) {
    case LambdaMode::fixed:
      check_lambda(lambda);
      break;
    case LambdaMode::threshold:
      if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw DomainError("LambdaConfig: tau must be positive");
      }
      break;
    case LambdaMode::bootstrap:
      if (grid.empty() || bootstrap_reps == 0) {
        throw DomainError("LambdaConfig: bootstrap mode needs a grid and reps > 0");
      }
      for (std::size_t i = 0; i < grid.size(); ++i) {
        check_lambda(grid[i]);
        if (i > 0 && !(grid[i] > grid[i - 1])) {
          throw DomainError("LambdaConfig: bootstrap grid must be strictly ascending");
        }
      }
      break;
  }
}

double select_lambda_threshold(double sigma_hat, std::size_t n, double tau) {
  if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat) || n < 2 || !(tau > 0.0) ||
      !std::isfinite(tau)) {
    throw DomainError("select_lambda_threshold: need sigma_hat > 0, n >= 2, tau > 0");
  }
  const double scaled = tau * std::sqrt(static_cast<double>(n));
  return scaled / (sigma_hat + scaled);
}

}  // namespace pwtab
