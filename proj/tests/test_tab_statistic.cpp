#include "pwtab/dgp.hpp"
#include "pwtab/dr_engine.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"
#include "pwtab/tab_statistic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

namespace pwtab {
namespace {

// Reference policy written from the definition: the statistic after step i
// is recomputed from scratch as a sum over the signed increments so far.
struct BruteTrace {
  std::vector<int> arms;
  std::vector<double> stats;
};

BruteTrace brute_force_policy(const std::vector<double>& mu, double lambda, int first_arm) {
  const double n = static_cast<double>(mu.size());
  const double m = std::accumulate(mu.begin(), mu.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : mu) ss += (v - m) * (v - m);
  const double s = std::sqrt(ss / (n - 1.0));
  BruteTrace t;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    int arm = first_arm;
    if (i > 0) arm = t.stats.back() >= 0.0 ? 1 : 0;
    t.arms.push_back(arm);
    double total = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      const double sign = t.arms[j] == 1 ? 1.0 : -1.0;
      total += sign * (lambda / (1.0 - lambda) * m / n + mu[j] / (std::sqrt(n) * s));
    }
    t.stats.push_back(total);
  }
  return t;
}

std::uint64_t seed_with_first_arm(std::uint8_t arm) {
  for (std::uint64_t s = 0;; ++s) {
    if (first_arm_from_seed(s) == arm) return s;
  }
}

TEST(Policy, HandTraceExample) {
  const RewardSequence seq = RewardSequence::from_values({1.0, -1.0, 1.0});
  EXPECT_NEAR(seq.sigma_hat, 1.1547005383792515, 1e-15);
  // Step 1 (arm 1) leaves T > 0, step 2 (arm 1) brings T to 0, and the tie
  // rule keeps arm 1 at step 3.
  const PolicyTrace one = run_optimal_policy(seq, 0.0, seed_with_first_arm(1));
  EXPECT_EQ(one.arms, (std::vector<std::uint8_t>{1, 1, 1}));
  EXPECT_NEAR(one.statistic(), 0.5, 1e-15);
  const PolicyTrace zero = run_optimal_policy(seq, 0.0, seed_with_first_arm(0));
  EXPECT_EQ(zero.arms, (std::vector<std::uint8_t>{0, 0, 1}));
  EXPECT_NEAR(zero.statistic(), 0.5, 1e-15);
}

TEST(Policy, MatchesBruteForceOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> mu(n);
    for (double& v : mu) v = rng.normal(0.1, 1.0);
    const double lambda = rng.uniform() * 0.95;
    const std::uint64_t seed = rng();
    const PolicyTrace trace = run_optimal_policy(RewardSequence::from_values(mu), lambda, seed);
    const BruteTrace oracle = brute_force_policy(mu, lambda, first_arm_from_seed(seed));
    ASSERT_EQ(trace.arms.size(), n);
    EXPECT_EQ(trace.first_arm_seed, seed);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(trace.arms[i], oracle.arms[i]) << "trial " << trial << " step " << i;
      EXPECT_NEAR(trace.partial_stats[i], oracle.stats[i], 1e-12);
    }
  }
}

TEST(Policy, ZeroRewardsGiveZero) {
  const RewardSequence seq = RewardSequence::from_values(std::vector<double>(10, 0.0));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (double lambda : {0.0, 0.5, 0.9}) {
      EXPECT_EQ(run_optimal_policy(seq, lambda, seed).statistic(), 0.0);
    }
  }
}

TEST(Policy, ConstantNonzeroRewardsAreDegenerate) {
  const RewardSequence seq = RewardSequence::from_values({0.3, 0.3, 0.3, 0.3});
  EXPECT_EQ(seq.sigma_hat, 0.0);
  EXPECT_THROW(run_optimal_policy(seq, 0.2, 1), DegenerateVarianceError);
}

TEST(Policy, RejectsBadLambda) {
  const RewardSequence seq = RewardSequence::from_values({1.0, 2.0});
  EXPECT_THROW(run_optimal_policy(seq, 1.0, 1), DomainError);
  EXPECT_THROW(run_optimal_policy(seq, -0.1, 1), DomainError);
}

TEST(Policy, ForcedAllOnesIsTheZStatistic) {
  Rng rng(5);
  std::vector<double> mu(257);
  for (double& v : mu) v = rng.normal(0.2, 3.0);
  const RewardSequence seq = RewardSequence::from_values(mu);
  const std::vector<std::uint8_t> ones(mu.size(), 1);
  const double z = std::accumulate(mu.begin(), mu.end(), 0.0) / (std::sqrt(257.0) * seq.sigma_hat);
  EXPECT_NEAR(run_fixed_policy(seq, 0.0, ones).statistic(), z, 1e-12);
}

TEST(Policy, SignChasing) {
  Rng rng(8);
  std::vector<double> mu(500);
  for (double& v : mu) v = rng.normal(0.0, 1.0);
  const RewardSequence seq = RewardSequence::from_values(mu);
  const PolicyTrace trace = run_optimal_policy(seq, 0.4, 99);
  for (std::size_t i = 1; i < mu.size(); ++i) {
    // The increment direction (+1 for arm 1, -1 for arm 0) carries the sign
    // of T_{i-1}, with ties going to arm 1.
    const double direction = trace.arms[i] ? 1.0 : -1.0;
    const double previous = trace.partial_stats[i - 1];
    EXPECT_TRUE(previous == 0.0 ? direction > 0.0 : direction * previous > 0.0) << i;
    const double step = trace.partial_stats[i] - previous;
    EXPECT_NEAR(step, direction * (0.4 / 0.6 * seq.mean / 500.0 + mu[i] / (std::sqrt(500.0) * seq.sigma_hat)),
                1e-12);
  }
}

TEST(Policy, Deterministic) {
  Rng rng(3);
  std::vector<double> mu(300);
  for (double& v : mu) v = rng.normal();
  const RewardSequence seq = RewardSequence::from_values(mu);
  const PolicyTrace a = run_optimal_policy(seq, 0.3, 42);
  const PolicyTrace b = run_optimal_policy(seq, 0.3, 42);
  EXPECT_EQ(a.arms, b.arms);
  EXPECT_EQ(a.partial_stats, b.partial_stats);
  std::vector<std::size_t> identity(mu.size());
  std::iota(identity.begin(), identity.end(), 0);
  EXPECT_EQ(optimal_policy_statistic(seq, identity, 0.3, 42), a.statistic());
}

TEST(Policy, ReorderedViewMatchesMaterializedSequence) {
  Rng rng(4);
  std::vector<double> mu(120);
  for (double& v : mu) v = rng.normal(0.3, 1.0);
  const RewardSequence seq = RewardSequence::from_values(mu);
  const std::vector<std::size_t> order = random_permutation(mu.size(), rng);
  RewardSequence reordered = seq;
  for (std::size_t i = 0; i < order.size(); ++i) reordered.mu_hat[i] = mu[order[i]];
  EXPECT_NEAR(optimal_policy_statistic(seq, order, 0.6, 7), run_optimal_policy(reordered, 0.6, 7).statistic(),
              1e-12);
}

TEST(Policy, OptimalPolicyMaximizesRejection) {
  // mu > 0: compare rejection rates at 0.05 of the optimal policy, the
  // all-ones policy and 20 fixed random policies.
  const std::size_t n = 400;
  const std::size_t reps = 2000;
  const double lambda = 0.5;
  Rng policy_rng(1234);
  std::vector<std::vector<std::uint8_t>> random_policies(20, std::vector<std::uint8_t>(n));
  for (auto& p : random_policies) {
    for (auto& arm : p) arm = policy_rng.bernoulli(0.5) ? 1 : 0;
  }
  const std::vector<std::uint8_t> ones(n, 1);
  std::size_t optimal = 0;
  std::size_t baseline = 0;
  std::vector<std::size_t> random_hits(random_policies.size(), 0);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng(derive_seed(77, {r}));
    std::vector<double> mu(n);
    for (double& v : mu) v = rng.normal(0.06, 1.0);
    const RewardSequence seq = RewardSequence::from_values(mu);
    if (statistic_p_value(run_optimal_policy(seq, lambda, rng()).statistic()) <= 0.05) ++optimal;
    if (statistic_p_value(run_fixed_policy(seq, lambda, ones).statistic()) <= 0.05) ++baseline;
    for (std::size_t k = 0; k < random_policies.size(); ++k) {
      if (statistic_p_value(run_fixed_policy(seq, lambda, random_policies[k]).statistic()) <= 0.05) {
        ++random_hits[k];
      }
    }
  }
  auto rate = [&](std::size_t hits) { return static_cast<double>(hits) / reps; };
  auto se = [&](double p) { return std::sqrt(p * (1 - p) / reps); };
  const double p_opt = rate(optimal);
  const double p_base = rate(baseline);
  EXPECT_GE(p_opt, p_base - 2.0 * std::hypot(se(p_opt), se(p_base)));
  for (std::size_t hits : random_hits) {
    const double p = rate(hits);
    EXPECT_GE(p_opt, p - 2.0 * std::hypot(se(p_opt), se(p)));
  }
}

TEST(PValue, Examples) {
  EXPECT_EQ(statistic_p_value(0.0), 1.0);
  EXPECT_NEAR(statistic_p_value(1.959964), 0.05, 1e-6);
  EXPECT_NEAR(statistic_p_value(-3.0), 0.0026997960632601890533, 1e-15);
}

TEST(LambdaThreshold, Examples) {
  EXPECT_EQ(select_lambda_threshold(1.0, 10000, 0.03), 0.75);
  EXPECT_NEAR(select_lambda_threshold(1.0, 20000, 0.03), 0.8092564301694538092, 1e-15);
  EXPECT_LT(select_lambda_threshold(1.0, 100, 1e-9), 1e-6);
  EXPECT_GT(select_lambda_threshold(1.0, 100, 1e-9), 0.0);
}

TEST(LambdaThreshold, SatisfiesDefiningEquation) {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const double sigma = std::exp(rng.uniform() * 8.0 - 4.0);
    const std::size_t n = 2 + rng.below(100000);
    const double tau = std::exp(rng.uniform() * 6.0 - 6.0);
    const double lambda = select_lambda_threshold(sigma, n, tau);
    ASSERT_GT(lambda, 0.0);
    ASSERT_LT(lambda, 1.0);
    EXPECT_NEAR(lambda * sigma / ((1.0 - lambda) * std::sqrt(static_cast<double>(n))) / tau, 1.0, 1e-12);
  }
}

TEST(LambdaThreshold, RejectsNonPositiveInputs) {
  EXPECT_THROW(select_lambda_threshold(0.0, 100, 0.03), DomainError);
  EXPECT_THROW(select_lambda_threshold(1.0, 1, 0.03), DomainError);
  EXPECT_THROW(select_lambda_threshold(1.0, 100, 0.0), DomainError);
  EXPECT_THROW(select_lambda_threshold(-1.0, 100, 0.03), DomainError);
}

CounterfactualConfig linear_estimator() {
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.known_propensity = 0.5;
  return c;
}

TEST(LambdaBootstrap, ConstantOutcomeIsDegenerate) {
  DgpConfig dgp;
  dgp.n = 200;
  dgp.seed = 3;
  Dataset data = generate(dgp);
  data.y.setConstant(4.0);
  const std::vector<double> grid{0.1};
  EXPECT_THROW(select_lambda_bootstrap(data, grid, 20, 0.05, 1, linear_estimator()), DegenerateVarianceError);
}

TEST(LambdaBootstrap, SelectedLambdaControlsSize) {
  DgpConfig dgp;
  dgp.n = 600;
  dgp.seed = 17;
  const Dataset data = generate(dgp);
  const std::vector<double> grid{0.3, 0.6, 0.9};
  const BootstrapLambdaSelection sel =
      select_lambda_bootstrap_detailed(data, grid, 200, 0.05, 5, linear_estimator());
  ASSERT_FALSE(sel.examined.empty());
  bool found = false;
  for (const auto& c : sel.examined) {
    if (c.lambda == sel.lambda && c.passed) {
      found = true;
      EXPECT_LE(c.rejection_rate, 0.05);
      EXPECT_GE(c.uniformity_p, 0.05);
    }
  }
  if (!found) EXPECT_EQ(sel.lambda, grid.front());
  EXPECT_EQ(select_lambda_bootstrap(data, grid, 200, 0.05, 5, linear_estimator()), sel.lambda);
}

TEST(LambdaBootstrap, AllFailingFallsBackToGridMinimum) {
  // lambda close to 1 lets the mean term dominate, so every bootstrap null
  // is rejected.
  DgpConfig dgp;
  dgp.n = 200;
  dgp.seed = 19;
  const Dataset data = generate(dgp);
  const std::vector<double> grid{0.99, 0.999};
  const BootstrapLambdaSelection sel =
      select_lambda_bootstrap_detailed(data, grid, 50, 0.05, 2, linear_estimator());
  EXPECT_EQ(sel.lambda, 0.99);
  ASSERT_EQ(sel.examined.size(), 1u);
  EXPECT_FALSE(sel.examined[0].passed);
}

TEST(LambdaBootstrap, NeedsControls) {
  DgpConfig dgp;
  dgp.n = 50;
  Dataset data = generate(dgp);
  std::fill(data.a.begin(), data.a.end(), 1);
  const std::vector<double> grid{0.5};
  EXPECT_THROW(select_lambda_bootstrap(data, grid, 10, 0.05, 1, linear_estimator()), DomainError);
}

TEST(LambdaConfigTest, Validation) {
  LambdaConfig c;
  c.mode = LambdaMode::fixed;
  c.lambda = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c.lambda = 0.5;
  EXPECT_NO_THROW(c.validate());
  c.mode = LambdaMode::bootstrap;
  c.grid = {0.5, 0.2};
  EXPECT_THROW(c.validate(), DomainError);
}

}  // namespace
}  // namespace pwtab
