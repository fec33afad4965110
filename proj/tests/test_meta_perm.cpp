#include "pwtab/dgp.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/meta_perm.hpp"
#include "pwtab/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pwtab {
namespace {

TEST(Cauchy, SingleValueRoundTrips) {
  for (double p : {0.05, 1e-6, 0.3, 0.5, 0.77, 0.999}) {
    const std::vector<double> v{p};
    EXPECT_NEAR(cauchy_combine(v).p_value, p, 1e-12);
  }
}

TEST(Cauchy, SymmetricInputGivesHalf) {
  const std::vector<double> v{0.5, 0.5, 0.5};
  const CauchyResult r = cauchy_combine(v);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 0.5);
}

TEST(Cauchy, TwoValueExample) {
  const std::vector<double> v{0.01, 0.5};
  const CauchyResult r = cauchy_combine(v);
  EXPECT_NEAR(r.statistic, std::tan(0.49 * std::numbers::pi) / 2.0, 1e-12);
  // mpmath, 40 digits.
  EXPECT_NEAR(r.statistic, 15.91025797688697902, 1e-11);
  EXPECT_NEAR(r.p_value, 0.019980299664053646856, 1e-14);
  EXPECT_NEAR(r.p_value, 0.0200, 5e-4);
}

TEST(Cauchy, ClipsBoundaryValues) {
  const std::vector<double> v{0.0, 1.0};
  const CauchyResult r = cauchy_combine(v);
  EXPECT_TRUE(std::isfinite(r.statistic));
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LT(r.p_value, 1.0);
  const std::vector<double> zero{0.0};
  EXPECT_NEAR(cauchy_combine(zero).p_value / kPValueClip, 1.0, 1e-12);
}

TEST(Cauchy, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(cauchy_combine(std::vector<double>{}), DomainError);
  EXPECT_THROW(cauchy_combine(std::vector<double>{0.2, std::nan("")}), DomainError);
  EXPECT_THROW(cauchy_combine(std::vector<double>{1.5}), DomainError);
}

TEST(Cauchy, AntiSymmetry) {
  EXPECT_TRUE(anti_symmetry_check(std::vector<double>{0.2, 0.3}));
  const CauchyResult a = cauchy_combine(std::vector<double>{0.2, 0.3});
  const CauchyResult b = cauchy_combine(std::vector<double>{0.8, 0.7});
  EXPECT_NEAR(a.statistic, -b.statistic, 1e-12);
  EXPECT_TRUE(anti_symmetry_check(std::vector<double>{0.5}));
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng.below(30));
    for (double& p : v) p = 0.01 + 0.98 * rng.uniform();
    EXPECT_TRUE(anti_symmetry_check(v));
  }
}

TEST(Cauchy, InvariantToRelabelling) {
  Rng rng(4);
  std::vector<double> v(25);
  for (double& p : v) p = rng.uniform_open();
  const double before = cauchy_combine(v).p_value;
  std::reverse(v.begin(), v.end());
  EXPECT_NEAR(cauchy_combine(v).p_value, before, 1e-15);
}

TEST(Plan, BijectionsAndReproducible) {
  const PermutationPlan plan = PermutationPlan::make(50, 25, 7);
  ASSERT_EQ(plan.permutations.size(), 25u);
  EXPECT_EQ(plan.count, 25u);
  for (const auto& perm : plan.permutations) {
    std::vector<std::size_t> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) EXPECT_EQ(sorted[i], i);
  }
  EXPECT_EQ(PermutationPlan::make(50, 25, 7).permutations, plan.permutations);
  EXPECT_NE(plan.permutations[0], plan.permutations[1]);
  const PermutationPlan id = PermutationPlan::identity(4);
  EXPECT_EQ(id.permutations, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}}));
}

PseudoOutcomes sample_pseudo(std::size_t n, double mean, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(mean, 1.0);
  return RewardSequence::from_values(v);
}

TEST(FromPseudo, IdentityPlanEqualsSingleRun) {
  const PseudoOutcomes p = sample_pseudo(300, 0.1, 1);
  const TestReport r = pwtab_from_pseudo(p, 0.4, PermutationPlan::identity(300), 9);
  const double t = run_optimal_policy(p, 0.4, derive_seed(9, {0})).statistic();
  ASSERT_EQ(r.per_perm_p.size(), 1u);
  EXPECT_EQ(r.per_perm_stats[0], t);
  EXPECT_NEAR(r.p_aggregated, statistic_p_value(t), 1e-12);
  EXPECT_EQ(r.decision_at.size(), kReportLevels.size());
}

TEST(FromPseudo, PermutationsOnlyReorder) {
  const PseudoOutcomes p = sample_pseudo(200, 0.0, 2);
  const PermutationPlan plan = PermutationPlan::make(200, 5, 3);
  const TestReport r = pwtab_from_pseudo(p, 0.3, plan, 4);
  EXPECT_EQ(r.sigma_hat, p.sigma_hat);
  for (std::size_t b = 0; b < 5; ++b) {
    RewardSequence reordered = p;
    for (std::size_t i = 0; i < 200; ++i) reordered.mu_hat[i] = p.mu_hat[plan.permutations[b][i]];
    EXPECT_NEAR(r.per_perm_stats[b], run_optimal_policy(reordered, 0.3, derive_seed(4, {b})).statistic(), 1e-12);
  }
  EXPECT_GT(*std::max_element(r.per_perm_p.begin(), r.per_perm_p.end()) -
                *std::min_element(r.per_perm_p.begin(), r.per_perm_p.end()),
            0.0);
}

TEST(FromPseudo, ConstantPseudoOutcomesAreDegenerate) {
  const PseudoOutcomes p = RewardSequence::from_values(std::vector<double>(20, 1.5));
  EXPECT_THROW(pwtab_from_pseudo(p, 0.3, PermutationPlan::make(20, 3, 1), 1), DegenerateVarianceError);
}

TEST(Pipeline, ReproducibleAndConsistent) {
  DgpConfig dgp;
  dgp.f_kind = DgpKind::III;
  dgp.g_kind = DgpKind::III;
  dgp.sigma_eps = 0.6;
  dgp.n = 1000;
  dgp.seed = 12;
  const Dataset d = generate(dgp);
  PwtabConfig config;
  config.estimator.learner = LearnerSpec::make(LearnerKind::gbt_b);
  config.estimator.known_propensity = 0.5;
  const TestReport a = pwtab_test(d, config, 77);
  const TestReport b = pwtab_test(d, config, 77);
  EXPECT_EQ(a.per_perm_stats, b.per_perm_stats);
  EXPECT_EQ(a.p_aggregated, b.p_aggregated);
  ASSERT_EQ(a.per_perm_p.size(), kDefaultPermutations);
  EXPECT_GT(a.p_aggregated, 0.0);
  EXPECT_LT(a.p_aggregated, 1.0);
  EXPECT_NEAR(a.lambda_used, select_lambda_threshold(a.sigma_hat, 1000, 0.03), 1e-15);
  const PseudoOutcomes p = estimate_pseudo_outcomes(d, config.estimator, derive_seed(77, {0}));
  EXPECT_EQ(a.sigma_hat, p.sigma_hat);
  EXPECT_EQ(a.ate_estimate, p.mean);

  const TestReport single = pwtab_test(d, config, PermutationPlan::identity(1000), 77);
  EXPECT_NEAR(single.p_aggregated, statistic_p_value(single.per_perm_stats[0]), 1e-12);

  config.lambda.mode = LambdaMode::fixed;
  config.lambda.lambda = 0.2;
  EXPECT_EQ(pwtab_test(d, config, 77).lambda_used, 0.2);
}

TEST(Pipeline, DegenerateOutcomes) {
  DgpConfig dgp;
  dgp.n = 200;
  Dataset d = generate(dgp);
  d.y.setConstant(3.0);
  PwtabConfig config;
  config.estimator.learner = LearnerSpec::make(LearnerKind::linear);
  EXPECT_THROW(pwtab_test(d, config, 1), DegenerateVarianceError);
}

TEST(Pipeline, NullRejectionRateSmall) {
  // Smoke-level null check with the linear learner; the full-size check is
  // part of the acceptance suite.
  PwtabConfig config;
  config.estimator.learner = LearnerSpec::make(LearnerKind::linear);
  config.estimator.known_propensity = 0.5;
  const std::size_t reps = 200;
  std::size_t rejections = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    DgpConfig dgp;
    dgp.n = 1000;
    dgp.seed = derive_seed(500, {r});
    if (pwtab_test(generate(dgp), config, r).p_aggregated <= 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_LE(rate, 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps));
}

}  // namespace
}  // namespace pwtab
