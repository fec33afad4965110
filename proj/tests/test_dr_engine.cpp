#include "pwtab/dgp.hpp"
#include "pwtab/dr_engine.hpp"
#include "pwtab/errors.hpp"
#include "pwtab/folds.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pwtab {
namespace {

Dataset make_data(DgpKind f, DgpKind g, double sigma_eps, std::size_t n, std::uint64_t seed) {
  DgpConfig c;
  c.f_kind = f;
  c.g_kind = g;
  c.sigma_eps = sigma_eps;
  c.n = n;
  c.seed = seed;
  return generate(c);
}

// Nuisances equal to the true regression functions of the DGP.
NuisanceFits oracle_fits(const Dataset& d, DgpKind f, DgpKind g, double e) {
  const auto n = static_cast<Eigen::Index>(d.size());
  NuisanceFits fits;
  fits.m0_hat.resize(n);
  fits.m1_hat.resize(n);
  fits.e_hat = Eigen::VectorXd::Constant(n, e);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x1 = d.x(i, 0);
    const double x2 = d.x(i, 1);
    fits.m0_hat(i) = baseline_function(f, x1, x2);
    fits.m1_hat(i) = fits.m0_hat(i) + effect_function(g, x1, x2);
  }
  return fits;
}

TEST(Folds, NearEqualPartition) {
  const std::vector<std::size_t> fold = make_folds(103, 5, 9);
  std::vector<std::size_t> sizes(5, 0);
  for (std::size_t f : fold) {
    ASSERT_LT(f, 5u);
    ++sizes[f];
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{21, 21, 21, 20, 20}));
  EXPECT_EQ(fold.size(), 103u);
  EXPECT_EQ(make_folds(103, 5, 9), fold);
  EXPECT_NE(make_folds(103, 5, 10), fold);
}

TEST(Folds, StratifiedFoldsBalanceArms) {
  std::vector<std::uint8_t> labels(50, 0);
  for (std::size_t i = 0; i < 7; ++i) labels[i] = 1;
  const std::vector<std::size_t> fold = make_stratified_folds(labels, 3, 1);
  std::vector<std::size_t> treated(3, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) treated[fold[i]] += labels[i];
  for (std::size_t t : treated) {
    EXPECT_GE(t, 2u);
    EXPECT_LE(t, 3u);
  }
}

TEST(CrossFit, KnownPropensityShortcut) {
  const Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 100, 3);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.known_propensity = 0.5;
  const NuisanceFits fits = cross_fit(d, c, 1);
  for (Eigen::Index i = 0; i < fits.e_hat.size(); ++i) EXPECT_EQ(fits.e_hat(i), 0.5);
  ASSERT_EQ(fits.training.size(), 2u);
  for (const auto& t : fits.training) EXPECT_TRUE(t.e_rows.empty());
  // Each fold's outcome models are trained on the complementary fold.
  for (std::size_t f = 0; f < 2; ++f) {
    std::vector<std::size_t> rows = fits.training[f].m0_rows;
    rows.insert(rows.end(), fits.training[f].m1_rows.begin(), fits.training[f].m1_rows.end());
    std::sort(rows.begin(), rows.end());
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (fits.fold_id[i] != f) expected.push_back(i);
    }
    EXPECT_EQ(rows, expected);
  }
}

TEST(CrossFit, OutOfFoldPurity) {
  const Dataset d = make_data(DgpKind::II, DgpKind::II, 0.5, 300, 4);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::gbt_b);
  c.folds = 3;
  const NuisanceFits fits = cross_fit(d, c, 2);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto& t = fits.training[f];
    for (const auto* rows : {&t.m0_rows, &t.m1_rows, &t.e_rows}) {
      ASSERT_FALSE(rows->empty());
      for (std::size_t i : *rows) EXPECT_NE(fits.fold_id[i], f);
    }
    for (std::size_t i : t.m0_rows) EXPECT_EQ(d.a[i], 0);
    for (std::size_t i : t.m1_rows) EXPECT_EQ(d.a[i], 1);
  }
}

TEST(CrossFit, ConstantOutcome) {
  Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 120, 5);
  d.y.setConstant(-2.5);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  const NuisanceFits fits = cross_fit(d, c, 1);
  for (Eigen::Index i = 0; i < fits.m0_hat.size(); ++i) {
    EXPECT_NEAR(fits.m0_hat(i), -2.5, 1e-6);
    EXPECT_NEAR(fits.m1_hat(i), -2.5, 1e-6);
  }
  EXPECT_THROW(
      {
        const PseudoOutcomes p = dr_pseudo_outcomes(d, fits);
        if (p.sigma_hat == 0.0) throw DegenerateVarianceError("zero variance");
      },
      DegenerateVarianceError);
}

TEST(CrossFit, PropensityIsClipped) {
  // Treatment almost determined by x1, so a fitted propensity approaches 0/1.
  Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 400, 6);
  for (std::size_t i = 0; i < d.size(); ++i) d.a[i] = d.x(static_cast<Eigen::Index>(i), 0) > 0.0 ? 1 : 0;
  d.a[0] = 1 - d.a[0];
  d.a[1] = 1 - d.a[1];
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.clip_eps = 0.05;
  const NuisanceFits fits = cross_fit(d, c, 3);
  EXPECT_GE(fits.e_hat.minCoeff(), 0.05);
  EXPECT_LE(fits.e_hat.maxCoeff(), 0.95);
  EXPECT_TRUE(std::isfinite(dr_pseudo_outcomes(d, fits).sigma_hat));
}

TEST(CrossFit, UsesSuppliedFoldsAndRecoversFromOneArmFolds) {
  Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 60, 7);
  // Only four treated subjects: random folds often miss an arm.
  std::fill(d.a.begin(), d.a.end(), 0);
  for (std::size_t i : {3u, 17u, 40u, 55u}) d.a[i] = 1;
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.folds = 4;
  c.known_propensity = 0.1;
  const NuisanceFits fits = cross_fit(d, c, 11);
  for (const auto& t : fits.training) EXPECT_FALSE(t.m1_rows.empty());

  std::vector<std::size_t> given(60);
  for (std::size_t i = 0; i < 60; ++i) given[i] = i % 2;
  d.fold_id = given;
  for (std::size_t i : {3u, 17u, 40u, 55u}) d.a[i] = 0;
  for (std::size_t i : {2u, 4u, 5u, 7u}) d.a[i] = 1;
  c.folds = 2;
  EXPECT_EQ(cross_fit(d, c, 1).fold_id, given);
}

TEST(CrossFit, RejectsBadConfig) {
  const Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 10, 1);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.folds = 6;
  EXPECT_THROW(cross_fit(d, c, 1), DomainError);
  c.folds = 1;
  EXPECT_THROW(cross_fit(d, c, 1), DomainError);
  c.folds = 2;
  c.known_propensity = 1.0;
  EXPECT_THROW(cross_fit(d, c, 1), DomainError);
}

TEST(CrossFit, ParallelFoldsMatchSequential) {
  const Dataset d = make_data(DgpKind::III, DgpKind::III, 0.6, 400, 8);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::gbt_b);
  const NuisanceFits a = cross_fit(d, c, 4);
  c.parallel_folds = true;
  const NuisanceFits b = cross_fit(d, c, 4);
  EXPECT_EQ(a.m0_hat, b.m0_hat);
  EXPECT_EQ(a.m1_hat, b.m1_hat);
  EXPECT_EQ(a.e_hat, b.e_hat);
}

TEST(PseudoOutcomesTest, PlugInArithmetic) {
  Dataset d;
  d.x = Eigen::MatrixXd::Zero(2, 1);
  d.y = Eigen::Vector2d(3.0, 5.0);
  d.a = {1, 0};
  NuisanceFits fits;
  fits.m0_hat = Eigen::Vector2d::Zero();
  fits.m1_hat = Eigen::Vector2d::Zero();
  fits.e_hat = Eigen::Vector2d::Constant(0.5);
  const PseudoOutcomes p = dr_pseudo_outcomes(d, fits);
  EXPECT_EQ(p.mu_hat[0], 6.0);
  EXPECT_EQ(p.mu_hat[1], -10.0);
  EXPECT_EQ(ate_point_estimate(p), -2.0);
}

TEST(PseudoOutcomesTest, NoiselessCorrectModelsIgnorePropensity) {
  const Dataset d = make_data(DgpKind::II, DgpKind::IV, 0.0, 200, 9);
  for (double e : {0.5, 0.2, 0.9}) {
    const NuisanceFits fits = oracle_fits(d, DgpKind::II, DgpKind::IV, e);
    const PseudoOutcomes p = dr_pseudo_outcomes(d, fits);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      EXPECT_NEAR(p.mu_hat[i], fits.m1_hat(r) - fits.m0_hat(r), 1e-12);
    }
  }
}

TEST(PseudoOutcomesTest, OracleNuisancesRecoverAte) {
  const Dataset d = make_data(DgpKind::III, DgpKind::III, 0.6, 20000, 10);
  const PseudoOutcomes p = dr_pseudo_outcomes(d, oracle_fits(d, DgpKind::III, DgpKind::III, 0.5));
  const double se = p.sigma_hat / std::sqrt(20000.0);
  EXPECT_NEAR(p.mean, 2.0 / 110.0, 3.0 * se);
  double ss = 0.0;
  for (double v : p.mu_hat) ss += (v - p.mean) * (v - p.mean);
  EXPECT_NEAR(p.sigma_hat * p.sigma_hat, ss / 19999.0, 1e-12 * ss);
}

TEST(PseudoOutcomesTest, NullEstimateIsSmall) {
  const Dataset d = make_data(DgpKind::I, DgpKind::I, 0.5, 20000, 11);
  CounterfactualConfig c;
  c.learner = LearnerSpec::make(LearnerKind::linear);
  c.known_propensity = 0.5;
  const PseudoOutcomes p = estimate_pseudo_outcomes(d, c, 2);
  EXPECT_LE(std::abs(ate_point_estimate(p)), 3.0 * p.sigma_hat / std::sqrt(20000.0));
}

TEST(PseudoOutcomesTest, AllTreatedStillDefined) {
  Dataset d;
  d.x = Eigen::MatrixXd::Zero(3, 1);
  d.y = Eigen::Vector3d(1.0, 2.0, 4.0);
  d.a = {1, 1, 1};
  NuisanceFits fits;
  fits.m0_hat = Eigen::Vector3d(0.5, 0.5, 0.5);
  fits.m1_hat = Eigen::Vector3d(1.0, 1.0, 1.0);
  fits.e_hat = Eigen::Vector3d::Constant(0.8);
  const PseudoOutcomes p = dr_pseudo_outcomes(d, fits);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i) expected += 0.5 + (d.y(i) - 1.0) / 0.8;
  EXPECT_NEAR(ate_point_estimate(p), expected / 3.0, 1e-15);
}

TEST(PseudoOutcomesTest, DoubleRobustnessSmall) {
  // Wrong m (zero) with right e, and right m with wrong e (0.3 vs 0.5).
  const std::size_t reps = 60;
  std::vector<double> wrong_m;
  std::vector<double> wrong_e;
  for (std::size_t r = 0; r < reps; ++r) {
    const Dataset d = make_data(DgpKind::II, DgpKind::II, 0.5, 2000, 100 + r);
    NuisanceFits zero_m = oracle_fits(d, DgpKind::II, DgpKind::II, 0.5);
    zero_m.m0_hat.setZero();
    zero_m.m1_hat.setZero();
    wrong_m.push_back(dr_pseudo_outcomes(d, zero_m).mean);
    wrong_e.push_back(dr_pseudo_outcomes(d, oracle_fits(d, DgpKind::II, DgpKind::II, 0.3)).mean);
  }
  for (const auto* est : {&wrong_m, &wrong_e}) {
    const double m = std::accumulate(est->begin(), est->end(), 0.0) / reps;
    double ss = 0.0;
    for (double v : *est) ss += (v - m) * (v - m);
    const double se = std::sqrt(ss / (reps - 1) / reps);
    EXPECT_LE(std::abs(m), 4.0 * se);
  }
}

}  // namespace
}  // namespace pwtab
