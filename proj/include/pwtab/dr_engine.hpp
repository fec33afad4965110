#pragma once

// Cross-fitted doubly robust pseudo-outcomes.
//
// The sample is split into K folds. For each fold, the arm-wise outcome
// regressions m0, m1 and the propensity e are trained on the other K-1 folds
// and evaluated on the held-out fold. Each subject then gets
//
//   mu_hat_i = m1(x_i) - m0(x_i)
//            + a_i (y_i - m1(x_i)) / e(x_i)
//            - (1 - a_i) (y_i - m0(x_i)) / (1 - e(x_i))

#include "pwtab/dataset.hpp"
#include "pwtab/folds.hpp"
#include "pwtab/learners.hpp"
#include "pwtab/tab_statistic.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace pwtab {

inline constexpr double kDefaultClipEps = 0.01;

struct CounterfactualConfig {
  LearnerSpec learner = LearnerSpec::make(LearnerKind::gbt_a);
  std::size_t folds = 2;
  // Set for randomized trials with a known assignment probability.
  std::optional<double> known_propensity;
  double clip_eps = kDefaultClipEps;
  // Fit the K folds on separate threads.
  bool parallel_folds = false;
};

struct FoldTraining {
  std::vector<std::size_t> m0_rows;
  std::vector<std::size_t> m1_rows;
  std::vector<std::size_t> e_rows;  // empty when the propensity is known
};

struct NuisanceFits {
  Eigen::VectorXd m0_hat;
  Eigen::VectorXd m1_hat;
  Eigen::VectorXd e_hat;  // already clipped to [clip_eps, 1 - clip_eps]
  double clip_eps = kDefaultClipEps;
  std::vector<std::size_t> fold_id;
  std::vector<FoldTraining> training;  // one entry per fold
};

NuisanceFits cross_fit(const Dataset& data, const CounterfactualConfig& config, std::uint64_t seed);

PseudoOutcomes dr_pseudo_outcomes(const Dataset& data, const NuisanceFits& fits);

// cross_fit followed by dr_pseudo_outcomes.
PseudoOutcomes estimate_pseudo_outcomes(const Dataset& data, const CounterfactualConfig& config,
                                        std::uint64_t seed);

double ate_point_estimate(const PseudoOutcomes& p);

}  // namespace pwtab
