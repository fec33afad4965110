#pragma once

// Supervised learners behind one fit/predict contract.
//
//   gbt_a, gbt_b  gradient-boosted regression trees, exact greedy splits;
//                 two default profiles (deep/slow and shallow/fast)
//   linear        least squares with optional ridge penalty
//   logistic      L2-regularized logistic regression (IRLS)
//   stacking      inner-cross-fitted base learners + linear/logistic meta model
//
// Regression uses squared error; the binary_probability task uses log-loss
// and clips predictions to [1e-6, 1 - 1e-6].

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace pwtab {

enum class LearnerKind { gbt_a, gbt_b, linear, logistic, stacking };
enum class LearnerTask { regression, binary_probability };

inline constexpr double kProbabilityFloor = 1e-6;

struct Hyperparams {
  std::size_t trees = 200;
  std::size_t depth = 6;
  double learning_rate = 0.05;
  std::size_t min_leaf = 20;
  double subsample = 1.0;
  double l2 = 0.0;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::gbt_a;
  LearnerTask task = LearnerTask::regression;
  Hyperparams hyper;
  std::vector<LearnerSpec> base_specs;  // stacking only
  std::size_t inner_folds = 2;          // stacking only

  // Profile defaults for `kind`.
  static LearnerSpec make(LearnerKind kind, LearnerTask task = LearnerTask::regression);

  // The same learner retargeted at `task`; linear and logistic swap into
  // each other, stacking retargets its bases.
  LearnerSpec for_task(LearnerTask task) const;

  void validate() const;
};

LearnerKind parse_learner_kind(std::string_view name);
std::string to_string(LearnerKind kind);

class Model {
 public:
  virtual ~Model() = default;
  virtual Eigen::VectorXd predict(const Eigen::MatrixXd& x) const = 0;
};

struct FittedModel {
  std::shared_ptr<const Model> model;
  LearnerTask task = LearnerTask::regression;
  // Rows of the caller's dataset the model was trained on.
  std::vector<std::size_t> train_row_ids;
  // Training loss after the initial constant and after each boosting round
  // (GBT); a single final value for the other learners.
  std::vector<double> loss_curve;
};

// Trains `spec` on (x, y). Deterministic given `seed`. train_row_ids is
// filled with 0..n-1; callers that fit on a subset overwrite it.
FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                std::uint64_t seed);

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& x);

FittedModel fit_stacking(const std::vector<LearnerSpec>& base_specs, LearnerTask task,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::size_t inner_folds, std::uint64_t seed);

// Plain least-squares coefficients with intercept first: [b0, b1, ..., bd].
// Falls back to a 1e-8 ridge when the centered Gram matrix is singular.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2 = 0.0);

}  // namespace pwtab
