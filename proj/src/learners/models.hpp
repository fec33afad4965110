#pragma once

// Learner internals shared by the translation units under learners/.

#include "pwtab/learners.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace pwtab::detail {

double sigmoid(double z) noexcept;
double clip_probability(double p) noexcept;
double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& pred);
double mean_log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& prob);

class ConstantModel final : public Model {
 public:
  explicit ConstantModel(double value) : value_(value) {}
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    return Eigen::VectorXd::Constant(x.rows(), value_);
  }

 private:
  double value_;
};

FittedModel fit_gbt(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    std::uint64_t seed);
FittedModel fit_linear(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
FittedModel fit_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Logistic regression coefficients (intercept first) with an L2 penalty on
// the slopes.
Eigen::VectorXd logistic_coefficients(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2);

}  // namespace pwtab::detail
