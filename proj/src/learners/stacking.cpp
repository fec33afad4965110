#include "models.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/folds.hpp"
#include "pwtab/rng.hpp"

#include <cmath>

namespace pwtab {

namespace {

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(rows[i]);
  return out;
}

// Meta features: base predictions, on the logit scale for probabilities.
Eigen::MatrixXd meta_features(const Eigen::MatrixXd& base_preds, LearnerTask task) {
  if (task == LearnerTask::regression) return base_preds;
  return base_preds.unaryExpr([](double p) {
    const double q = detail::clip_probability(p);
    return std::log(q / (1.0 - q));
  });
}

class StackingModel final : public Model {
 public:
  StackingModel(std::vector<FittedModel> bases, Eigen::VectorXd meta_coef, LearnerTask task)
      : bases_(std::move(bases)), meta_coef_(std::move(meta_coef)), task_(task) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::MatrixXd preds(x.rows(), static_cast<Eigen::Index>(bases_.size()));
    for (std::size_t b = 0; b < bases_.size(); ++b) {
      preds.col(static_cast<Eigen::Index>(b)) = pwtab::predict(bases_[b], x);
    }
    const Eigen::MatrixXd features = meta_features(preds, task_);
    const Eigen::Index d = features.cols();
    Eigen::VectorXd out = (features * meta_coef_.tail(d)).array() + meta_coef_(0);
    if (task_ == LearnerTask::binary_probability) {
      out = out.unaryExpr([](double z) { return detail::clip_probability(detail::sigmoid(z)); });
    }
    return out;
  }

 private:
  std::vector<FittedModel> bases_;
  Eigen::VectorXd meta_coef_;
  LearnerTask task_;
};

}  // namespace

FittedModel fit_stacking(const std::vector<LearnerSpec>& base_specs, LearnerTask task,
                         const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         std::size_t inner_folds, std::uint64_t seed) {
  if (base_specs.empty()) {
    throw DomainError("fit_stacking: no base learners");
  }
  if (inner_folds < 2) {
    throw DomainError("fit_stacking: inner_folds must be >= 2");
  }
  if (x.rows() != y.size() || static_cast<std::size_t>(y.size()) < inner_folds) {
    throw DomainError("fit_stacking: need matching X, y with at least inner_folds rows");
  }
  const Eigen::Index n = y.size();
  const auto n_bases = static_cast<Eigen::Index>(base_specs.size());

  const std::vector<std::size_t> fold = make_folds(static_cast<std::size_t>(n), inner_folds,
                                                   derive_seed(seed, {0}));
  Eigen::MatrixXd oof(n, n_bases);
  for (std::size_t k = 0; k < inner_folds; ++k) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> held;
    for (Eigen::Index i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == k ? held : train).push_back(i);
    }
    const Eigen::MatrixXd x_train = select_rows(x, train);
    const Eigen::VectorXd y_train = select_rows(y, train);
    const Eigen::MatrixXd x_held = select_rows(x, held);
    for (Eigen::Index b = 0; b < n_bases; ++b) {
      const LearnerSpec base = base_specs[static_cast<std::size_t>(b)].for_task(task);
      const FittedModel model =
          fit(base, x_train, y_train, derive_seed(seed, {1, static_cast<std::uint64_t>(b), k}));
      const Eigen::VectorXd pred = pwtab::predict(model, x_held);
      for (std::size_t j = 0; j < held.size(); ++j) oof(held[j], b) = pred(static_cast<Eigen::Index>(j));
    }
  }

  const Eigen::MatrixXd features = meta_features(oof, task);
  Eigen::VectorXd meta_coef;
  if (task == LearnerTask::regression) {
    meta_coef = least_squares(features, y);
  } else {
    meta_coef = (y.array() == y(0)).all() ? least_squares(features, y)
                                           : detail::logistic_coefficients(features, y, 1e-4);
  }

  std::vector<FittedModel> bases;
  bases.reserve(base_specs.size());
  for (Eigen::Index b = 0; b < n_bases; ++b) {
    const LearnerSpec base = base_specs[static_cast<std::size_t>(b)].for_task(task);
    bases.push_back(fit(base, x, y, derive_seed(seed, {2, static_cast<std::uint64_t>(b)})));
  }

  FittedModel fitted;
  fitted.task = task;
  auto model = std::make_shared<StackingModel>(std::move(bases), std::move(meta_coef), task);
  const Eigen::VectorXd train_pred = model->predict(x);
  fitted.loss_curve.push_back(task == LearnerTask::regression
                                  ? detail::mean_squared_error(y, train_pred)
                                  : detail::mean_log_loss(y, train_pred));
  fitted.model = std::move(model);
  fitted.train_row_ids.resize(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < fitted.train_row_ids.size(); ++i) fitted.train_row_ids[i] = i;
  return fitted;
}

}  // namespace pwtab
