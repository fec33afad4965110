#include "models.hpp"

#include "pwtab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pwtab {

namespace detail {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clip_probability(double p) noexcept {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double mean_squared_error(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  if (y.size() == 0) return 0.0;
  return (y - pred).squaredNorm() / static_cast<double>(y.size());
}

double mean_log_loss(const Eigen::VectorXd& y, const Eigen::VectorXd& prob) {
  if (y.size() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = std::clamp(prob(i), 1e-300, 1.0 - 1e-16);
    total -= y(i) * std::log(p) + (1.0 - y(i)) * std::log1p(-p);
  }
  return total / static_cast<double>(y.size());
}

}  // namespace detail

LearnerSpec LearnerSpec::make(LearnerKind kind, LearnerTask task) {
  LearnerSpec spec;
  spec.kind = kind;
  spec.task = task;
  switch (kind) {
    case LearnerKind::gbt_a:
      spec.hyper = Hyperparams{200, 6, 0.05, 20, 1.0, 0.0};
      break;
    case LearnerKind::gbt_b:
      spec.hyper = Hyperparams{300, 4, 0.1, 10, 1.0, 1.0};
      break;
    case LearnerKind::linear:
      spec.hyper = Hyperparams{0, 0, 0.0, 1, 1.0, 0.0};
      if (task == LearnerTask::binary_probability) spec.kind = LearnerKind::logistic;
      break;
    case LearnerKind::logistic:
      spec.hyper = Hyperparams{0, 0, 0.0, 1, 1.0, 1e-4};
      if (task == LearnerTask::regression) spec.kind = LearnerKind::linear;
      break;
    case LearnerKind::stacking:
      spec.hyper = Hyperparams{0, 0, 0.0, 1, 1.0, 0.0};
      spec.base_specs = {make(LearnerKind::gbt_a, task), make(LearnerKind::gbt_b, task)};
      break;
  }
  if (spec.kind == LearnerKind::logistic) spec.hyper.l2 = 1e-4;
  return spec;
}

LearnerSpec LearnerSpec::for_task(LearnerTask new_task) const {
  LearnerSpec out = *this;
  out.task = new_task;
  if (kind == LearnerKind::linear && new_task == LearnerTask::binary_probability) {
    out.kind = LearnerKind::logistic;
    out.hyper.l2 = std::max(out.hyper.l2, 1e-4);
  } else if (kind == LearnerKind::logistic && new_task == LearnerTask::regression) {
    out.kind = LearnerKind::linear;
  }
  for (LearnerSpec& base : out.base_specs) base = base.for_task(new_task);
  return out;
}

void LearnerSpec::validate() const {
  const Hyperparams& h = hyper;
  if (!(h.subsample > 0.0 && h.subsample <= 1.0)) {
    throw DomainError("LearnerSpec: subsample must lie in (0, 1]");
  }
  if (!(h.l2 >= 0.0) || !std::isfinite(h.l2)) {
    throw DomainError("LearnerSpec: l2 must be >= 0");
  }
  switch (kind) {
    case LearnerKind::gbt_a:
    case LearnerKind::gbt_b:
      if (!(h.learning_rate > 0.0 && h.learning_rate <= 1.0)) {
        throw DomainError("LearnerSpec: learning_rate must lie in (0, 1]");
      }
      if (h.min_leaf == 0) {
        throw DomainError("LearnerSpec: min_leaf must be >= 1");
      }
      break;
    case LearnerKind::linear:
      if (task != LearnerTask::regression) {
        throw DomainError("LearnerSpec: linear learner is regression-only; use logistic");
      }
      break;
    case LearnerKind::logistic:
      if (task != LearnerTask::binary_probability) {
        throw DomainError("LearnerSpec: logistic learner needs the binary_probability task");
      }
      break;
    case LearnerKind::stacking:
      if (base_specs.size() < 2) {
        throw DomainError("LearnerSpec: stacking needs at least two base learners");
      }
      if (inner_folds < 2) {
        throw DomainError("LearnerSpec: stacking needs inner_folds >= 2");
      }
      for (const LearnerSpec& base : base_specs) {
        if (base.task != task) throw DomainError("LearnerSpec: stacking base task mismatch");
        base.validate();
      }
      break;
  }
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "gbt_a") return LearnerKind::gbt_a;
  if (name == "gbt_b") return LearnerKind::gbt_b;
  if (name == "linear") return LearnerKind::linear;
  if (name == "logistic") return LearnerKind::logistic;
  if (name == "stacking") return LearnerKind::stacking;
  throw DomainError("unknown learner '" + std::string(name) + "'");
}

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::gbt_a: return "gbt_a";
    case LearnerKind::gbt_b: return "gbt_b";
    case LearnerKind::linear: return "linear";
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::stacking: return "stacking";
  }
  return "unknown";
}

namespace {

void check_training_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LearnerTask task) {
  if (x.rows() != y.size()) {
    throw DomainError("fit: X and y lengths differ");
  }
  if (y.size() == 0) {
    throw DomainError("fit: empty training set");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw DomainError("fit: non-finite training data");
  }
  if (task == LearnerTask::binary_probability) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) {
        throw DomainError("fit: binary_probability targets must be 0 or 1");
      }
    }
  }
}

std::vector<std::size_t> all_rows(Eigen::Index n) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return rows;
}

}  // namespace

FittedModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                std::uint64_t seed) {
  spec.validate();
  check_training_data(x, y, spec.task);
  const bool gbt = spec.kind == LearnerKind::gbt_a || spec.kind == LearnerKind::gbt_b;
  if (gbt && static_cast<std::size_t>(y.size()) < spec.hyper.min_leaf) {
    throw DomainError("fit: fewer training rows than min_leaf");
  }

  FittedModel fitted;
  const bool constant = (y.array() == y(0)).all();
  if (constant) {
    // Constant targets short-circuit every learner, so e.g. a constant
    // outcome reproduces exactly rather than up to rounding.
    const double value =
        spec.task == LearnerTask::binary_probability ? detail::clip_probability(y(0)) : y(0);
    fitted.model = std::make_shared<detail::ConstantModel>(value);
    fitted.task = spec.task;
    fitted.loss_curve.push_back(spec.task == LearnerTask::binary_probability
                                    ? detail::mean_log_loss(y, fitted.model->predict(x))
                                    : 0.0);
  } else {
    switch (spec.kind) {
      case LearnerKind::gbt_a:
      case LearnerKind::gbt_b:
        fitted = detail::fit_gbt(spec, x, y, seed);
        break;
      case LearnerKind::linear:
        fitted = detail::fit_linear(spec, x, y);
        break;
      case LearnerKind::logistic:
        fitted = detail::fit_logistic(spec, x, y);
        break;
      case LearnerKind::stacking:
        fitted = fit_stacking(spec.base_specs, spec.task, x, y, spec.inner_folds, seed);
        break;
    }
  }
  fitted.train_row_ids = all_rows(y.size());
  return fitted;
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& x) {
  if (!model.model) {
    throw DomainError("predict: model is not fitted");
  }
  if (x.rows() == 0) {
    return Eigen::VectorXd(0);
  }
  return model.model->predict(x);
}

}  // namespace pwtab
