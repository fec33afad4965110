#include "models.hpp"

#include "pwtab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pwtab {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) {
  const Eigen::Index d = x.cols();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(d + 1);
  const double y_mean = y.mean();
  if (d == 0) {
    coef(0) = y_mean;
    return coef;
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::VectorXd beta;
  bool solved = false;
  if (l2 == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
    if (qr.rank() == d) {
      beta = qr.solve(yc);
      solved = true;
    } else {
      l2 = 1e-8;
    }
  }
  if (!solved) {
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += l2;
    beta = gram.ldlt().solve(xc.transpose() * yc);
  }
  coef(0) = y_mean - x_mean.dot(beta);
  coef.tail(d) = beta;
  return coef;
}

namespace detail {

namespace {

class LinearModel final : public Model {
 public:
  LinearModel(Eigen::VectorXd coef, bool logistic) : coef_(std::move(coef)), logistic_(logistic) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    const Eigen::Index d = coef_.size() - 1;
    if (x.cols() != d) {
      throw DomainError("linear model: covariate count mismatch");
    }
    Eigen::VectorXd out = (x * coef_.tail(d)).array() + coef_(0);
    if (logistic_) {
      out = out.unaryExpr([](double z) { return clip_probability(sigmoid(z)); });
    }
    return out;
  }

 private:
  Eigen::VectorXd coef_;
  bool logistic_;
};

double penalized_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, double l2) {
  const Eigen::VectorXd eta = design * w;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log(1 + exp(eta)) without overflow
    const double softplus = eta(i) > 0 ? eta(i) + std::log1p(std::exp(-eta(i)))
                                       : std::log1p(std::exp(eta(i)));
    ll += y(i) * eta(i) - softplus;
  }
  return ll - 0.5 * l2 * w.tail(w.size() - 1).squaredNorm();
}

}  // namespace

Eigen::VectorXd logistic_coefficients(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double l2) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd design(n, d + 1);
  design.col(0).setOnes();
  design.rightCols(d) = x;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  const double p0 = clip_probability(y.mean());
  w(0) = std::log(p0 / (1.0 - p0));
  double objective = penalized_log_likelihood(design, y, w, l2);

  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = design * w;
    Eigen::VectorXd p(n);
    Eigen::VectorXd weight(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = sigmoid(eta(i));
      weight(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    Eigen::VectorXd gradient = design.transpose() * (y - p);
    gradient.tail(d) -= l2 * w.tail(d);
    Eigen::MatrixXd hessian = design.transpose() * weight.asDiagonal() * design;
    hessian.diagonal().tail(d).array() += l2;
    hessian.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);

    // Step halving keeps the penalized likelihood non-decreasing.
    double scale = 1.0;
    Eigen::VectorXd candidate = w + step;
    double cand_obj = penalized_log_likelihood(design, y, candidate, l2);
    while (!(cand_obj >= objective) && scale > 1e-8) {
      scale *= 0.5;
      candidate = w + scale * step;
      cand_obj = penalized_log_likelihood(design, y, candidate, l2);
    }
    if (!(cand_obj >= objective)) break;
    const double change = (scale * step).cwiseAbs().maxCoeff();
    w = candidate;
    objective = cand_obj;
    if (change < 1e-10) break;
  }
  return w;
}

FittedModel fit_linear(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  FittedModel fitted;
  fitted.task = LearnerTask::regression;
  auto model = std::make_shared<LinearModel>(least_squares(x, y, spec.hyper.l2), false);
  fitted.loss_curve.push_back(mean_squared_error(y, model->predict(x)));
  fitted.model = std::move(model);
  return fitted;
}

FittedModel fit_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  FittedModel fitted;
  fitted.task = LearnerTask::binary_probability;
  auto model = std::make_shared<LinearModel>(logistic_coefficients(x, y, spec.hyper.l2), true);
  fitted.loss_curve.push_back(mean_log_loss(y, model->predict(x)));
  fitted.model = std::move(model);
  return fitted;
}

}  // namespace detail
}  // namespace pwtab
