#include "models.hpp"

#include "pwtab/errors.hpp"
#include "pwtab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwtab::detail {

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

using Tree = std::vector<TreeNode>;

double tree_value(const Tree& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  int node = 0;
  while (tree[static_cast<std::size_t>(node)].feature >= 0) {
    const TreeNode& nd = tree[static_cast<std::size_t>(node)];
    node = x(row, nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree[static_cast<std::size_t>(node)].value;
}

class GbtModel final : public Model {
 public:
  GbtModel(double base_score, std::vector<Tree> trees, LearnerTask task)
      : base_score_(base_score), trees_(std::move(trees)), task_(task) {}

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const override {
    Eigen::VectorXd out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      double score = base_score_;
      for (const Tree& tree : trees_) score += tree_value(tree, x, i);
      out(i) = task_ == LearnerTask::binary_probability ? clip_probability(sigmoid(score)) : score;
    }
    return out;
  }

 private:
  double base_score_;
  std::vector<Tree> trees_;
  LearnerTask task_;
};

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double grad_left = 0.0;
  double hess_left = 0.0;
  std::size_t count_left = 0;
};

struct Accumulator {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
  double last = 0.0;
};

double leaf_score(double g, double h, double l2) { return g * g / (h + l2); }

// Grows one tree level by level over the rows with slot >= 0. `node_of`
// receives each sampled row's final node.
Tree grow_tree(const Eigen::MatrixXd& x, const std::vector<std::vector<int>>& sorted,
               const std::vector<double>& grad, const std::vector<double>& hess,
               const std::vector<std::uint8_t>& in_sample, const Hyperparams& hp,
               std::vector<int>& node_of) {
  const std::size_t n = grad.size();
  const std::size_t d = sorted.size();

  Tree tree(1);
  std::vector<int> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!in_sample[i]) {
      node_of[i] = -1;
      continue;
    }
    slot[i] = 0;
    node_of[i] = 0;
    tree[0].grad += grad[i];
    tree[0].hess += hess[i];
    ++tree[0].count;
  }

  std::vector<int> frontier{0};
  for (std::size_t level = 0; level < hp.depth && !frontier.empty(); ++level) {
    const std::size_t width = frontier.size();
    std::vector<SplitCandidate> best(width);

    for (std::size_t f = 0; f < d; ++f) {
      std::vector<Accumulator> acc(width);
      for (int row : sorted[f]) {
        const int s = slot[static_cast<std::size_t>(row)];
        if (s < 0) continue;
        Accumulator& a = acc[static_cast<std::size_t>(s)];
        const double v = x(row, static_cast<Eigen::Index>(f));
        const TreeNode& parent = tree[static_cast<std::size_t>(frontier[static_cast<std::size_t>(s)])];
        if (a.count >= hp.min_leaf && v > a.last && parent.count - a.count >= hp.min_leaf) {
          const double gr = parent.grad - a.grad;
          const double hr = parent.hess - a.hess;
          const double left = leaf_score(a.grad, a.hess, hp.l2);
          const double right = leaf_score(gr, hr, hp.l2);
          const double whole = leaf_score(parent.grad, parent.hess, hp.l2);
          const double gain = left + right - whole;
          // Ignore gains lost in cancellation.
          SplitCandidate& b = best[static_cast<std::size_t>(s)];
          if (gain > 1e-10 * (left + right + whole) && gain > b.gain) {
            double threshold = a.last + 0.5 * (v - a.last);
            if (!(threshold < v)) threshold = a.last;
            b = SplitCandidate{gain, static_cast<int>(f), threshold, a.grad, a.hess, a.count};
          }
        }
        a.grad += grad[static_cast<std::size_t>(row)];
        a.hess += hess[static_cast<std::size_t>(row)];
        ++a.count;
        a.last = v;
      }
    }

    std::vector<int> next_frontier;
    std::vector<int> left_slot(width, -1);
    for (std::size_t s = 0; s < width; ++s) {
      const SplitCandidate& b = best[s];
      if (b.feature < 0) continue;
      const int id = frontier[s];
      const auto parent = tree[static_cast<std::size_t>(id)];
      TreeNode left;
      left.grad = b.grad_left;
      left.hess = b.hess_left;
      left.count = b.count_left;
      TreeNode right;
      right.grad = parent.grad - b.grad_left;
      right.hess = parent.hess - b.hess_left;
      right.count = parent.count - b.count_left;
      const int left_id = static_cast<int>(tree.size());
      tree.push_back(left);
      tree.push_back(right);
      TreeNode& p = tree[static_cast<std::size_t>(id)];
      p.feature = b.feature;
      p.threshold = b.threshold;
      p.left = left_id;
      p.right = left_id + 1;
      left_slot[s] = static_cast<int>(next_frontier.size());
      next_frontier.push_back(left_id);
      next_frontier.push_back(left_id + 1);
    }

    for (std::size_t i = 0; i < n; ++i) {
      const int s = slot[i];
      if (s < 0) continue;
      const int ls = left_slot[static_cast<std::size_t>(s)];
      if (ls < 0) {
        slot[i] = -1;
        continue;
      }
      const TreeNode& p = tree[static_cast<std::size_t>(frontier[static_cast<std::size_t>(s)])];
      const bool go_left = x(static_cast<Eigen::Index>(i), p.feature) <= p.threshold;
      slot[i] = go_left ? ls : ls + 1;
      node_of[i] = go_left ? p.left : p.right;
    }
    frontier = std::move(next_frontier);
  }
  return tree;
}

}  // namespace

FittedModel fit_gbt(const LearnerSpec& spec, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                    std::uint64_t seed) {
  const Hyperparams& hp = spec.hyper;
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < hp.min_leaf) {
    throw DomainError("gbt: fewer training rows than min_leaf");
  }
  const bool binary = spec.task == LearnerTask::binary_probability;

  const double y_mean = y.mean();
  const double base_score =
      binary ? std::log(clip_probability(y_mean) / (1.0 - clip_probability(y_mean))) : y_mean;

  FittedModel fitted;
  fitted.task = spec.task;
  Eigen::VectorXd score = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), base_score);

  auto current_loss = [&]() {
    if (!binary) return mean_squared_error(y, score);
    Eigen::VectorXd prob = score.unaryExpr([](double s) { return sigmoid(s); });
    return mean_log_loss(y, prob);
  };
  fitted.loss_curve.push_back(current_loss());

  std::vector<Tree> trees;
  if (hp.depth > 0 && d > 0) {
    std::vector<std::vector<int>> sorted(d);
    for (std::size_t f = 0; f < d; ++f) {
      sorted[f].resize(n);
      std::iota(sorted[f].begin(), sorted[f].end(), 0);
      const auto col = x.col(static_cast<Eigen::Index>(f));
      std::stable_sort(sorted[f].begin(), sorted[f].end(),
                       [&](int a, int b) { return col(a) < col(b); });
    }

    Rng rng(seed);
    std::vector<double> grad(n);
    std::vector<double> hess(n);
    std::vector<std::uint8_t> in_sample(n, 1);
    std::vector<int> node_of(n);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto sample_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(n))));

    trees.reserve(hp.trees);
    for (std::size_t t = 0; t < hp.trees; ++t) {
      if (sample_size < n) {
        std::fill(in_sample.begin(), in_sample.end(), 0);
        for (std::size_t i = 0; i < sample_size; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
          std::swap(rows[i], rows[j]);
          in_sample[rows[i]] = 1;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        if (binary) {
          const double p = sigmoid(score(r));
          grad[i] = p - y(r);
          hess[i] = std::max(p * (1.0 - p), 1e-16);
        } else {
          grad[i] = score(r) - y(r);
          hess[i] = 1.0;
        }
      }

      Tree tree = grow_tree(x, sorted, grad, hess, in_sample, hp, node_of);
      for (TreeNode& node : tree) {
        if (node.feature < 0) {
          node.value = -hp.learning_rate * node.grad / (node.hess + hp.l2);
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        score(r) += node_of[i] >= 0 ? tree[static_cast<std::size_t>(node_of[i])].value
                                    : tree_value(tree, x, r);
      }
      trees.push_back(std::move(tree));
      fitted.loss_curve.push_back(current_loss());
    }
  }

  fitted.model = std::make_shared<GbtModel>(base_score, std::move(trees), spec.task);
  return fitted;
}

}  // namespace pwtab::detail
