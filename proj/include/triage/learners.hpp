#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

// Dense-feature classifiers used by the classical baselines. Classes are
// indices 0..num_classes-1; predict_proba returns one probability per class.
namespace triage::learn {

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0;  // x[feature] < threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> value;  // leaf: class distribution, or a single score
};

using Tree = std::vector<TreeNode>;

const TreeNode& leaf_for(const Tree& tree, const Eigen::VectorXd& x);

struct CartOptions {
  std::size_t max_depth = 0;        // 0: unlimited
  std::size_t max_features = 0;     // 0: all features per split
  std::size_t min_samples_leaf = 1;
};

// Gini CART on weighted samples (weights of 0 exclude a sample).
Tree fit_cart(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
              std::size_t num_classes, const CartOptions& options, std::uint64_t seed);

struct GbtParams {
  std::size_t rounds = 100;
  double learning_rate = 0.3;
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::size_t max_bins = 64;
};

// Multiclass softmax boosting with second-order histogram trees.
struct GradientBoostedTrees {
  GbtParams params;
  std::size_t num_classes = 0;
  std::vector<Tree> trees;  // round-major: trees[round * num_classes + class]

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes);
  std::vector<double> predict_proba(const Eigen::VectorXd& x) const;
};

struct ForestParams {
  std::size_t trees = 100;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 42;
};

// Bootstrap-aggregated Gini trees, sqrt(features) per split.
struct RandomForest {
  ForestParams params;
  std::size_t num_classes = 0;
  std::vector<Tree> trees;

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes);
  std::vector<double> predict_proba(const Eigen::VectorXd& x) const;
};

struct AdaParams {
  std::size_t estimators = 100;
  double learning_rate = 1.0;
};

// Multiclass SAMME boosting over decision stumps.
struct AdaBoost {
  AdaParams params;
  std::size_t num_classes = 0;
  std::vector<Tree> stumps;
  std::vector<double> alphas;

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes);
  std::vector<double> predict_proba(const Eigen::VectorXd& x) const;
};

// Euclidean k nearest neighbors; scores are vote fractions.
struct KNearestNeighbors {
  std::size_t k = 5;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> points;  // row-major
  std::vector<int> labels;

  void fit(const Eigen::MatrixXd& x, const std::vector<int>& y, std::size_t classes);
  std::vector<double> predict_proba(const Eigen::VectorXd& x) const;
};

}  // namespace triage::learn
