#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "pscore/dataset.hpp"

namespace pscore {

struct BoostConfig {
  int max_depth = 7;
  double learning_rate = 0.5;  // in (0, 1]
  int rounds = 10;
  double lambda = 1.0;  // L2 leaf penalty
  double alpha = 0.0;   // L1 leaf penalty
  double min_child_weight = 1.0;
  void validate() const;
};

// Per-class probability rows, with the treatment level behind each column so
// consumers can align classes across datasets by name.
struct PropensityMatrix {
  Eigen::MatrixXd values;  // m x d
  std::vector<std::string> class_levels;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  // Continuous split: x < threshold goes left.
  double threshold = 0.0;
  // Categorical split: codes routed left / right (both sorted); a code seen
  // in neither set takes the default branch.
  std::vector<int> left_categories;
  std::vector<int> right_categories;
  bool default_left = true;  // majority-training branch
  int left = -1;
  int right = -1;
  double weight = 0.0;  // leaf value, already scaled by the learning rate
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct BoostedModel {
  BoostConfig config;
  double base_score = 0.0;
  std::vector<std::vector<RegressionTree>> trees;  // [round][class]
  std::vector<double> train_loss;                  // initial loss, then one entry per round

  // Training-time feature and class metadata; prediction maps categorical
  // codes through level strings so datasets with different code orders agree.
  std::vector<std::string> feature_names;
  std::vector<bool> feature_is_categorical;
  std::vector<std::vector<std::string>> feature_levels;  // empty for continuous features
  std::vector<std::string> class_levels;

  nlohmann::json to_json() const;
  static BoostedModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static BoostedModel load(const std::string& path);
};

// Row-wise softmax with max-shift; errors on non-finite scores.
PropensityMatrix softprob(const Eigen::MatrixXd& raw);

// -(1/m) sum of one-hot log-likelihood, probabilities clamped to
// [1e-15, 1 - 1e-15].
double mlogloss(const Eigen::MatrixXd& y_one_hot, const PropensityMatrix& p);

struct GradientPair {
  std::vector<double> g;
  std::vector<double> h;
};

// Softmax cross-entropy derivatives for one sample: g = p - y, h = p(1 - p).
GradientPair gradients(std::span<const double> y_row, std::span<const double> p_row);

// One tree per class per round on exact greedy splits; deterministic.
BoostedModel train(const Dataset& data, const BoostConfig& cfg, std::uint64_t seed);

PropensityMatrix predict(const BoostedModel& model, const Dataset& data);

// Predictions CSV: row index + one probability column per class level.
void write_predictions(const PropensityMatrix& p, const std::string& path);
PropensityMatrix read_predictions(const std::string& path);

}  // namespace pscore
