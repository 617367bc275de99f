#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace synaudit {

struct TrainConfig {
  int n_trees = 100;
  int max_depth = 4;
  double learning_rate = 0.1;
  double min_child_weight = 1.0;
  double l1 = 0.0;
  double l2 = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  int early_stopping_rounds = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Binary decision-tree node. Numeric splits send x < threshold left;
// categorical splits send the listed category indices left; the reserved
// "unknown" cell follows default_left.
struct TreeNode {
  std::int32_t feature = -1;  // < 0: leaf
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::int32_t> left_categories;
  std::int32_t left = -1;
  std::int32_t right = -1;
  bool default_left = true;
  double value = 0.0;  // leaf log-odds contribution (learning-rate scaled)
  double cover = 0.0;  // training weight (row count) reaching the node

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Child index the cell value routes to at `node`.
  std::int32_t route(const TreeNode& node, double cell) const;
  double evaluate(std::span<const double> row) const;
  int max_depth() const;
};

class TreeEnsembleModel {
 public:
  std::vector<Tree> trees;
  double base_score = 0.0;  // log-odds intercept
  std::string fingerprint;  // schema fingerprint of the training data
  std::uint64_t seed = 0;
  TrainConfig config;
  Schema schema;  // carried for routing categorical cells and reporting

  double margin_one(std::span<const double> row) const;
  double predict_one(std::span<const double> row) const;
  std::vector<double> predict_margin(const TabularDataset& rows) const;
  std::vector<double> predict_proba(const TabularDataset& rows) const;

  PredictFn predictor() const;         // probability scale
  PredictFn margin_predictor() const;  // log-odds scale

  nlohmann::ordered_json to_json() const;
  static TreeEnsembleModel from_json(const nlohmann::ordered_json& j);
  void save(const std::string& path) const;
  static TreeEnsembleModel load(const std::string& path);
};

struct FitDiagnostics {
  // Log-loss over the boosted rows after each accepted round.
  std::vector<double> train_logloss;
  std::vector<double> valid_logloss;  // early-stopping slice, when active
  int best_iteration = -1;
};

TreeEnsembleModel fit_gbdt(const DetectionDataset& train, const TrainConfig& config,
                           FitDiagnostics* diagnostics = nullptr);

}  // namespace synaudit
