#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"
#include "gbdt.hpp"
#include "model.hpp"

namespace synaudit {

enum class BaselineKind { Logistic, RandomForest };

struct BaselineOptions {
  // logistic
  double l2 = 1e-2;
  int max_iterations = 50;
  double tolerance = 1e-8;
  // random forest
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
};

// L2-regularized logistic regression fit by IRLS over standardized numerics
// and one-hot categoricals (plus an "unknown" slot per categorical column).
class LogisticModel {
 public:
  std::vector<double> predict_proba(const TabularDataset& rows) const;
  PredictFn predictor() const;

  std::string fingerprint;
  Schema schema;
  std::vector<double> weights;  // encoded features, then intercept last
  std::vector<double> numeric_mean, numeric_sd;  // per column; 0/1 for categoricals
  std::vector<std::size_t> encoded_offset;       // per column start in encoding
  std::size_t encoded_width = 0;
};

class RandomForestModel {
 public:
  std::vector<double> predict_proba(const TabularDataset& rows) const;
  PredictFn predictor() const;

  std::string fingerprint;
  Schema schema;
  std::vector<Tree> trees;  // leaf values are positive-class fractions
};

struct BaselineModel {
  BaselineKind kind = BaselineKind::Logistic;
  LogisticModel logistic;
  RandomForestModel forest;

  std::vector<double> predict_proba(const TabularDataset& rows) const;
  PredictFn predictor() const;
};

BaselineModel fit_baseline(const DetectionDataset& train, BaselineKind kind, std::uint64_t seed,
                           const BaselineOptions& options = {});

}  // namespace synaudit
