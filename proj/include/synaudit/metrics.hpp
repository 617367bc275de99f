#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace synaudit {

struct ConfusionCounts {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct SplitMetrics {
  double accuracy = 0;
  double auc = 0;
  double log_loss = 0;
  double fpr = 0;  // synthetic classified real: fidelity proxy
  double fnr = 0;  // real classified synthetic: diversity proxy
  ConfusionCounts confusion;
  std::size_t n = 0;
};

struct MetricsReport {
  SplitMetrics train;
  SplitMetrics test;
};

// Rank-based AUC with tie correction; positive class is label 1 (real).
double auc_score(const std::vector<int>& labels, const std::vector<double>& scores);
double log_loss_score(const std::vector<int>& labels, const std::vector<double>& probs);

// Classification uses the fixed 0.5 threshold; exact ties go to synthetic.
SplitMetrics compute_split_metrics(const std::vector<int>& labels,
                                   const std::vector<double>& probs);

MetricsReport evaluate(const PredictFn& model, const DetectionDataset& d);

nlohmann::ordered_json metrics_to_json(const MetricsReport& report);

}  // namespace synaudit
