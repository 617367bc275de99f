#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"
#include "shapley.hpp"

namespace synaudit {

enum class ImportanceMethod { PFI, MeanAbsShap, Interaction };
enum class PfiLoss { LogLoss, OneMinusAccuracy };

struct ImportanceEntry {
  std::vector<std::string> features;  // one name, or a pair for interactions
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> values;  // per repeat/replication
};

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::PFI;
  std::optional<PfiLoss> loss;
  std::vector<ImportanceEntry> entries;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
};

// Loss increase per feature when its column is permuted; evaluated on the
// test split by default.
ImportanceReport permutation_importance(const PredictFn& model, const DetectionDataset& d,
                                        PfiLoss loss = PfiLoss::LogLoss, int repeats = 10,
                                        std::uint64_t seed = 0, bool on_test_split = true);

// Mean absolute Shapley value per feature over an instance collection.
ImportanceReport shap_importance(const std::vector<ShapleyVector>& vectors);

// Mean absolute main effects (diagonal) and pairwise interactions
// (off-diagonal, counted once), top_k strongest returned.
ImportanceReport interaction_importance(const std::vector<InteractionMatrix>& matrices,
                                        int top_k);

}  // namespace synaudit
