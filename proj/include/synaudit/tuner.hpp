#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"
#include "gbdt.hpp"

namespace synaudit {

struct TunerOptions {
  bool random_search = false;  // fallback: plain random sampling
  int cv_folds = 3;
  int n_startup = 5;           // random trials before the Parzen model kicks in
  int n_candidates = 24;       // candidates scored per guided trial
  double good_fraction = 0.25;
  int early_stopping_rounds = 20;  // applied inside every trial
};

struct TrialRecord {
  TrainConfig config;
  double cv_auc = 0.0;
  bool failed = false;
};

// Sequential model-based search (Parzen density ratio over a fixed space)
// maximizing stratified cross-validated AUC on the training split.
TrainConfig tune(const DetectionDataset& train, int budget, std::uint64_t seed,
                 const TunerOptions& options = {}, std::vector<TrialRecord>* trace = nullptr);

}  // namespace synaudit
