#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "generator.hpp"
#include "model.hpp"

namespace synaudit {

struct MCCEConfig {
  std::size_t n_samples = 100000;
  std::vector<std::string> immutable;  // empty: all features mutable
  std::size_t max_returned = 4;
  std::vector<double> feature_weights;  // Gower weights; empty: uniform
  std::uint64_t seed = 0;
};

struct Counterfactual {
  std::vector<double> cells;
  std::vector<std::uint8_t> changed;
  int sparsity = 0;
  double gower = 0.0;
  double score = 0.0;
};

struct CounterfactualSet {
  std::vector<Counterfactual> candidates;  // ranked
  std::size_t candidates_tried = 0;
  std::size_t valid_count = 0;
  bool trivial = false;  // instance already scored > 0.5
  std::string status;    // "ok" | "already_real" | "no_valid_candidates"

  nlohmann::ordered_json to_json(const Schema& schema,
                                 std::span<const double> instance) const;
};

// Mean per-feature distance: |delta| / range (clamped to 1) for numerics,
// 0/1 mismatch for categoricals; zero-range features contribute 0.
double gower_distance(std::span<const double> a, std::span<const double> b, const Schema& schema,
                      const std::vector<double>& ranges,
                      const std::vector<double>& weights = {});

// Monte Carlo counterfactual search: candidates drawn from the chain
// conditioned on the immutable features, filtered to score > 0.5, ranked
// lexicographically by (changed-feature count, Gower distance, score).
CounterfactualSet generate_counterfactuals(const PredictFn& model,
                                           std::span<const double> instance,
                                           const ChainModel& chain, const MCCEConfig& config);

}  // namespace synaudit
