#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace synaudit {

enum class GridKind { Quantile, Uniform, Categories };

struct Grid {
  std::string feature;
  std::size_t feature_index = 0;
  GridKind kind = GridKind::Quantile;
  std::vector<double> points;        // cell values: numbers or category indices
  std::vector<std::string> labels;   // categorical grids only
  bool constant_feature = false;     // numeric feature collapsed to one point

  nlohmann::ordered_json to_json() const;
};

enum class RegionFlagKind { UnrealisticSynthetic, Underrepresented };

struct RegionFlag {
  std::string feature;
  RegionFlagKind kind;
  double lo = 0, hi = 0;     // numeric grid interval
  std::string category;      // categorical flags
  double extreme_pdp = 0.5;  // most deviant PDP value inside the region

  std::string text() const;
};

// Pooled-histogram annotation of the feature's real and synthetic marginals.
struct MarginalAnnotation {
  std::vector<double> bin_edges;            // numeric: Freedman-Diaconis bins
  std::vector<double> real_frequency;       // per bin or per category
  std::vector<double> synthetic_frequency;
};

struct EffectResult {
  Grid grid;
  std::vector<std::vector<double>> ice;  // [instance][grid point]
  std::vector<int> instance_labels;      // 1 real, 0 synthetic
  std::vector<std::size_t> instance_rows;
  std::vector<double> pdp;               // empty until pdp() runs
  double delta = 0.05;
  std::vector<RegionFlag> flags;
  MarginalAnnotation annotation;
  std::vector<std::string> notes;

  nlohmann::ordered_json to_json() const;
};

// Numeric grids are empirical quantiles at `resolution` evenly spaced
// probabilities (observed values only, deduplicated); categorical grids list
// every class in descending frequency order.
Grid make_grid(const TabularDataset& d, const std::string& feature, int resolution = 30,
               GridKind kind = GridKind::Quantile);

// ICE curves for a stratified sample of instances; pass instance_sample >= n
// to evaluate every row.
EffectResult ice(const PredictFn& model, const DetectionDataset& d, const std::string& feature,
                 const Grid& grid, std::size_t instance_sample, std::uint64_t seed);

// Fills pdp as the exact pointwise mean of the ICE curves and flags grid
// regions outside [0.5 - delta, 0.5 + delta].
void pdp(EffectResult& effect, double delta = 0.05);

// Category grid + per-class PDP + real/synthetic class frequencies.
EffectResult categorical_effect(const PredictFn& model, const DetectionDataset& d,
                                const std::string& feature, std::size_t instance_sample,
                                std::uint64_t seed, double delta = 0.05);

}  // namespace synaudit
