#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "gbdt.hpp"
#include "model.hpp"

namespace synaudit {

class Rng;

// Reference rows the value function integrates absent features over.
struct BackgroundSet {
  TabularDataset rows;
  std::vector<double> weights;  // nonnegative, sum 1

  static BackgroundSet from_dataset(const TabularDataset& data, std::size_t max_rows,
                                    std::uint64_t seed);
  void validate() const;
};

enum class ValueScale { Probability, LogOdds };
enum class ValueMode { Marginal, Conditional };

const char* scale_name(ValueScale s);

struct ConditionalSamplerConfig {
  int max_depth = 4;
  double alpha = 0.05;
  std::size_t min_cell_rows = 20;
  std::size_t max_rows = 5000;  // fit subsample cap
  std::uint64_t seed = 0;
};

// Draws imputation rows from the training distribution restricted to the
// partition cell containing the conditioned feature values. Cells come from
// recursive, significance-gated splits on the conditioning features; falls
// back to marginal draws when a cell is thinner than min_cell_rows.
class ConditionalSampler {
 public:
  using Config = ConditionalSamplerConfig;

  static ConditionalSampler fit(const TabularDataset& data, const Config& config = {});

  // Row indices into data() for the cell of `coalition` (feature indices)
  // around instance x; n draws with replacement.
  std::vector<std::size_t> draw_rows(const std::vector<int>& coalition,
                                     std::span<const double> x, int n, Rng& rng) const;

  const TabularDataset& data() const { return data_; }

 private:
  struct PartitionNode {
    int feature = -1;  // -1: leaf
    bool categorical = false;
    double threshold = 0.0;      // numeric: x < threshold goes left
    double category = 0.0;       // categorical: x == category goes left
    int left = -1, right = -1;
    std::vector<std::size_t> rows;  // leaf only
  };
  struct PartitionTree {
    std::vector<PartitionNode> nodes;
  };

  PartitionTree build_partition(const std::vector<int>& coalition) const;
  const PartitionTree& partition_for(const std::vector<int>& coalition) const;

  TabularDataset data_;
  Config config_;
  mutable std::map<std::uint64_t, PartitionTree> cache_;  // keyed by coalition bitmask
};

struct ValueFunctionSpec {
  ValueMode mode = ValueMode::Marginal;
  const ConditionalSampler* sampler = nullptr;  // required in conditional mode
  int n_imputations = 100;
  ValueScale scale = ValueScale::Probability;
  std::uint64_t seed = 0;
};

struct ShapleyVector {
  std::vector<std::string> features;
  std::vector<double> phi;
  double base_value = 0.0;  // expected output at the empty coalition
  double prediction = 0.0;
  ValueScale scale = ValueScale::Probability;

  nlohmann::ordered_json to_json() const;
};

struct InteractionMatrix {
  std::vector<std::string> features;
  std::vector<std::vector<double>> values;  // symmetric; diagonal = main effects
  double base_value = 0.0;
  double prediction = 0.0;
  ValueScale scale = ValueScale::LogOdds;

  std::vector<double> row_sums() const;
  double total() const;
  nlohmann::ordered_json to_json() const;
};

inline constexpr int kExactLimit = 12;

// Full 2^p coalition enumeration of Eq-style Shapley values.
ShapleyVector exact_shapley(const PredictFn& model, std::span<const double> instance,
                            const BackgroundSet& background, const ValueFunctionSpec& spec,
                            int exact_limit = kExactLimit);

// Weighted-least-squares approximation over sampled coalitions with the
// Shapley kernel; paired complements, empty and full always included,
// efficiency enforced as an equality constraint.
ShapleyVector kernel_shap(const PredictFn& model, std::span<const double> instance,
                          const BackgroundSet& background, const ValueFunctionSpec& spec,
                          int n_coalitions = 2000, std::uint64_t seed = 0);

// Path-dependent per-tree attribution on the log-odds scale.
ShapleyVector tree_shap(const TreeEnsembleModel& model, std::span<const double> instance);
InteractionMatrix tree_shap_interactions(const TreeEnsembleModel& model,
                                         std::span<const double> instance);

enum class ShapEngine { Exact, KernelMarginal, KernelConditional, Tree, TreeInteractions };

struct ExplanationTag {
  std::string feature;
  std::string tag;
  double phi = 0.0;
};

struct ExplanationBundle {
  double score = 0.0;  // C(x)
  std::vector<std::pair<std::string, ShapleyVector>> vectors;  // engine name, result
  std::optional<InteractionMatrix> interactions;
  std::vector<ExplanationTag> tags;

  nlohmann::ordered_json to_json() const;
};

struct ExplainOptions {
  int n_coalitions = 2000;
  int n_imputations = 100;
  std::uint64_t seed = 0;
  double tag_margin = 0.1;  // "far from 0.5" threshold for narrative tags
  int tag_top_k = 3;
};

ExplanationBundle explain_instance(const TreeEnsembleModel& model,
                                   std::span<const double> instance,
                                   const std::set<ShapEngine>& engines,
                                   const BackgroundSet& background,
                                   const ConditionalSampler* sampler = nullptr,
                                   const ExplainOptions& options = {});

}  // namespace synaudit
