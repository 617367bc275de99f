#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "gbdt.hpp"

namespace synaudit {

struct SamplerConfig {
  enum class Mode { Independent, CartChain };
  Mode mode = Mode::CartChain;
  std::vector<std::string> column_order;  // empty: mutual-information heuristic
  int max_depth = 8;
  int min_leaf = 10;
  std::uint64_t seed = 0;
};

// Autoregressive tree chain: column k is a CART on columns earlier in the
// chain; sampling walks the chain and draws uniformly from the reached leaf's
// pool of training values. Independent mode degenerates every column to its
// empirical marginal.
class ChainModel {
 public:
  struct ColumnModel {
    std::size_t column = 0;
    Tree tree;  // leaf node value = pool index
    std::vector<std::vector<double>> pools;
  };

  const Schema& schema() const { return schema_; }
  const std::vector<std::size_t>& order() const { return order_; }
  SamplerConfig::Mode mode() const { return mode_; }
  double numeric_range(std::size_t column) const;
  std::vector<double> numeric_ranges() const;

  // Fixed cells (by schema index) are conditioned on; the rest are sampled in
  // chain order given all fixed and previously sampled values.
  TabularDataset sample(std::size_t n, std::uint64_t seed,
                        const std::vector<std::optional<double>>& fixed = {}) const;

  bool value_in_training_pool(std::size_t column, double value) const;

  nlohmann::ordered_json to_json() const;
  static ChainModel from_json(const nlohmann::ordered_json& j);

  friend ChainModel fit_chain(const TabularDataset& data, const SamplerConfig& config);

 private:
  Schema schema_;
  SamplerConfig::Mode mode_ = SamplerConfig::Mode::CartChain;
  std::vector<std::size_t> order_;
  std::vector<ColumnModel> columns_;  // parallel to order_
  std::vector<double> col_min_, col_max_;
  std::vector<std::vector<double>> train_values_;  // sorted unique, per column
};

ChainModel fit_chain(const TabularDataset& data, const SamplerConfig& config = {});

TabularDataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed,
                      const std::vector<std::optional<double>>& fixed = {});

TabularDataset baseline_synthesize(const TabularDataset& real, SamplerConfig::Mode mode,
                                   std::size_t n, std::uint64_t seed);

}  // namespace synaudit
