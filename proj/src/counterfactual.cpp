#include "synaudit/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace synaudit {

double gower_distance(std::span<const double> a, std::span<const double> b, const Schema& schema,
                      const std::vector<double>& ranges, const std::vector<double>& weights) {
  if (a.size() != schema.size() || b.size() != schema.size() || ranges.size() != schema.size()) {
    throw ValidationError("gower_distance: width mismatch");
  }
  if (!weights.empty() && weights.size() != schema.size()) {
    throw ValidationError("gower_distance: weight width mismatch");
  }
  double total = 0, weight_sum = 0;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    double w = weights.empty() ? 1.0 : weights[c];
    weight_sum += w;
    double d;
    if (schema[c].kind == ColumnKind::Numeric) {
      d = ranges[c] > 0 ? std::min(std::fabs(a[c] - b[c]) / ranges[c], 1.0) : 0.0;
    } else {
      d = a[c] == b[c] ? 0.0 : 1.0;
    }
    total += w * d;
  }
  return weight_sum > 0 ? total / weight_sum : 0.0;
}

CounterfactualSet generate_counterfactuals(const PredictFn& model,
                                           std::span<const double> instance,
                                           const ChainModel& chain, const MCCEConfig& config) {
  const Schema& schema = chain.schema();
  if (instance.size() != schema.size()) {
    throw ValidationError("generate_counterfactuals: instance width mismatch");
  }
  if (config.n_samples < 1) throw ValidationError("generate_counterfactuals: n_samples >= 1");

  CounterfactualSet result;

  TabularDataset one(schema, Provenance::Unlabeled);
  one.append_row(instance);
  double own_score = model(one)[0];
  if (own_score > 0.5) {
    // Already on the real side of the threshold: the trivial counterfactual.
    Counterfactual self;
    self.cells.assign(instance.begin(), instance.end());
    self.changed.assign(schema.size(), 0);
    self.score = own_score;
    result.candidates.push_back(std::move(self));
    result.trivial = true;
    result.status = "already_real";
    return result;
  }

  std::vector<std::optional<double>> fixed(schema.size());
  for (const auto& name : config.immutable) {
    std::size_t c = one.column_index(name);
    fixed[c] = instance[c];
  }

  TabularDataset candidates = chain.sample(config.n_samples, config.seed, fixed);
  auto scores = model(candidates);
  result.candidates_tried = config.n_samples;

  std::vector<double> ranges = chain.numeric_ranges();
  std::map<std::vector<double>, std::size_t> seen;  // dedup on full cell vector
  for (std::size_t r = 0; r < candidates.n_rows(); ++r) {
    if (!(scores[r] > 0.5)) continue;
    ++result.valid_count;
    auto row = candidates.row(r);
    seen.emplace(std::vector<double>(row.begin(), row.end()), r);
  }

  for (const auto& [cells, r] : seen) {
    Counterfactual cf;
    cf.cells = cells;
    cf.changed.assign(schema.size(), 0);
    for (std::size_t c = 0; c < schema.size(); ++c) {
      if (cells[c] != instance[c]) {
        cf.changed[c] = 1;
        ++cf.sparsity;
      }
    }
    cf.gower = gower_distance(cf.cells, instance, schema, ranges, config.feature_weights);
    cf.score = scores[r];
    result.candidates.push_back(std::move(cf));
  }

  // Lexicographic: fewest changes, then closest, then score nearest 0.5.
  std::sort(result.candidates.begin(), result.candidates.end(),
            [](const Counterfactual& a, const Counterfactual& b) {
              if (a.sparsity != b.sparsity) return a.sparsity < b.sparsity;
              if (a.gower != b.gower) return a.gower < b.gower;
              if (a.score != b.score) return a.score < b.score;
              return a.cells < b.cells;
            });
  if (result.candidates.size() > config.max_returned) {
    result.candidates.resize(config.max_returned);
  }
  result.status = result.candidates.empty() ? "no_valid_candidates" : "ok";
  return result;
}

nlohmann::ordered_json CounterfactualSet::to_json(const Schema& schema,
                                                  std::span<const double> instance) const {
  nlohmann::ordered_json j;
  j["status"] = status;
  j["candidates_tried"] = candidates_tried;
  j["valid_count"] = valid_count;
  j["trivial"] = trivial;

  auto cell_json = [&schema](std::size_t c, double v) -> nlohmann::ordered_json {
    if (schema[c].kind == ColumnKind::Numeric) return v;
    return schema[c].category_label(v);
  };

  nlohmann::ordered_json inst = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    inst[schema[c].name] = cell_json(c, instance[c]);
  }
  j["instance"] = std::move(inst);

  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& cf : candidates) {
    nlohmann::ordered_json jc;
    nlohmann::ordered_json cells = nlohmann::ordered_json::object();
    nlohmann::ordered_json changed = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < schema.size(); ++c) {
      cells[schema[c].name] = cell_json(c, cf.cells[c]);
      if (cf.changed[c]) changed.push_back(schema[c].name);
    }
    jc["cells"] = std::move(cells);
    jc["changed"] = std::move(changed);
    jc["sparsity"] = cf.sparsity;
    jc["gower"] = cf.gower;
    jc["score"] = cf.score;
    arr.push_back(std::move(jc));
  }
  j["candidates"] = std::move(arr);
  return j;
}

}  // namespace synaudit
