#include "synaudit/effects.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

// Type-1 (lower) empirical quantile: always an observed value.
double observed_quantile(const std::vector<double>& sorted, double p) {
  if (p <= 0) return sorted.front();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<double> column_values(const TabularDataset& d, std::size_t col) {
  std::vector<double> v;
  v.reserve(d.n_rows());
  for (std::size_t r = 0; r < d.n_rows(); ++r) v.push_back(d.cell(r, col));
  return v;
}

MarginalAnnotation numeric_annotation(const DetectionDataset& d, std::size_t col) {
  MarginalAnnotation a;
  std::vector<double> pooled = column_values(d.data, col);
  std::sort(pooled.begin(), pooled.end());
  double q1 = quantile(pooled, 0.25), q3 = quantile(pooled, 0.75);
  double iqr = q3 - q1;
  double lo = pooled.front(), hi = pooled.back();
  // Freedman-Diaconis bin width; fall back to 10 bins for degenerate spread.
  double width = 2.0 * iqr / std::cbrt(static_cast<double>(pooled.size()));
  int bins = width > 0 ? static_cast<int>(std::ceil((hi - lo) / width)) : 10;
  bins = std::clamp(bins, 1, 200);
  a.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) {
    a.bin_edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
  }
  a.real_frequency.assign(bins, 0.0);
  a.synthetic_frequency.assign(bins, 0.0);
  double n_real = 0, n_syn = 0;
  for (std::size_t r = 0; r < d.data.n_rows(); ++r) {
    double v = d.data.cell(r, col);
    int b = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    if (d.labels[r] == 1) {
      a.real_frequency[b] += 1;
      n_real += 1;
    } else {
      a.synthetic_frequency[b] += 1;
      n_syn += 1;
    }
  }
  for (auto& f : a.real_frequency) f = n_real > 0 ? f / n_real : 0;
  for (auto& f : a.synthetic_frequency) f = n_syn > 0 ? f / n_syn : 0;
  return a;
}

MarginalAnnotation categorical_annotation(const DetectionDataset& d, std::size_t col,
                                          const Grid& grid) {
  MarginalAnnotation a;
  a.real_frequency.assign(grid.points.size(), 0.0);
  a.synthetic_frequency.assign(grid.points.size(), 0.0);
  std::map<double, std::size_t> slot;
  for (std::size_t g = 0; g < grid.points.size(); ++g) slot[grid.points[g]] = g;
  double n_real = 0, n_syn = 0;
  for (std::size_t r = 0; r < d.data.n_rows(); ++r) {
    auto it = slot.find(d.data.cell(r, col));
    bool real = d.labels[r] == 1;
    (real ? n_real : n_syn) += 1;
    if (it == slot.end()) continue;
    (real ? a.real_frequency : a.synthetic_frequency)[it->second] += 1;
  }
  for (auto& f : a.real_frequency) f = n_real > 0 ? f / n_real : 0;
  for (auto& f : a.synthetic_frequency) f = n_syn > 0 ? f / n_syn : 0;
  return a;
}

}  // namespace

Grid make_grid(const TabularDataset& d, const std::string& feature, int resolution,
               GridKind kind) {
  std::size_t col = d.column_index(feature);
  Grid grid;
  grid.feature = feature;
  grid.feature_index = col;
  const auto& cs = d.schema()[col];

  if (cs.kind == ColumnKind::Categorical || kind == GridKind::Categories) {
    if (cs.kind != ColumnKind::Categorical) {
      throw ValidationError("make_grid: category grid on numeric column '" + feature + "'");
    }
    grid.kind = GridKind::Categories;
    // Classes in descending frequency order; "unknown" included when present.
    std::vector<double> counts(cs.categories.size() + 1, 0.0);
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
      double v = d.cell(r, col);
      counts[v < 0 ? cs.categories.size() : static_cast<std::size_t>(v)] += 1;
    }
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (k == cs.categories.size() && counts[k] == 0) continue;  // unknown absent
      order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (counts[a] != counts[b]) return counts[a] > counts[b];
      return a < b;
    });
    for (std::size_t k : order) {
      if (k == cs.categories.size()) {
        grid.points.push_back(kUnknownCategory);
        grid.labels.push_back(kUnknownLabel);
      } else {
        grid.points.push_back(static_cast<double>(k));
        grid.labels.push_back(cs.categories[k]);
      }
    }
    return grid;
  }

  if (resolution < 2) throw ValidationError("make_grid: resolution must be >= 2");
  grid.kind = kind;
  std::vector<double> values = column_values(d, col);
  std::sort(values.begin(), values.end());
  if (values.front() == values.back()) {
    grid.points.push_back(values.front());
    grid.constant_feature = true;
    return grid;
  }
  if (kind == GridKind::Uniform) {
    for (int k = 0; k < resolution; ++k) {
      grid.points.push_back(values.front() + (values.back() - values.front()) *
                                                 static_cast<double>(k) / (resolution - 1));
    }
  } else {
    for (int k = 0; k < resolution; ++k) {
      grid.points.push_back(
          observed_quantile(values, static_cast<double>(k) / (resolution - 1)));
    }
  }
  grid.points.erase(std::unique(grid.points.begin(), grid.points.end()), grid.points.end());
  return grid;
}

EffectResult ice(const PredictFn& model, const DetectionDataset& d, const std::string& feature,
                 const Grid& grid, std::size_t instance_sample, std::uint64_t seed) {
  if (grid.feature != feature || grid.feature_index != d.data.column_index(feature)) {
    throw ValidationError("ice: grid was built for a different feature");
  }
  EffectResult effect;
  effect.grid = grid;

  // Stratified instance sample.
  std::vector<std::size_t> rows;
  if (instance_sample >= d.data.n_rows()) {
    rows.resize(d.data.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  } else {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < d.labels.size(); ++i) {
      by_class[d.labels[i] == 1 ? 1 : 0].push_back(i);
    }
    Rng rng(seed);
    for (int cls = 0; cls < 2; ++cls) {
      auto want = instance_sample / 2 + (cls == 1 ? instance_sample % 2 : 0);
      Rng fork = rng.fork(static_cast<std::uint64_t>(cls));
      auto take = fork.sample_indices(by_class[cls].size(),
                                      std::min(want, by_class[cls].size()));
      for (std::size_t k : take) rows.push_back(by_class[cls][k]);
    }
    std::sort(rows.begin(), rows.end());
  }
  if (rows.empty()) throw ValidationError("ice: no instances selected");

  effect.instance_rows = rows;
  for (std::size_t i : rows) effect.instance_labels.push_back(d.labels[i]);
  effect.ice.assign(rows.size(), std::vector<double>(grid.points.size(), 0.0));

  // One batched model call per grid value with the feature column overwritten.
  TabularDataset batch = d.data.select_rows(rows);
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    for (std::size_t r = 0; r < batch.n_rows(); ++r) {
      batch.set_cell(r, grid.feature_index, grid.points[g]);
    }
    auto preds = model(batch);
    for (std::size_t r = 0; r < preds.size(); ++r) effect.ice[r][g] = preds[r];
  }

  if (grid.kind == GridKind::Categories) {
    effect.annotation = categorical_annotation(d, grid.feature_index, grid);
  } else {
    effect.annotation = numeric_annotation(d, grid.feature_index);
  }
  effect.notes.push_back(
      "ICE/PDP permute the feature marginally; interpret with care under correlated features");
  return effect;
}

void pdp(EffectResult& effect, double delta) {
  if (effect.ice.empty()) throw ValidationError("pdp: ice curves not computed");
  effect.delta = delta;
  effect.pdp.assign(effect.grid.points.size(), 0.0);
  for (const auto& curve : effect.ice) {
    for (std::size_t g = 0; g < curve.size(); ++g) effect.pdp[g] += curve[g];
  }
  for (auto& v : effect.pdp) v /= static_cast<double>(effect.ice.size());

  effect.flags.clear();
  if (effect.grid.kind == GridKind::Categories) {
    for (std::size_t g = 0; g < effect.pdp.size(); ++g) {
      double v = effect.pdp[g];
      if (v < 0.5 - delta || v > 0.5 + delta) {
        RegionFlag flag;
        flag.feature = effect.grid.feature;
        flag.kind = v < 0.5 ? RegionFlagKind::UnrealisticSynthetic
                            : RegionFlagKind::Underrepresented;
        flag.category = effect.grid.labels[g];
        flag.extreme_pdp = v;
        effect.flags.push_back(std::move(flag));
      }
    }
    return;
  }

  // Contiguous out-of-band grid runs become one flag each.
  std::size_t g = 0;
  while (g < effect.pdp.size()) {
    double v = effect.pdp[g];
    int side = v < 0.5 - delta ? -1 : (v > 0.5 + delta ? 1 : 0);
    if (side == 0) {
      ++g;
      continue;
    }
    std::size_t start = g;
    double extreme = v;
    while (g < effect.pdp.size()) {
      double w = effect.pdp[g];
      int ws = w < 0.5 - delta ? -1 : (w > 0.5 + delta ? 1 : 0);
      if (ws != side) break;
      extreme = side < 0 ? std::min(extreme, w) : std::max(extreme, w);
      ++g;
    }
    RegionFlag flag;
    flag.feature = effect.grid.feature;
    flag.kind = side < 0 ? RegionFlagKind::UnrealisticSynthetic
                         : RegionFlagKind::Underrepresented;
    flag.lo = effect.grid.points[start];
    flag.hi = effect.grid.points[g - 1];
    flag.extreme_pdp = extreme;
    effect.flags.push_back(std::move(flag));
  }
}

EffectResult categorical_effect(const PredictFn& model, const DetectionDataset& d,
                                const std::string& feature, std::size_t instance_sample,
                                std::uint64_t seed, double delta) {
  std::size_t col = d.data.column_index(feature);
  if (d.data.schema()[col].kind != ColumnKind::Categorical) {
    throw ValidationError("categorical_effect: column '" + feature + "' is numeric");
  }
  Grid grid = make_grid(d.data, feature, 2, GridKind::Categories);
  EffectResult effect = ice(model, d, feature, grid, instance_sample, seed);
  pdp(effect, delta);
  return effect;
}

// --- text / JSON ------------------------------------------------------------

std::string RegionFlag::text() const {
  std::string what = kind == RegionFlagKind::UnrealisticSynthetic
                         ? "unrealistic synthetic region"
                         : "underrepresented region";
  if (!category.empty()) {
    return what + ": " + feature + " = " + category + " (PDP " + format_double(extreme_pdp) + ")";
  }
  return what + ": " + feature + " in [" + format_double(lo) + ", " + format_double(hi) +
         "] (PDP " + format_double(extreme_pdp) + ")";
}

nlohmann::ordered_json Grid::to_json() const {
  nlohmann::ordered_json j;
  j["feature"] = feature;
  switch (kind) {
    case GridKind::Quantile: j["kind"] = "quantile"; break;
    case GridKind::Uniform: j["kind"] = "uniform"; break;
    case GridKind::Categories: j["kind"] = "categories"; break;
  }
  if (kind == GridKind::Categories) {
    j["labels"] = labels;
  } else {
    j["points"] = points;
    j["constant_feature"] = constant_feature;
  }
  return j;
}

nlohmann::ordered_json EffectResult::to_json() const {
  nlohmann::ordered_json j;
  j["grid"] = grid.to_json();
  j["pdp"] = pdp;
  j["delta"] = delta;
  j["instance_labels"] = instance_labels;
  j["ice"] = ice;
  nlohmann::ordered_json flag_arr = nlohmann::ordered_json::array();
  for (const auto& f : flags) {
    nlohmann::ordered_json jf;
    jf["feature"] = f.feature;
    jf["kind"] = f.kind == RegionFlagKind::UnrealisticSynthetic ? "unrealistic_synthetic_region"
                                                                : "underrepresented_region";
    if (!f.category.empty()) {
      jf["category"] = f.category;
    } else {
      jf["lo"] = f.lo;
      jf["hi"] = f.hi;
    }
    jf["extreme_pdp"] = f.extreme_pdp;
    jf["text"] = f.text();
    flag_arr.push_back(std::move(jf));
  }
  j["flags"] = std::move(flag_arr);
  nlohmann::ordered_json ann;
  if (!annotation.bin_edges.empty()) ann["bin_edges"] = annotation.bin_edges;
  ann["real_frequency"] = annotation.real_frequency;
  ann["synthetic_frequency"] = annotation.synthetic_frequency;
  j["marginals"] = std::move(ann);
  j["notes"] = notes;
  return j;
}

}  // namespace synaudit
