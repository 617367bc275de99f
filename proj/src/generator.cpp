#include "synaudit/generator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

// 10-bin quantile discretization for the mutual-information ordering.
std::vector<int> discretize(const TabularDataset& d, std::size_t col) {
  std::vector<int> out(d.n_rows());
  if (d.schema()[col].kind == ColumnKind::Categorical) {
    for (std::size_t r = 0; r < d.n_rows(); ++r) {
      double v = d.cell(r, col);
      out[r] = v < 0 ? static_cast<int>(d.schema()[col].categories.size())
                     : static_cast<int>(v);
    }
    return out;
  }
  std::vector<double> sorted;
  sorted.reserve(d.n_rows());
  for (std::size_t r = 0; r < d.n_rows(); ++r) sorted.push_back(d.cell(r, col));
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int b = 1; b < 10; ++b) edges.push_back(quantile(sorted, b / 10.0));
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    double v = d.cell(r, col);
    int bin = 0;
    while (bin < static_cast<int>(edges.size()) && v > edges[bin]) ++bin;
    out[r] = bin;
  }
  return out;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  auto n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    pa[a[i]] += 1;
    pb[b[i]] += 1;
  }
  double mi = 0;
  for (const auto& [key, cnt] : joint) {
    double pxy = cnt / n;
    mi += pxy * std::log(pxy * n * n / (pa[key.first] * pb[key.second]));
  }
  return std::max(mi, 0.0);
}

struct CartTarget {
  bool numeric;
  std::vector<double> values;  // target cell per row
  std::size_t n_classes = 0;   // categorical targets (incl. unknown slot)
};

// Impurity of a row subset: variance for numeric targets, Gini for categorical.
double impurity(const CartTarget& target, const std::vector<std::size_t>& rows) {
  auto n = static_cast<double>(rows.size());
  if (target.numeric) {
    double mean = 0;
    for (std::size_t i : rows) mean += target.values[i];
    mean /= n;
    double ss = 0;
    for (std::size_t i : rows) {
      double d = target.values[i] - mean;
      ss += d * d;
    }
    return ss / n;
  }
  std::vector<double> counts(target.n_classes, 0.0);
  for (std::size_t i : rows) {
    double v = target.values[i];
    counts[v < 0 ? target.n_classes - 1 : static_cast<std::size_t>(v)] += 1;
  }
  double g = 1.0;
  for (double c : counts) g -= (c / n) * (c / n);
  return g;
}

class CartBuilder {
 public:
  CartBuilder(const TabularDataset& data, const std::vector<std::size_t>& predictors,
              const CartTarget& target, const SamplerConfig& cfg)
      : data_(data), predictors_(predictors), target_(target), cfg_(cfg) {}

  ChainModel::ColumnModel build(std::size_t column) {
    ChainModel::ColumnModel model;
    model.column = column;
    std::vector<std::size_t> rows(data_.n_rows());
    std::iota(rows.begin(), rows.end(), 0);
    grow(model, rows, 0);
    return model;
  }

 private:
  std::int32_t grow(ChainModel::ColumnModel& model, std::vector<std::size_t>& rows, int depth) {
    auto id = static_cast<std::int32_t>(model.tree.nodes.size());
    model.tree.nodes.push_back(TreeNode{});
    model.tree.nodes[id].cover = static_cast<double>(rows.size());

    bool stop = depth >= cfg_.max_depth ||
                rows.size() < static_cast<std::size_t>(2 * cfg_.min_leaf) ||
                predictors_.empty();
    double parent_impurity = stop ? 0.0 : impurity(target_, rows);
    if (!stop && parent_impurity <= 1e-15) stop = true;

    TreeNode split;
    double best_gain = 1e-12;
    std::vector<std::size_t> best_left, best_right;

    if (!stop) {
      auto total = static_cast<double>(rows.size());
      for (std::size_t c : predictors_) {
        auto try_split = [&](const TreeNode& cand) {
          std::vector<std::size_t> l, r;
          for (std::size_t i : rows) {
            (model.tree.route(cand, data_.cell(i, c)) == cand.left ? l : r).push_back(i);
          }
          if (l.size() < static_cast<std::size_t>(cfg_.min_leaf) ||
              r.size() < static_cast<std::size_t>(cfg_.min_leaf)) {
            return;
          }
          double gain = parent_impurity -
                        (static_cast<double>(l.size()) / total) * impurity(target_, l) -
                        (static_cast<double>(r.size()) / total) * impurity(target_, r);
          if (gain > best_gain + 1e-15) {
            best_gain = gain;
            split = cand;
            best_left = std::move(l);
            best_right = std::move(r);
          }
        };

        if (data_.schema()[c].kind == ColumnKind::Numeric) {
          std::vector<double> vals;
          vals.reserve(rows.size());
          for (std::size_t i : rows) vals.push_back(data_.cell(i, c));
          std::sort(vals.begin(), vals.end());
          vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
          if (vals.size() < 2) continue;
          // Thresholds at up to 16 quantile cut points between distinct values.
          std::size_t n_cuts = std::min<std::size_t>(16, vals.size() - 1);
          for (std::size_t k = 1; k <= n_cuts; ++k) {
            std::size_t at = k * (vals.size() - 1) / (n_cuts + 1) + 1;
            at = std::min(at, vals.size() - 1);
            TreeNode cand;
            cand.feature = static_cast<std::int32_t>(c);
            cand.threshold = 0.5 * (vals[at - 1] + vals[at]);
            cand.left = 0;
            cand.right = 1;
            try_split(cand);
          }
        } else {
          // Order categories by target statistic, scan prefixes.
          std::size_t n_cats = data_.schema()[c].categories.size();
          std::vector<double> cnt(n_cats + 1, 0), stat(n_cats + 1, 0);
          double majority = 0;
          if (!target_.numeric) {
            std::vector<double> cls(target_.n_classes, 0.0);
            for (std::size_t i : rows) {
              double v = target_.values[i];
              cls[v < 0 ? target_.n_classes - 1 : static_cast<std::size_t>(v)] += 1;
            }
            majority = static_cast<double>(
                std::max_element(cls.begin(), cls.end()) - cls.begin());
          }
          for (std::size_t i : rows) {
            double v = data_.cell(i, c);
            std::size_t slot = v < 0 ? n_cats : static_cast<std::size_t>(v);
            cnt[slot] += 1;
            if (target_.numeric) {
              stat[slot] += target_.values[i];
            } else {
              double tv = target_.values[i];
              double cls = tv < 0 ? static_cast<double>(target_.n_classes - 1) : tv;
              stat[slot] += cls == majority ? 1.0 : 0.0;
            }
          }
          std::vector<std::size_t> present;
          for (std::size_t k = 0; k <= n_cats; ++k) {
            if (cnt[k] > 0) present.push_back(k);
          }
          if (present.size() < 2) continue;
          std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
            double ra = stat[a] / cnt[a], rb = stat[b] / cnt[b];
            if (ra != rb) return ra < rb;
            return a < b;
          });
          TreeNode cand;
          cand.feature = static_cast<std::int32_t>(c);
          cand.categorical = true;
          cand.default_left = false;
          cand.left = 0;
          cand.right = 1;
          for (std::size_t k = 0; k + 1 < present.size(); ++k) {
            if (present[k] == n_cats) {
              cand.default_left = true;
            } else {
              cand.left_categories.push_back(static_cast<std::int32_t>(present[k]));
              std::sort(cand.left_categories.begin(), cand.left_categories.end());
            }
            if (cand.left_categories.empty()) continue;
            try_split(cand);
          }
        }
      }
    }

    if (best_left.empty()) {
      // Leaf: pool of the target values in this cell.
      std::vector<double> pool;
      pool.reserve(rows.size());
      for (std::size_t i : rows) pool.push_back(target_.values[i]);
      std::sort(pool.begin(), pool.end());
      model.tree.nodes[id].value = static_cast<double>(model.pools.size());
      model.pools.push_back(std::move(pool));
      return id;
    }

    rows.clear();
    rows.shrink_to_fit();
    std::int32_t left_id = grow(model, best_left, depth + 1);
    std::int32_t right_id = grow(model, best_right, depth + 1);
    model.tree.nodes[id].feature = split.feature;
    model.tree.nodes[id].categorical = split.categorical;
    model.tree.nodes[id].threshold = split.threshold;
    model.tree.nodes[id].left_categories = split.left_categories;
    model.tree.nodes[id].default_left = split.default_left;
    model.tree.nodes[id].left = left_id;
    model.tree.nodes[id].right = right_id;
    return id;
  }

  const TabularDataset& data_;
  const std::vector<std::size_t>& predictors_;
  const CartTarget& target_;
  const SamplerConfig& cfg_;
};

}  // namespace

ChainModel fit_chain(const TabularDataset& data, const SamplerConfig& config) {
  if (data.n_rows() == 0) throw ValidationError("fit_chain: empty data");
  if (data.n_rows() < static_cast<std::size_t>(config.min_leaf)) {
    throw ValidationError("fit_chain: fewer rows than min_leaf");
  }
  if (config.max_depth < 1 || config.min_leaf < 1) {
    throw ValidationError("fit_chain: depth and min_leaf must be >= 1");
  }

  ChainModel model;
  model.schema_ = data.schema();
  model.mode_ = config.mode;
  const std::size_t p = data.n_cols();

  if (!config.column_order.empty()) {
    if (config.column_order.size() != p) {
      throw ValidationError("fit_chain: column_order must list every column once");
    }
    for (const auto& name : config.column_order) {
      model.order_.push_back(data.column_index(name));
    }
    std::vector<std::size_t> sorted = model.order_;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < p; ++i) {
      if (sorted[i] != i) throw ValidationError("fit_chain: column_order repeats a column");
    }
  } else {
    // Descending total mutual information with the remaining columns.
    std::vector<std::vector<int>> disc(p);
    for (std::size_t c = 0; c < p; ++c) disc[c] = discretize(data, c);
    std::vector<double> score(p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a + 1; b < p; ++b) {
        double mi = mutual_information(disc[a], disc[b]);
        score[a] += mi;
        score[b] += mi;
      }
    }
    model.order_.resize(p);
    std::iota(model.order_.begin(), model.order_.end(), 0);
    std::sort(model.order_.begin(), model.order_.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return a < b;
    });
  }

  model.col_min_.assign(p, 0.0);
  model.col_max_.assign(p, 0.0);
  model.train_values_.assign(p, {});
  for (std::size_t c = 0; c < p; ++c) {
    std::vector<double>& vals = model.train_values_[c];
    vals.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) vals.push_back(data.cell(r, c));
    std::sort(vals.begin(), vals.end());
    model.col_min_[c] = vals.front();
    model.col_max_[c] = vals.back();
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  }

  for (std::size_t k = 0; k < p; ++k) {
    std::size_t col = model.order_[k];
    CartTarget target;
    target.numeric = data.schema()[col].kind == ColumnKind::Numeric;
    target.n_classes = target.numeric ? 0 : data.schema()[col].categories.size() + 1;
    target.values.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) target.values.push_back(data.cell(r, col));

    std::vector<std::size_t> predictors;
    if (config.mode == SamplerConfig::Mode::CartChain) {
      predictors.assign(model.order_.begin(), model.order_.begin() + k);
      std::sort(predictors.begin(), predictors.end());
    }
    CartBuilder builder(data, predictors, target, config);
    model.columns_.push_back(builder.build(col));
  }
  return model;
}

double ChainModel::numeric_range(std::size_t column) const {
  return col_max_[column] - col_min_[column];
}

std::vector<double> ChainModel::numeric_ranges() const {
  std::vector<double> out(schema_.size(), 0.0);
  for (std::size_t c = 0; c < schema_.size(); ++c) out[c] = numeric_range(c);
  return out;
}

TabularDataset ChainModel::sample(std::size_t n, std::uint64_t seed,
                                  const std::vector<std::optional<double>>& fixed) const {
  if (!fixed.empty() && fixed.size() != schema_.size()) {
    throw ValidationError("sample: fixed vector width mismatch");
  }
  for (std::size_t c = 0; c < fixed.size(); ++c) {
    if (!fixed[c]) continue;
    double v = *fixed[c];
    if (schema_[c].kind == ColumnKind::Numeric) {
      if (!std::isfinite(v)) throw ValidationError("sample: fixed numeric value not finite");
    } else if (v >= static_cast<double>(schema_[c].categories.size()) ||
               (v < 0 && v != kUnknownCategory)) {
      throw ValidationError("sample: fixed category outside schema");
    }
  }

  TabularDataset out(schema_, Provenance::Synthetic);
  Rng rng(seed);
  std::vector<double> row(schema_.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng row_rng = rng.fork(i);
    for (std::size_t k = 0; k < order_.size(); ++k) {
      std::size_t col = order_[k];
      if (!fixed.empty() && fixed[col]) {
        row[col] = *fixed[col];
        continue;
      }
      const auto& cm = columns_[k];
      std::int32_t at = 0;
      while (!cm.tree.nodes[at].is_leaf()) {
        const auto& node = cm.tree.nodes[at];
        at = cm.tree.route(node, row[node.feature]);
      }
      const auto& pool = cm.pools[static_cast<std::size_t>(cm.tree.nodes[at].value)];
      row[col] = pool[row_rng.uniform_index(pool.size())];
    }
    out.append_row(row);
  }
  return out;
}

bool ChainModel::value_in_training_pool(std::size_t column, double value) const {
  const auto& vals = train_values_[column];
  return std::binary_search(vals.begin(), vals.end(), value);
}

TabularDataset sample(const ChainModel& model, std::size_t n, std::uint64_t seed,
                      const std::vector<std::optional<double>>& fixed) {
  return model.sample(n, seed, fixed);
}

TabularDataset baseline_synthesize(const TabularDataset& real, SamplerConfig::Mode mode,
                                   std::size_t n, std::uint64_t seed) {
  SamplerConfig config;
  config.mode = mode;
  config.seed = seed;
  ChainModel chain = fit_chain(real, config);
  return chain.sample(n, seed);
}

// --- serialization ----------------------------------------------------------

nlohmann::ordered_json ChainModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "synaudit-chain";
  j["version"] = 1;
  j["mode"] = mode_ == SamplerConfig::Mode::Independent ? "independent" : "cart_chain";
  j["schema"] = schema_to_json(schema_);
  j["order"] = order_;
  j["col_min"] = col_min_;
  j["col_max"] = col_max_;
  nlohmann::ordered_json cols = nlohmann::ordered_json::array();
  for (const auto& cm : columns_) {
    nlohmann::ordered_json jc;
    jc["column"] = cm.column;
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& nd : cm.tree.nodes) {
      nlohmann::ordered_json jn;
      jn["feature"] = nd.feature;
      if (nd.feature >= 0) {
        if (nd.categorical) {
          jn["left_categories"] = nd.left_categories;
          jn["default_left"] = nd.default_left;
        } else {
          jn["threshold"] = nd.threshold;
        }
        jn["left"] = nd.left;
        jn["right"] = nd.right;
      } else {
        jn["pool"] = static_cast<std::size_t>(nd.value);
      }
      nodes.push_back(std::move(jn));
    }
    jc["nodes"] = std::move(nodes);
    jc["pools"] = cm.pools;
    cols.push_back(std::move(jc));
  }
  j["columns"] = std::move(cols);
  j["train_values"] = train_values_;
  return j;
}

ChainModel ChainModel::from_json(const nlohmann::ordered_json& j) {
  if (!j.contains("format") || j["format"] != "synaudit-chain") {
    throw ValidationError("chain file is not a synaudit-chain dump");
  }
  ChainModel m;
  m.schema_ = schema_from_json(j.at("schema"));
  m.mode_ = j.at("mode") == "independent" ? SamplerConfig::Mode::Independent
                                          : SamplerConfig::Mode::CartChain;
  m.order_ = j.at("order").get<std::vector<std::size_t>>();
  m.col_min_ = j.at("col_min").get<std::vector<double>>();
  m.col_max_ = j.at("col_max").get<std::vector<double>>();
  m.train_values_ = j.at("train_values").get<std::vector<std::vector<double>>>();
  for (const auto& jc : j.at("columns")) {
    ColumnModel cm;
    cm.column = jc.at("column").get<std::size_t>();
    for (const auto& jn : jc.at("nodes")) {
      TreeNode nd;
      nd.feature = jn.at("feature").get<std::int32_t>();
      if (nd.feature >= 0) {
        if (jn.contains("left_categories")) {
          nd.categorical = true;
          nd.left_categories = jn.at("left_categories").get<std::vector<std::int32_t>>();
          nd.default_left = jn.at("default_left").get<bool>();
        } else {
          nd.threshold = jn.at("threshold").get<double>();
        }
        nd.left = jn.at("left").get<std::int32_t>();
        nd.right = jn.at("right").get<std::int32_t>();
      } else {
        nd.value = static_cast<double>(jn.at("pool").get<std::size_t>());
      }
      cm.tree.nodes.push_back(std::move(nd));
    }
    cm.pools = jc.at("pools").get<std::vector<std::vector<double>>>();
    m.columns_.push_back(std::move(cm));
  }
  return m;
}

}  // namespace synaudit
