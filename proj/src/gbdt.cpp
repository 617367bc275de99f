#include "synaudit/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "synaudit/mathx.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

void TrainConfig::validate() const {
  if (n_trees < 0) throw ValidationError("config: n_trees must be >= 0");
  if (max_depth < 1) throw ValidationError("config: max_depth must be >= 1");
  if (!(learning_rate > 0)) throw ValidationError("config: learning_rate must be > 0");
  if (min_child_weight < 0) throw ValidationError("config: min_child_weight must be >= 0");
  if (l1 < 0 || l2 < 0) throw ValidationError("config: regularization must be >= 0");
  if (!(subsample > 0 && subsample <= 1) || !(colsample > 0 && colsample <= 1)) {
    throw ValidationError("config: subsample rates must be in (0, 1]");
  }
  if (early_stopping_rounds < 0) throw ValidationError("config: early_stopping_rounds >= 0");
}

std::int32_t Tree::route(const TreeNode& node, double cell) const {
  if (node.categorical) {
    if (cell < 0) return node.default_left ? node.left : node.right;
    auto idx = static_cast<std::int32_t>(cell);
    bool in_left = std::binary_search(node.left_categories.begin(), node.left_categories.end(), idx);
    return in_left ? node.left : node.right;
  }
  return cell < node.threshold ? node.left : node.right;
}

double Tree::evaluate(std::span<const double> row) const {
  std::int32_t at = 0;
  while (!nodes[at].is_leaf()) at = route(nodes[at], row[nodes[at].feature]);
  return nodes[at].value;
}

int Tree::max_depth() const {
  std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
  int depth = 0;
  while (!stack.empty()) {
    auto [at, d] = stack.back();
    stack.pop_back();
    depth = std::max(depth, d);
    if (!nodes[at].is_leaf()) {
      stack.push_back({nodes[at].left, d + 1});
      stack.push_back({nodes[at].right, d + 1});
    }
  }
  return depth;
}

double TreeEnsembleModel::margin_one(std::span<const double> row) const {
  double m = base_score;
  for (const auto& t : trees) m += t.evaluate(row);
  return m;
}

double TreeEnsembleModel::predict_one(std::span<const double> row) const {
  return sigmoid(margin_one(row));
}

std::vector<double> TreeEnsembleModel::predict_margin(const TabularDataset& rows) const {
  if (schema_fingerprint(rows.schema()) != fingerprint) {
    throw ValidationError("predict: dataset schema does not match the model fingerprint");
  }
  std::vector<double> out(rows.n_rows());
  for (std::size_t i = 0; i < rows.n_rows(); ++i) out[i] = margin_one(rows.row(i));
  return out;
}

std::vector<double> TreeEnsembleModel::predict_proba(const TabularDataset& rows) const {
  auto out = predict_margin(rows);
  for (auto& v : out) v = sigmoid(v);
  return out;
}

PredictFn TreeEnsembleModel::predictor() const {
  return [model = *this](const TabularDataset& rows) { return model.predict_proba(rows); };
}

PredictFn TreeEnsembleModel::margin_predictor() const {
  return [model = *this](const TabularDataset& rows) { return model.predict_margin(rows); };
}

// --- serialization ----------------------------------------------------------

nlohmann::ordered_json TreeEnsembleModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "synaudit-gbdt";
  j["version"] = 1;
  j["base_score"] = base_score;
  j["seed"] = seed;
  j["schema_fingerprint"] = fingerprint;
  nlohmann::ordered_json cfg;
  cfg["n_trees"] = config.n_trees;
  cfg["max_depth"] = config.max_depth;
  cfg["learning_rate"] = config.learning_rate;
  cfg["min_child_weight"] = config.min_child_weight;
  cfg["l1"] = config.l1;
  cfg["l2"] = config.l2;
  cfg["subsample"] = config.subsample;
  cfg["colsample"] = config.colsample;
  cfg["early_stopping_rounds"] = config.early_stopping_rounds;
  j["config"] = std::move(cfg);
  j["schema"] = schema_to_json(schema);
  nlohmann::ordered_json jtrees = nlohmann::ordered_json::array();
  for (const auto& t : trees) {
    nlohmann::ordered_json jnodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nlohmann::ordered_json jn;
      if (n.is_leaf()) {
        jn["value"] = n.value;
      } else {
        jn["feature"] = n.feature;
        if (n.categorical) {
          jn["left_categories"] = n.left_categories;
        } else {
          jn["threshold"] = n.threshold;
        }
        jn["left"] = n.left;
        jn["right"] = n.right;
        jn["default_left"] = n.default_left;
      }
      jn["cover"] = n.cover;
      jnodes.push_back(std::move(jn));
    }
    jtrees.push_back(std::move(jnodes));
  }
  j["trees"] = std::move(jtrees);
  return j;
}

TreeEnsembleModel TreeEnsembleModel::from_json(const nlohmann::ordered_json& j) {
  if (!j.contains("format") || j["format"] != "synaudit-gbdt") {
    throw ValidationError("model file is not a synaudit-gbdt dump");
  }
  TreeEnsembleModel m;
  m.base_score = j.at("base_score").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.fingerprint = j.at("schema_fingerprint").get<std::string>();
  const auto& cfg = j.at("config");
  m.config.n_trees = cfg.at("n_trees").get<int>();
  m.config.max_depth = cfg.at("max_depth").get<int>();
  m.config.learning_rate = cfg.at("learning_rate").get<double>();
  m.config.min_child_weight = cfg.at("min_child_weight").get<double>();
  m.config.l1 = cfg.at("l1").get<double>();
  m.config.l2 = cfg.at("l2").get<double>();
  m.config.subsample = cfg.at("subsample").get<double>();
  m.config.colsample = cfg.at("colsample").get<double>();
  m.config.early_stopping_rounds = cfg.at("early_stopping_rounds").get<int>();
  m.schema = schema_from_json(j.at("schema"));
  for (const auto& jnodes : j.at("trees")) {
    Tree t;
    for (const auto& jn : jnodes) {
      TreeNode n;
      if (jn.contains("feature")) {
        n.feature = jn.at("feature").get<std::int32_t>();
        n.categorical = jn.contains("left_categories");
        if (n.categorical) {
          n.left_categories = jn.at("left_categories").get<std::vector<std::int32_t>>();
        } else {
          n.threshold = jn.at("threshold").get<double>();
        }
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        n.default_left = jn.at("default_left").get<bool>();
      }
      if (jn.contains("value")) n.value = jn.at("value").get<double>();
      n.cover = jn.at("cover").get<double>();
      t.nodes.push_back(std::move(n));
    }
    m.trees.push_back(std::move(t));
  }
  return m;
}

void TreeEnsembleModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write model file: " + path);
  out << to_json().dump(2) << '\n';
}

TreeEnsembleModel TreeEnsembleModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file " + path + ": " + e.what());
  }
  return from_json(j);
}

// --- training ---------------------------------------------------------------

namespace {

struct SplitCandidate {
  double gain = 0.0;
  std::int32_t feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  std::vector<std::int32_t> left_categories;
  bool default_left = true;
  double left_grad = 0, left_hess = 0;
  double left_count = 0;
  bool valid() const { return feature >= 0; }
};

struct NodeStats {
  double grad = 0, hess = 0;
  double count = 0;
};

double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double leaf_score(double g, double h, double l1, double l2) {
  double t = soft_threshold(g, l1);
  return t * t / (h + l2);
}

double leaf_weight(double g, double h, double l1, double l2) {
  return -soft_threshold(g, l1) / (h + l2);
}

class GbdtBuilder {
 public:
  GbdtBuilder(const TabularDataset& data, const std::vector<std::size_t>& rows,
              const std::vector<int>& labels, const TrainConfig& cfg)
      : data_(data), cfg_(cfg), n_(rows.size()), p_(data.n_cols()) {
    feat_.assign(p_, std::vector<double>(n_));
    y_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto r = data.row(rows[i]);
      for (std::size_t c = 0; c < p_; ++c) feat_[c][i] = r[c];
      y_[i] = labels[i];
    }
    presorted_.resize(p_);
    for (std::size_t c = 0; c < p_; ++c) {
      if (data.schema()[c].kind != ColumnKind::Numeric) continue;
      auto& order = presorted_[c];
      order.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) order[i] = i;
      const auto& vals = feat_[c];
      std::sort(order.begin(), order.end(), [&vals](std::size_t a, std::size_t b) {
        if (vals[a] != vals[b]) return vals[a] < vals[b];
        return a < b;
      });
    }
  }

  std::size_t n_rows() const { return n_; }
  int label(std::size_t i) const { return y_[i]; }
  double feature_value(std::size_t c, std::size_t i) const { return feat_[c][i]; }

  Tree build_tree(const std::vector<double>& grad, const std::vector<double>& hess,
                  const std::vector<char>& in_tree, const std::vector<std::size_t>& columns) {
    Tree tree;
    node_of_row_.assign(n_, -1);
    NodeStats root;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!in_tree[i]) continue;
      node_of_row_[i] = 0;
      root.grad += grad[i];
      root.hess += hess[i];
      root.count += 1;
    }
    tree.nodes.push_back(TreeNode{});
    tree.nodes[0].cover = root.count;
    std::vector<std::int32_t> frontier{0};
    std::vector<NodeStats> stats{root};

    for (int depth = 0; depth < cfg_.max_depth && !frontier.empty(); ++depth) {
      auto best = find_splits(tree, frontier, stats, grad, hess, in_tree, columns);

      std::vector<std::int32_t> next_frontier;
      std::vector<NodeStats> next_stats;
      std::vector<std::int32_t> slot_of_node(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_node[frontier[s]] = s;

      for (std::size_t s = 0; s < frontier.size(); ++s) {
        if (!best[s].valid()) continue;
        auto& node = tree.nodes[frontier[s]];
        node.feature = best[s].feature;
        node.categorical = best[s].categorical;
        node.threshold = best[s].threshold;
        node.left_categories = best[s].left_categories;
        node.default_left = best[s].default_left;
        node.left = static_cast<std::int32_t>(tree.nodes.size());
        node.right = node.left + 1;
        TreeNode left_child, right_child;
        left_child.cover = best[s].left_count;
        right_child.cover = stats[s].count - best[s].left_count;
        tree.nodes.push_back(left_child);
        tree.nodes.push_back(right_child);
        next_frontier.push_back(node.left);
        next_frontier.push_back(node.right);
        next_stats.push_back({best[s].left_grad, best[s].left_hess, best[s].left_count});
        next_stats.push_back({stats[s].grad - best[s].left_grad,
                              stats[s].hess - best[s].left_hess,
                              stats[s].count - best[s].left_count});
      }
      if (next_frontier.empty()) break;

      // Route rows to children.
      for (std::size_t i = 0; i < n_; ++i) {
        std::int32_t at = node_of_row_[i];
        if (at < 0) continue;
        std::int32_t slot = at < static_cast<std::int32_t>(slot_of_node.size()) ? slot_of_node[at] : -1;
        if (slot < 0 || !best[slot].valid()) continue;
        const auto& node = tree.nodes[at];
        node_of_row_[i] = tree.route(node, feat_[node.feature][i]);
      }
      frontier = std::move(next_frontier);
      stats = std::move(next_stats);
    }

    // Fill leaf values over whatever remained unsplit.
    fill_leaves(tree, grad, hess, in_tree);
    return tree;
  }

 private:
  void fill_leaves(Tree& tree, const std::vector<double>& grad, const std::vector<double>& hess,
                   const std::vector<char>& in_tree) {
    std::vector<double> leaf_grad(tree.nodes.size(), 0.0);
    std::vector<double> leaf_hess(tree.nodes.size(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!in_tree[i]) continue;
      std::int32_t at = node_of_row_[i];
      leaf_grad[at] += grad[i];
      leaf_hess[at] += hess[i];
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      auto& node = tree.nodes[k];
      if (!node.is_leaf()) continue;
      node.value =
          cfg_.learning_rate * leaf_weight(leaf_grad[k], leaf_hess[k], cfg_.l1, cfg_.l2);
    }
  }

  std::vector<SplitCandidate> find_splits(const Tree& tree,
                                          const std::vector<std::int32_t>& frontier,
                                          const std::vector<NodeStats>& stats,
                                          const std::vector<double>& grad,
                                          const std::vector<double>& hess,
                                          const std::vector<char>& in_tree,
                                          const std::vector<std::size_t>& columns) {
    std::vector<SplitCandidate> best(frontier.size());
    std::vector<std::int32_t> slot_of_node(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of_node[frontier[s]] = s;

    auto gain_of = [this](double gl, double hl, double gr, double hr, double gp, double hp) {
      return 0.5 * (leaf_score(gl, hl, cfg_.l1, cfg_.l2) + leaf_score(gr, hr, cfg_.l1, cfg_.l2) -
                    leaf_score(gp, hp, cfg_.l1, cfg_.l2));
    };

    for (std::size_t c : columns) {
      if (data_.schema()[c].kind == ColumnKind::Numeric) {
        struct Scan {
          double g = 0, h = 0, cnt = 0;
          double last = 0;
          bool seen = false;
        };
        std::vector<Scan> scan(frontier.size());
        for (std::size_t i : presorted_[c]) {
          std::int32_t at = node_of_row_[i];
          if (at < 0 || !in_tree[i]) continue;
          std::int32_t slot = slot_of_node[at];
          if (slot < 0) continue;
          auto& s = scan[slot];
          double v = feat_[c][i];
          if (s.seen && v != s.last && s.cnt > 0 && s.cnt < stats[slot].count) {
            double gl = s.g, hl = s.h;
            double gr = stats[slot].grad - gl, hr = stats[slot].hess - hl;
            if (hl >= cfg_.min_child_weight && hr >= cfg_.min_child_weight) {
              double gain = gain_of(gl, hl, gr, hr, stats[slot].grad, stats[slot].hess);
              if (gain > best[slot].gain + 1e-12 && gain > 1e-12) {
                best[slot] = SplitCandidate{};
                best[slot].gain = gain;
                best[slot].feature = static_cast<std::int32_t>(c);
                best[slot].threshold = 0.5 * (s.last + v);
                best[slot].left_grad = gl;
                best[slot].left_hess = hl;
                best[slot].left_count = s.cnt;
              }
            }
          }
          s.g += grad[i];
          s.h += hess[i];
          s.cnt += 1;
          s.last = v;
          s.seen = true;
        }
      } else {
        const std::size_t n_cats = data_.schema()[c].categories.size();
        const std::size_t unknown_slot = n_cats;  // pseudo-category for "unknown"
        struct CatStat {
          double g = 0, h = 0, cnt = 0;
        };
        std::vector<std::vector<CatStat>> per_node(frontier.size(),
                                                   std::vector<CatStat>(n_cats + 1));
        for (std::size_t i = 0; i < n_; ++i) {
          std::int32_t at = node_of_row_[i];
          if (at < 0 || !in_tree[i]) continue;
          std::int32_t slot = slot_of_node[at];
          if (slot < 0) continue;
          double v = feat_[c][i];
          std::size_t idx = v < 0 ? unknown_slot : static_cast<std::size_t>(v);
          auto& cs = per_node[slot][idx];
          cs.g += grad[i];
          cs.h += hess[i];
          cs.cnt += 1;
        }
        for (std::size_t slot = 0; slot < frontier.size(); ++slot) {
          std::vector<std::size_t> present;
          for (std::size_t k = 0; k <= n_cats; ++k) {
            if (per_node[slot][k].cnt > 0) present.push_back(k);
          }
          if (present.size() < 2) continue;
          // Fisher-style ordering by gradient-to-hessian ratio.
          std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
            double ra = per_node[slot][a].g / per_node[slot][a].h;
            double rb = per_node[slot][b].g / per_node[slot][b].h;
            if (ra != rb) return ra < rb;
            return a < b;
          });
          double gl = 0, hl = 0, cl = 0;
          bool unknown_left = false;
          std::vector<std::int32_t> left_set;
          for (std::size_t k = 0; k + 1 < present.size(); ++k) {
            const auto& cs = per_node[slot][present[k]];
            gl += cs.g;
            hl += cs.h;
            cl += cs.cnt;
            if (present[k] == unknown_slot) {
              unknown_left = true;
            } else {
              left_set.push_back(static_cast<std::int32_t>(present[k]));
            }
            double gr = stats[slot].grad - gl, hr = stats[slot].hess - hl;
            if (hl < cfg_.min_child_weight || hr < cfg_.min_child_weight) continue;
            double gain = gain_of(gl, hl, gr, hr, stats[slot].grad, stats[slot].hess);
            if (gain > best[slot].gain + 1e-12 && gain > 1e-12 && !left_set.empty()) {
              best[slot] = SplitCandidate{};
              best[slot].gain = gain;
              best[slot].feature = static_cast<std::int32_t>(c);
              best[slot].categorical = true;
              best[slot].left_categories = left_set;
              std::sort(best[slot].left_categories.begin(), best[slot].left_categories.end());
              best[slot].default_left = unknown_left;
              best[slot].left_grad = gl;
              best[slot].left_hess = hl;
              best[slot].left_count = cl;
            }
          }
        }
      }
    }
    return best;
  }

  const TabularDataset& data_;
  const TrainConfig& cfg_;
  std::size_t n_;
  std::size_t p_;
  std::vector<std::vector<double>> feat_;  // column-major
  std::vector<int> y_;
  std::vector<std::vector<std::size_t>> presorted_;
  std::vector<std::int32_t> node_of_row_;
};

double logloss_of(const std::vector<double>& margin, const std::vector<int>& y) {
  double s = 0;
  for (std::size_t i = 0; i < margin.size(); ++i) {
    double p = std::clamp(sigmoid(margin[i]), 1e-15, 1.0 - 1e-15);
    s += y[i] ? -std::log(p) : -std::log1p(-p);
  }
  return s / static_cast<double>(margin.size());
}

}  // namespace

TreeEnsembleModel fit_gbdt(const DetectionDataset& train, const TrainConfig& config,
                           FitDiagnostics* diagnostics) {
  config.validate();
  std::vector<std::size_t> rows =
      train.has_split() ? train.rows_in_split(false) : [&] {
        std::vector<std::size_t> all(train.labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }();
  if (rows.empty()) throw ValidationError("fit_gbdt: no training rows");

  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t i : rows) labels.push_back(train.labels[i]);
  double prior = 0;
  for (int v : labels) prior += v;
  prior /= static_cast<double>(labels.size());
  if (prior == 0.0 || prior == 1.0) {
    throw ValidationError("fit_gbdt: training data contains a single class");
  }

  Rng rng(config.seed);

  // Optional 10% early-stopping slice, stratified.
  std::vector<std::size_t> boost_local, valid_local;
  if (config.early_stopping_rounds > 0 && rows.size() >= 20) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < rows.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
    Rng es = rng.fork(0xe5);
    for (auto& cls : by_class) {
      es.shuffle(cls);
      auto n_val = std::max<std::size_t>(1, cls.size() / 10);
      for (std::size_t k = 0; k < cls.size(); ++k) {
        (k < n_val ? valid_local : boost_local).push_back(cls[k]);
      }
    }
    std::sort(boost_local.begin(), boost_local.end());
    std::sort(valid_local.begin(), valid_local.end());
  } else {
    boost_local.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) boost_local[i] = i;
  }

  std::vector<std::size_t> boost_rows, valid_rows;
  std::vector<int> boost_labels, valid_labels;
  for (std::size_t i : boost_local) {
    boost_rows.push_back(rows[i]);
    boost_labels.push_back(labels[i]);
  }
  for (std::size_t i : valid_local) {
    valid_rows.push_back(rows[i]);
    valid_labels.push_back(labels[i]);
  }

  double boost_prior = 0;
  for (int v : boost_labels) boost_prior += v;
  boost_prior /= static_cast<double>(boost_labels.size());
  if (boost_prior == 0.0 || boost_prior == 1.0) {
    throw ValidationError("fit_gbdt: early-stopping slice left a single class");
  }

  TreeEnsembleModel model;
  model.base_score = logit(std::clamp(prior, 1e-12, 1.0 - 1e-12));
  model.fingerprint = schema_fingerprint(train.data.schema());
  model.schema = train.data.schema();
  model.seed = config.seed;
  model.config = config;

  GbdtBuilder builder(train.data, boost_rows, boost_labels, config);
  const std::size_t n = builder.n_rows();
  const std::size_t p = train.data.n_cols();

  std::vector<double> margin(n, model.base_score);
  std::vector<double> valid_margin(valid_rows.size(), model.base_score);
  std::vector<double> grad(n), hess(n);

  double best_valid = std::numeric_limits<double>::infinity();
  int best_iter = -1;

  for (int round = 0; round < config.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double prob = sigmoid(margin[i]);
      grad[i] = prob - builder.label(i);
      hess[i] = std::max(prob * (1.0 - prob), 1e-16);
    }

    std::vector<char> in_tree(n, 1);
    if (config.subsample < 1.0) {
      Rng sub = rng.fork(0x100 + static_cast<std::uint64_t>(round));
      auto keep = static_cast<std::size_t>(std::llround(config.subsample * static_cast<double>(n)));
      keep = std::max<std::size_t>(keep, 2);
      std::fill(in_tree.begin(), in_tree.end(), 0);
      for (std::size_t i : sub.sample_indices(n, keep)) in_tree[i] = 1;
    }
    std::vector<std::size_t> columns;
    if (config.colsample < 1.0) {
      Rng cols = rng.fork(0x2000 + static_cast<std::uint64_t>(round));
      auto keep = static_cast<std::size_t>(std::ceil(config.colsample * static_cast<double>(p)));
      keep = std::clamp<std::size_t>(keep, 1, p);
      columns = cols.sample_indices(p, keep);
      std::sort(columns.begin(), columns.end());
    } else {
      columns.resize(p);
      for (std::size_t c = 0; c < p; ++c) columns[c] = c;
    }

    Tree tree = builder.build_tree(grad, hess, in_tree, columns);
    std::vector<double> tmp(p);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < p; ++c) tmp[c] = builder.feature_value(c, i);
      margin[i] += tree.evaluate(tmp);
    }
    for (std::size_t v = 0; v < valid_rows.size(); ++v) {
      valid_margin[v] += tree.evaluate(train.data.row(valid_rows[v]));
    }
    model.trees.push_back(std::move(tree));

    if (diagnostics) diagnostics->train_logloss.push_back(logloss_of(margin, boost_labels));

    if (!valid_rows.empty()) {
      double vloss = logloss_of(valid_margin, valid_labels);
      if (diagnostics) diagnostics->valid_logloss.push_back(vloss);
      if (vloss < best_valid - 1e-12) {
        best_valid = vloss;
        best_iter = round;
      } else if (round - best_iter >= config.early_stopping_rounds) {
        break;
      }
    }
  }

  if (!valid_rows.empty() && best_iter >= 0) {
    model.trees.resize(static_cast<std::size_t>(best_iter) + 1);
    if (diagnostics) diagnostics->best_iteration = best_iter;
  } else if (diagnostics) {
    diagnostics->best_iteration = static_cast<int>(model.trees.size()) - 1;
  }
  return model;
}

}  // namespace synaudit
