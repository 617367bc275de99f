#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "synaudit/dataset.hpp"
#include "synaudit/gbdt.hpp"
#include "synaudit/rng.hpp"

namespace testutil {

using namespace synaudit;

inline Schema numeric_schema(const std::vector<std::string>& names) {
  Schema s;
  for (const auto& n : names) {
    ColumnSchema c;
    c.name = n;
    c.kind = ColumnKind::Numeric;
    s.push_back(c);
  }
  return s;
}

inline ColumnSchema categorical_column(const std::string& name,
                                       const std::vector<std::string>& cats) {
  ColumnSchema c;
  c.name = name;
  c.kind = ColumnKind::Categorical;
  c.categories = cats;
  return c;
}

inline TabularDataset dataset_of(Schema schema, const std::vector<std::vector<double>>& rows,
                                 Provenance prov = Provenance::Unlabeled) {
  TabularDataset d(std::move(schema), prov);
  for (const auto& r : rows) d.append_row(r);
  return d;
}

// Labeled pool without the equal-count trim, split pre-assigned to train.
inline DetectionDataset detection_of(const TabularDataset& real, const TabularDataset& synth) {
  DetectionDataset d;
  d.data = TabularDataset(real.schema(), Provenance::Unlabeled);
  for (std::size_t i = 0; i < real.n_rows(); ++i) {
    d.data.append_row(real.row(i));
    d.labels.push_back(1);
  }
  for (std::size_t i = 0; i < synth.n_rows(); ++i) {
    d.data.append_row(synth.row(i));
    d.labels.push_back(0);
  }
  return d;
}

// Two Gaussian classes over one informative feature plus noise columns.
inline DetectionDataset gaussian_pair(double real_mean, double synth_mean, std::size_t n_per_class,
                                      std::uint64_t seed, std::size_t noise_cols = 1) {
  std::vector<std::string> names{"x0"};
  for (std::size_t c = 0; c < noise_cols; ++c) names.push_back("noise" + std::to_string(c));
  Schema schema = numeric_schema(names);
  Rng rng(seed);
  TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
  std::vector<double> row(names.size());
  for (std::size_t i = 0; i < n_per_class; ++i) {
    row[0] = rng.normal(real_mean, 1.0);
    for (std::size_t c = 1; c < row.size(); ++c) row[c] = rng.normal();
    real.append_row(row);
    row[0] = rng.normal(synth_mean, 1.0);
    for (std::size_t c = 1; c < row.size(); ++c) row[c] = rng.normal();
    synth.append_row(row);
  }
  return detection_of(real, synth);
}

// --- hand-built trees --------------------------------------------------------

// Numeric stump: x[feature] < threshold ? left_value : right_value.
inline Tree stump(int feature, double threshold, double left_value, double right_value,
                  double left_cover = 1.0, double right_cover = 1.0) {
  Tree t;
  TreeNode root;
  root.feature = feature;
  root.threshold = threshold;
  root.left = 1;
  root.right = 2;
  root.cover = left_cover + right_cover;
  TreeNode l, r;
  l.value = left_value;
  l.cover = left_cover;
  r.value = right_value;
  r.cover = right_cover;
  t.nodes = {root, l, r};
  return t;
}

inline TreeEnsembleModel model_of(std::vector<Tree> trees, const Schema& schema,
                                  double base_score = 0.0) {
  TreeEnsembleModel m;
  m.trees = std::move(trees);
  m.base_score = base_score;
  m.schema = schema;
  m.fingerprint = schema_fingerprint(schema);
  return m;
}

// Fills covers of every node from routing the given rows through the tree.
inline void set_covers_from_rows(Tree& tree, const TabularDataset& rows) {
  for (auto& n : tree.nodes) n.cover = 0;
  for (std::size_t r = 0; r < rows.n_rows(); ++r) {
    std::int32_t at = 0;
    tree.nodes[at].cover += 1;
    while (!tree.nodes[at].is_leaf()) {
      at = tree.route(tree.nodes[at], rows.cell(r, tree.nodes[at].feature));
      tree.nodes[at].cover += 1;
    }
  }
}

// Independent tree-walk oracle, deliberately written apart from Tree::evaluate.
inline double oracle_tree_walk(const Tree& tree, std::span<const double> row) {
  std::function<double(std::int32_t)> walk = [&](std::int32_t at) -> double {
    const TreeNode& n = tree.nodes[at];
    if (n.feature < 0) return n.value;
    double v = row[n.feature];
    bool left;
    if (n.categorical) {
      if (v < 0) {
        left = n.default_left;
      } else {
        left = false;
        for (std::int32_t c : n.left_categories) {
          if (c == static_cast<std::int32_t>(v)) left = true;
        }
      }
    } else {
      left = v < n.threshold;
    }
    return walk(left ? n.left : n.right);
  };
  return walk(0);
}

// Brute-force Shapley values from a payoff function over coalitions,
// independent of the shapley module.
inline std::vector<double> oracle_shapley(int p,
                                          const std::function<double(std::uint64_t)>& payoff) {
  std::vector<double> fact(p + 1, 1.0);
  for (int i = 1; i <= p; ++i) fact[i] = fact[i - 1] * i;
  std::vector<double> phi(p, 0.0);
  for (int j = 0; j < p; ++j) {
    for (std::uint64_t s = 0; s < (1ULL << p); ++s) {
      if (s & (1ULL << j)) continue;
      int size = 0;
      for (int k = 0; k < p; ++k) {
        if (s & (1ULL << k)) ++size;
      }
      double w = fact[size] * fact[p - size - 1] / fact[p];
      phi[j] += w * (payoff(s | (1ULL << j)) - payoff(s));
    }
  }
  return phi;
}

// Full factorial table over p features taking values 0..arity-1.
inline TabularDataset factorial_table(int p, int arity = 2) {
  std::vector<std::string> names;
  for (int c = 0; c < p; ++c) names.push_back("b" + std::to_string(c));
  TabularDataset d(numeric_schema(names), Provenance::Unlabeled);
  std::size_t n = 1;
  for (int c = 0; c < p; ++c) n *= static_cast<std::size_t>(arity);
  std::vector<double> row(p);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t rem = s;
    for (int c = 0; c < p; ++c) {
      row[c] = static_cast<double>(rem % arity);
      rem /= arity;
    }
    d.append_row(row);
  }
  return d;
}

inline TabularDataset binary_table(int p) { return factorial_table(p, 2); }

// Random tree over integer-grid features; per-path reachable intervals keep
// every leaf populated, and arity > 2 re-splits a feature along one path.
inline Tree random_binary_tree(int p, int depth, Rng& rng, int arity = 2) {
  Tree t;
  std::vector<int> lo(p, 0), hi(p, arity - 1);
  std::function<std::int32_t(int)> grow = [&](int d) -> std::int32_t {
    auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.push_back(TreeNode{});
    std::vector<int> candidates;
    for (int f = 0; f < p; ++f) {
      if (hi[f] > lo[f]) candidates.push_back(f);
    }
    bool leaf = d >= depth || candidates.empty() || rng.uniform() < 0.25;
    if (leaf) {
      t.nodes[id].value = rng.uniform(-2.0, 2.0);
      return id;
    }
    int f = candidates[rng.uniform_index(candidates.size())];
    int cut = lo[f] + 1 + static_cast<int>(rng.uniform_index(hi[f] - lo[f]));
    t.nodes[id].feature = f;
    t.nodes[id].threshold = cut - 0.5;
    int saved_hi = hi[f], saved_lo = lo[f];
    hi[f] = cut - 1;
    std::int32_t l = grow(d + 1);
    hi[f] = saved_hi;
    lo[f] = cut;
    std::int32_t r = grow(d + 1);
    lo[f] = saved_lo;
    t.nodes[id].left = l;
    t.nodes[id].right = r;
    return id;
  };
  grow(0);
  return t;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("synaudit_test_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace testutil
