#include "synaudit/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "synaudit/linalg.hpp"
#include "synaudit/mathx.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

// Encoded width of one column: 1 for numeric, |categories| + 1 for categorical
// (the extra slot catches "unknown").
std::size_t encoded_width_of(const ColumnSchema& col) {
  return col.kind == ColumnKind::Numeric ? 1 : col.categories.size() + 1;
}

void encode_row(const LogisticModel& m, std::span<const double> row, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t c = 0; c < m.schema.size(); ++c) {
    std::size_t off = m.encoded_offset[c];
    if (m.schema[c].kind == ColumnKind::Numeric) {
      double sd = m.numeric_sd[c];
      out[off] = sd > 0 ? (row[c] - m.numeric_mean[c]) / sd : 0.0;
    } else {
      double v = row[c];
      std::size_t slot = v < 0 ? m.schema[c].categories.size() : static_cast<std::size_t>(v);
      out[off + slot] = 1.0;
    }
  }
  out[m.encoded_width] = 1.0;  // intercept
}

LogisticModel fit_logistic(const DetectionDataset& train, const std::vector<std::size_t>& rows,
                           const BaselineOptions& options) {
  LogisticModel m;
  m.schema = train.data.schema();
  m.fingerprint = schema_fingerprint(m.schema);
  const std::size_t p = m.schema.size();

  m.encoded_offset.resize(p);
  std::size_t off = 0;
  for (std::size_t c = 0; c < p; ++c) {
    m.encoded_offset[c] = off;
    off += encoded_width_of(m.schema[c]);
  }
  m.encoded_width = off;

  m.numeric_mean.assign(p, 0.0);
  m.numeric_sd.assign(p, 1.0);
  for (std::size_t c = 0; c < p; ++c) {
    if (m.schema[c].kind != ColumnKind::Numeric) continue;
    double mean = 0;
    for (std::size_t i : rows) mean += train.data.cell(i, c);
    mean /= static_cast<double>(rows.size());
    double ss = 0;
    for (std::size_t i : rows) {
      double d = train.data.cell(i, c) - mean;
      ss += d * d;
    }
    m.numeric_mean[c] = mean;
    m.numeric_sd[c] = rows.size() > 1 ? std::sqrt(ss / static_cast<double>(rows.size() - 1)) : 1.0;
  }

  const std::size_t dim = m.encoded_width + 1;
  std::vector<std::vector<double>> X(rows.size(), std::vector<double>(dim));
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    encode_row(m, train.data.row(rows[i]), X[i]);
    y[i] = train.labels[rows[i]];
  }

  std::vector<double> beta(dim, 0.0);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    Matrix a(dim, dim);
    std::vector<double> b(dim, 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double eta = 0;
      for (std::size_t k = 0; k < dim; ++k) eta += X[i][k] * beta[k];
      double prob = std::clamp(sigmoid(eta), 1e-12, 1.0 - 1e-12);
      double w = std::max(prob * (1.0 - prob), 1e-12);
      double z = eta + (y[i] - prob) / w;
      for (std::size_t r = 0; r < dim; ++r) {
        double xw = X[i][r] * w;
        if (xw == 0.0) continue;
        for (std::size_t col = 0; col < dim; ++col) a(r, col) += xw * X[i][col];
        b[r] += xw * z;
      }
    }
    for (std::size_t k = 0; k + 1 < dim; ++k) a(k, k) += options.l2;  // intercept unpenalized
    a(dim - 1, dim - 1) += 1e-10;

    std::vector<double> next;
    if (!solve_linear_system(a, b, next)) {
      throw std::runtime_error("fit_baseline: IRLS system is singular");
    }
    double delta = 0;
    for (std::size_t k = 0; k < dim; ++k) delta = std::max(delta, std::fabs(next[k] - beta[k]));
    beta = std::move(next);
    if (delta < options.tolerance) break;
  }
  m.weights = std::move(beta);
  return m;
}

struct RfBuilder {
  const TabularDataset& data;
  const std::vector<double>& labels;  // parallel to data rows, 0/1
  const BaselineOptions& options;
  Rng* rng;
  std::size_t feature_subset;

  Tree tree;

  std::int32_t build(std::vector<std::size_t>& rows, int depth) {
    double pos = 0;
    for (std::size_t i : rows) pos += labels[i];
    auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes[id].cover = static_cast<double>(rows.size());
    tree.nodes[id].value = pos / static_cast<double>(rows.size());

    bool pure = pos == 0 || pos == static_cast<double>(rows.size());
    if (depth >= options.max_depth || pure ||
        rows.size() < static_cast<std::size_t>(2 * options.min_leaf)) {
      return id;
    }

    auto cols = rng->sample_indices(data.n_cols(), feature_subset);
    std::sort(cols.begin(), cols.end());

    double best_gini = -1;
    std::int32_t best_feature = -1;
    double best_threshold = 0;
    std::vector<std::int32_t> best_cats;
    bool best_categorical = false, best_default_left = false;

    auto total = static_cast<double>(rows.size());
    double parent_impurity = 2.0 * (pos / total) * (1.0 - pos / total);

    auto consider = [&](std::size_t c, double nl, double pl, double threshold,
                        const std::vector<std::int32_t>& cats, bool categorical,
                        bool default_left) {
      double nr = total - nl, pr = pos - pl;
      if (nl < options.min_leaf || nr < options.min_leaf) return;
      double gl = 2.0 * (pl / nl) * (1.0 - pl / nl);
      double gr = 2.0 * (pr / nr) * (1.0 - pr / nr);
      double decrease = parent_impurity - (nl / total) * gl - (nr / total) * gr;
      if (decrease > best_gini + 1e-15) {
        best_gini = decrease;
        best_feature = static_cast<std::int32_t>(c);
        best_threshold = threshold;
        best_cats = cats;
        best_categorical = categorical;
        best_default_left = default_left;
      }
    };

    for (std::size_t c : cols) {
      if (data.schema()[c].kind == ColumnKind::Numeric) {
        std::vector<std::size_t> order = rows;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          double va = data.cell(a, c), vb = data.cell(b, c);
          if (va != vb) return va < vb;
          return a < b;
        });
        double nl = 0, pl = 0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
          nl += 1;
          pl += labels[order[k]];
          double v = data.cell(order[k], c), next = data.cell(order[k + 1], c);
          if (v == next) continue;
          consider(c, nl, pl, 0.5 * (v + next), {}, false, false);
        }
      } else {
        std::size_t n_cats = data.schema()[c].categories.size();
        std::vector<double> cnt(n_cats + 1, 0), cnt_pos(n_cats + 1, 0);
        for (std::size_t i : rows) {
          double v = data.cell(i, c);
          std::size_t slot = v < 0 ? n_cats : static_cast<std::size_t>(v);
          cnt[slot] += 1;
          cnt_pos[slot] += labels[i];
        }
        std::vector<std::size_t> present;
        for (std::size_t k = 0; k <= n_cats; ++k) {
          if (cnt[k] > 0) present.push_back(k);
        }
        if (present.size() < 2) continue;
        std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
          double ra = cnt_pos[a] / cnt[a], rb = cnt_pos[b] / cnt[b];
          if (ra != rb) return ra < rb;
          return a < b;
        });
        double nl = 0, pl = 0;
        std::vector<std::int32_t> cats;
        bool unknown_left = false;
        for (std::size_t k = 0; k + 1 < present.size(); ++k) {
          nl += cnt[present[k]];
          pl += cnt_pos[present[k]];
          if (present[k] == n_cats) {
            unknown_left = true;
          } else {
            cats.push_back(static_cast<std::int32_t>(present[k]));
          }
          if (cats.empty()) continue;
          auto sorted = cats;
          std::sort(sorted.begin(), sorted.end());
          consider(c, nl, pl, 0, sorted, true, unknown_left);
        }
      }
    }

    if (best_feature < 0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    tree.nodes[id].feature = best_feature;
    tree.nodes[id].categorical = best_categorical;
    tree.nodes[id].threshold = best_threshold;
    tree.nodes[id].left_categories = best_cats;
    tree.nodes[id].default_left = best_default_left;
    tree.nodes[id].left = 0;  // placeholder until children exist
    tree.nodes[id].right = 1;
    for (std::size_t i : rows) {
      bool go_left = tree.route(tree.nodes[id], data.cell(i, best_feature)) == 0;
      (go_left ? left_rows : right_rows).push_back(i);
    }
    if (left_rows.empty() || right_rows.empty()) {
      tree.nodes[id].feature = -1;
      return id;
    }
    rows.clear();
    rows.shrink_to_fit();
    std::int32_t left_id = build(left_rows, depth + 1);
    std::int32_t right_id = build(right_rows, depth + 1);
    tree.nodes[id].left = left_id;
    tree.nodes[id].right = right_id;
    return id;
  }
};

RandomForestModel fit_forest(const DetectionDataset& train, const std::vector<std::size_t>& rows,
                             std::uint64_t seed, const BaselineOptions& options) {
  RandomForestModel m;
  m.schema = train.data.schema();
  m.fingerprint = schema_fingerprint(m.schema);
  std::vector<double> labels(train.data.n_rows(), 0.0);
  for (std::size_t i = 0; i < train.labels.size(); ++i) labels[i] = train.labels[i];

  auto subset = static_cast<std::size_t>(
      std::max(1.0, std::round(std::sqrt(static_cast<double>(train.data.n_cols())))));
  Rng rng(seed);
  for (int t = 0; t < options.n_trees; ++t) {
    Rng tree_rng = rng.fork(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> bag(rows.size());
    for (auto& i : bag) i = rows[tree_rng.uniform_index(rows.size())];
    RfBuilder builder{train.data, labels, options, &tree_rng, subset, {}};
    builder.build(bag, 0);
    m.trees.push_back(std::move(builder.tree));
  }
  return m;
}

}  // namespace

std::vector<double> LogisticModel::predict_proba(const TabularDataset& rows) const {
  if (schema_fingerprint(rows.schema()) != fingerprint) {
    throw ValidationError("predict: dataset schema does not match the model fingerprint");
  }
  std::vector<double> out(rows.n_rows());
  std::vector<double> enc(encoded_width + 1);
  for (std::size_t i = 0; i < rows.n_rows(); ++i) {
    encode_row(*this, rows.row(i), enc);
    double eta = 0;
    for (std::size_t k = 0; k < enc.size(); ++k) eta += enc[k] * weights[k];
    out[i] = sigmoid(eta);
  }
  return out;
}

PredictFn LogisticModel::predictor() const {
  return [model = *this](const TabularDataset& rows) { return model.predict_proba(rows); };
}

std::vector<double> RandomForestModel::predict_proba(const TabularDataset& rows) const {
  if (schema_fingerprint(rows.schema()) != fingerprint) {
    throw ValidationError("predict: dataset schema does not match the model fingerprint");
  }
  std::vector<double> out(rows.n_rows(), 0.0);
  for (std::size_t i = 0; i < rows.n_rows(); ++i) {
    double s = 0;
    for (const auto& t : trees) s += t.evaluate(rows.row(i));
    out[i] = s / static_cast<double>(trees.size());
  }
  return out;
}

PredictFn RandomForestModel::predictor() const {
  return [model = *this](const TabularDataset& rows) { return model.predict_proba(rows); };
}

std::vector<double> BaselineModel::predict_proba(const TabularDataset& rows) const {
  return kind == BaselineKind::Logistic ? logistic.predict_proba(rows)
                                        : forest.predict_proba(rows);
}

PredictFn BaselineModel::predictor() const {
  return kind == BaselineKind::Logistic ? logistic.predictor() : forest.predictor();
}

BaselineModel fit_baseline(const DetectionDataset& train, BaselineKind kind, std::uint64_t seed,
                           const BaselineOptions& options) {
  std::vector<std::size_t> rows =
      train.has_split() ? train.rows_in_split(false) : [&] {
        std::vector<std::size_t> all(train.labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }();
  if (rows.empty()) throw ValidationError("fit_baseline: no training rows");
  double pos = 0;
  for (std::size_t i : rows) pos += train.labels[i];
  if (pos == 0 || pos == static_cast<double>(rows.size())) {
    throw ValidationError("fit_baseline: training data contains a single class");
  }

  BaselineModel model;
  model.kind = kind;
  if (kind == BaselineKind::Logistic) {
    model.logistic = fit_logistic(train, rows, options);
  } else {
    model.forest = fit_forest(train, rows, seed, options);
  }
  return model;
}

}  // namespace synaudit
