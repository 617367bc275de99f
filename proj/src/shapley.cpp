#include "synaudit/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numeric>

#include "synaudit/linalg.hpp"
#include "synaudit/mathx.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

const char* scale_name(ValueScale s) {
  return s == ValueScale::Probability ? "probability" : "log_odds";
}

// --- BackgroundSet ----------------------------------------------------------

BackgroundSet BackgroundSet::from_dataset(const TabularDataset& data, std::size_t max_rows,
                                          std::uint64_t seed) {
  if (data.n_rows() == 0) throw ValidationError("background: empty dataset");
  BackgroundSet b;
  if (data.n_rows() <= max_rows) {
    b.rows = data;
  } else {
    Rng rng(seed);
    auto idx = rng.sample_indices(data.n_rows(), max_rows);
    std::sort(idx.begin(), idx.end());
    b.rows = data.select_rows(idx);
  }
  b.weights.assign(b.rows.n_rows(), 1.0 / static_cast<double>(b.rows.n_rows()));
  return b;
}

void BackgroundSet::validate() const {
  if (rows.n_rows() == 0) throw ValidationError("background: empty");
  if (weights.size() != rows.n_rows()) throw ValidationError("background: weight length");
  double sum = 0;
  for (double w : weights) {
    if (w < 0) throw ValidationError("background: negative weight");
    sum += w;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ValidationError("background: weights must sum to 1");
}

// --- ConditionalSampler -----------------------------------------------------

namespace {

// One-way ANOVA p-value for a numeric target split into two groups.
double numeric_split_pvalue(const std::vector<double>& left, const std::vector<double>& right) {
  auto nl = static_cast<double>(left.size()), nr = static_cast<double>(right.size());
  if (nl < 2 || nr < 2) return 1.0;
  double ml = std::accumulate(left.begin(), left.end(), 0.0) / nl;
  double mr = std::accumulate(right.begin(), right.end(), 0.0) / nr;
  double grand = (ml * nl + mr * nr) / (nl + nr);
  double between = nl * (ml - grand) * (ml - grand) + nr * (mr - grand) * (mr - grand);
  double within = 0;
  for (double v : left) within += (v - ml) * (v - ml);
  for (double v : right) within += (v - mr) * (v - mr);
  double df2 = nl + nr - 2;
  if (within <= 1e-300) return between > 1e-12 ? 0.0 : 1.0;
  double f = between / (within / df2);
  return f_sf(f, 1.0, df2);
}

// Chi-square contingency p-value for a categorical target split into two groups.
double categorical_split_pvalue(const std::vector<double>& left_counts,
                                const std::vector<double>& right_counts) {
  double nl = std::accumulate(left_counts.begin(), left_counts.end(), 0.0);
  double nr = std::accumulate(right_counts.begin(), right_counts.end(), 0.0);
  double n = nl + nr;
  if (nl < 5 || nr < 5) return 1.0;
  double stat = 0;
  int df = 0;
  for (std::size_t k = 0; k < left_counts.size(); ++k) {
    double ck = left_counts[k] + right_counts[k];
    if (ck <= 0) continue;
    ++df;
    double el = ck * nl / n, er = ck * nr / n;
    stat += (left_counts[k] - el) * (left_counts[k] - el) / el;
    stat += (right_counts[k] - er) * (right_counts[k] - er) / er;
  }
  df -= 1;
  if (df < 1) return 1.0;
  return chi2_sf(stat, static_cast<double>(df));
}

}  // namespace

ConditionalSampler ConditionalSampler::fit(const TabularDataset& data, const Config& config) {
  if (data.n_rows() == 0) throw ValidationError("conditional sampler: empty data");
  if (data.n_cols() > 64) {
    throw ValidationError("conditional sampler: more than 64 columns unsupported");
  }
  ConditionalSampler s;
  if (data.n_rows() > config.max_rows) {
    Rng rng(config.seed);
    auto idx = rng.sample_indices(data.n_rows(), config.max_rows);
    std::sort(idx.begin(), idx.end());
    s.data_ = data.select_rows(idx);
  } else {
    s.data_ = data;
  }
  s.config_ = config;
  return s;
}

ConditionalSampler::PartitionTree ConditionalSampler::build_partition(
    const std::vector<int>& coalition) const {
  PartitionTree tree;
  std::vector<char> in_coalition(data_.n_cols(), 0);
  for (int f : coalition) in_coalition[f] = 1;
  std::vector<int> targets;
  for (std::size_t c = 0; c < data_.n_cols(); ++c) {
    if (!in_coalition[c]) targets.push_back(static_cast<int>(c));
  }

  struct Pending {
    int node;
    std::vector<std::size_t> rows;
    int depth;
  };
  std::vector<std::size_t> all(data_.n_rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  tree.nodes.push_back(PartitionNode{});
  std::vector<Pending> stack{{0, std::move(all), 0}};

  while (!stack.empty()) {
    Pending cur = std::move(stack.back());
    stack.pop_back();
    auto& node_rows = cur.rows;

    bool can_split = cur.depth < config_.max_depth &&
                     node_rows.size() >= 2 * config_.min_cell_rows && !targets.empty();

    double best_p = 1.0;
    int best_feature = -1;
    bool best_categorical = false;
    double best_threshold = 0, best_category = 0;
    std::vector<std::size_t> best_left, best_right;

    if (can_split) {
      for (int f : coalition) {
        const auto& col = data_.schema()[f];
        // Candidate partitions of the node rows on feature f.
        std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> splits;
        std::vector<std::pair<double, double>> params;  // (threshold, category)
        if (col.kind == ColumnKind::Numeric) {
          std::vector<double> vals;
          vals.reserve(node_rows.size());
          for (std::size_t i : node_rows) vals.push_back(data_.cell(i, f));
          std::sort(vals.begin(), vals.end());
          double med = vals[vals.size() / 2];
          if (med == vals.front()) continue;  // constant or median at minimum
          std::vector<std::size_t> l, r;
          for (std::size_t i : node_rows) {
            (data_.cell(i, f) < med ? l : r).push_back(i);
          }
          if (!l.empty() && !r.empty()) {
            splits.emplace_back(std::move(l), std::move(r));
            params.emplace_back(med, 0.0);
          }
        } else {
          // One-vs-rest on the most frequent categories.
          std::map<double, std::size_t> counts;
          for (std::size_t i : node_rows) counts[data_.cell(i, f)] += 1;
          std::vector<std::pair<std::size_t, double>> by_count;
          for (auto& [cat, cnt] : counts) by_count.emplace_back(cnt, cat);
          std::sort(by_count.rbegin(), by_count.rend());
          std::size_t tried = 0;
          for (auto& [cnt, cat] : by_count) {
            if (tried++ >= 8 || cnt == node_rows.size()) continue;
            std::vector<std::size_t> l, r;
            for (std::size_t i : node_rows) {
              (data_.cell(i, f) == cat ? l : r).push_back(i);
            }
            splits.emplace_back(std::move(l), std::move(r));
            params.emplace_back(0.0, cat);
          }
        }

        for (std::size_t si = 0; si < splits.size(); ++si) {
          const auto& [l, r] = splits[si];
          if (l.size() < config_.min_cell_rows || r.size() < config_.min_cell_rows) continue;
          double min_p = 1.0;
          for (int t : targets) {
            double pv;
            if (data_.schema()[t].kind == ColumnKind::Numeric) {
              std::vector<double> lv, rv;
              lv.reserve(l.size());
              rv.reserve(r.size());
              for (std::size_t i : l) lv.push_back(data_.cell(i, t));
              for (std::size_t i : r) rv.push_back(data_.cell(i, t));
              pv = numeric_split_pvalue(lv, rv);
            } else {
              std::size_t k = data_.schema()[t].categories.size() + 1;
              std::vector<double> lc(k, 0), rc(k, 0);
              for (std::size_t i : l) {
                double v = data_.cell(i, t);
                lc[v < 0 ? k - 1 : static_cast<std::size_t>(v)] += 1;
              }
              for (std::size_t i : r) {
                double v = data_.cell(i, t);
                rc[v < 0 ? k - 1 : static_cast<std::size_t>(v)] += 1;
              }
              pv = categorical_split_pvalue(lc, rc);
            }
            min_p = std::min(min_p, pv);
          }
          // Bonferroni over the tested targets.
          double adj = std::min(1.0, min_p * static_cast<double>(targets.size()));
          if (adj < best_p) {
            best_p = adj;
            best_feature = f;
            best_categorical = data_.schema()[f].kind == ColumnKind::Categorical;
            best_threshold = params[si].first;
            best_category = params[si].second;
            best_left = splits[si].first;
            best_right = splits[si].second;
          }
        }
      }
    }

    if (best_feature >= 0 && best_p < config_.alpha) {
      auto& node = tree.nodes[cur.node];
      node.feature = best_feature;
      node.categorical = best_categorical;
      node.threshold = best_threshold;
      node.category = best_category;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes.push_back(PartitionNode{});
      tree.nodes.push_back(PartitionNode{});
      stack.push_back({node.left, std::move(best_left), cur.depth + 1});
      stack.push_back({node.right, std::move(best_right), cur.depth + 1});
    } else {
      tree.nodes[cur.node].rows = std::move(node_rows);
    }
  }
  return tree;
}

const ConditionalSampler::PartitionTree& ConditionalSampler::partition_for(
    const std::vector<int>& coalition) const {
  std::uint64_t key = 0;
  for (int f : coalition) key |= (1ULL << f);
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, build_partition(coalition)).first;
  return it->second;
}

std::vector<std::size_t> ConditionalSampler::draw_rows(const std::vector<int>& coalition,
                                                       std::span<const double> x, int n,
                                                       Rng& rng) const {
  const PartitionTree& tree = partition_for(coalition);
  int at = 0;
  while (tree.nodes[at].feature >= 0) {
    const auto& node = tree.nodes[at];
    double v = x[node.feature];
    bool go_left = node.categorical ? v == node.category : v < node.threshold;
    at = go_left ? node.left : node.right;
  }
  const auto& cell = tree.nodes[at].rows;
  std::vector<std::size_t> out(static_cast<std::size_t>(n));
  if (cell.size() < config_.min_cell_rows) {
    // Fallback to marginal draws over the full fit sample.
    for (auto& i : out) i = rng.uniform_index(data_.n_rows());
  } else {
    for (auto& i : out) i = cell[rng.uniform_index(cell.size())];
  }
  return out;
}

// --- value function ---------------------------------------------------------

namespace {

class CoalitionEvaluator {
 public:
  CoalitionEvaluator(const PredictFn& model, std::span<const double> instance,
                     const BackgroundSet& background, const ValueFunctionSpec& spec)
      : model_(model), instance_(instance), background_(background), spec_(spec),
        rng_(spec.seed) {
    background_.validate();
    if (spec_.mode == ValueMode::Conditional && spec_.sampler == nullptr) {
      throw ValidationError("value function: conditional mode needs a sampler");
    }
    if (spec_.n_imputations < 1) throw ValidationError("value function: n_imputations >= 1");
    p_ = background_.rows.n_cols();
    if (instance_.size() != p_) throw ValidationError("value function: instance width mismatch");
  }

  // v(S) for the coalition given as a 0/1 mask over features.
  double value(const std::vector<char>& mask) {
    bool all = true;
    for (char m : mask) {
      if (!m) {
        all = false;
        break;
      }
    }
    if (all) return prediction();

    const Schema& schema = background_.rows.schema();
    if (spec_.mode == ValueMode::Marginal) {
      TabularDataset imputed = background_.rows;
      for (std::size_t r = 0; r < imputed.n_rows(); ++r) {
        for (std::size_t c = 0; c < p_; ++c) {
          if (mask[c]) imputed.set_cell(r, c, instance_[c]);
        }
      }
      auto preds = model_(imputed);
      double v = 0;
      for (std::size_t r = 0; r < preds.size(); ++r) v += background_.weights[r] * preds[r];
      return v;
    }

    // Conditional: draw rows from the cell around x_S, overwrite S.
    std::vector<int> coalition;
    for (std::size_t c = 0; c < p_; ++c) {
      if (mask[c]) coalition.push_back(static_cast<int>(c));
    }
    auto draws = spec_.sampler->draw_rows(coalition, instance_, spec_.n_imputations, rng_);
    TabularDataset imputed(schema, Provenance::Unlabeled);
    for (std::size_t i : draws) imputed.append_row(spec_.sampler->data().row(i));
    for (std::size_t r = 0; r < imputed.n_rows(); ++r) {
      for (std::size_t c = 0; c < p_; ++c) {
        if (mask[c]) imputed.set_cell(r, c, instance_[c]);
      }
    }
    auto preds = model_(imputed);
    double v = 0;
    for (double pr : preds) v += pr;
    return v / static_cast<double>(preds.size());
  }

  double prediction() {
    if (!prediction_) {
      TabularDataset one(background_.rows.schema(), Provenance::Unlabeled);
      one.append_row(instance_);
      prediction_ = model_(one)[0];
    }
    return *prediction_;
  }

  std::size_t n_features() const { return p_; }

 private:
  const PredictFn& model_;
  std::span<const double> instance_;
  const BackgroundSet& background_;
  const ValueFunctionSpec& spec_;
  Rng rng_;
  std::size_t p_ = 0;
  std::optional<double> prediction_;
};

std::vector<std::string> feature_names(const Schema& schema) {
  std::vector<std::string> names;
  names.reserve(schema.size());
  for (const auto& c : schema) names.push_back(c.name);
  return names;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  double r = 1;
  for (int i = 1; i <= k; ++i) r *= static_cast<double>(n - i + 1) / static_cast<double>(i);
  return r;
}

}  // namespace

// --- exact enumeration ------------------------------------------------------

ShapleyVector exact_shapley(const PredictFn& model, std::span<const double> instance,
                            const BackgroundSet& background, const ValueFunctionSpec& spec,
                            int exact_limit) {
  CoalitionEvaluator eval(model, instance, background, spec);
  const auto p = static_cast<int>(eval.n_features());
  if (p > exact_limit) {
    throw ValidationError("exact_shapley: " + std::to_string(p) + " features exceed exact_limit " +
                          std::to_string(exact_limit));
  }

  const std::uint64_t n_subsets = 1ULL << p;
  std::vector<double> v(n_subsets);
  std::vector<char> mask(p, 0);
  for (std::uint64_t s = 0; s < n_subsets; ++s) {
    for (int j = 0; j < p; ++j) mask[j] = (s >> j) & 1 ? 1 : 0;
    v[s] = eval.value(mask);
  }

  // Coalition weights |S|!(p-|S|-1)!/p!.
  std::vector<double> weight(p);
  std::vector<double> fact(p + 1, 1.0);
  for (int i = 1; i <= p; ++i) fact[i] = fact[i - 1] * i;
  for (int s = 0; s < p; ++s) weight[s] = fact[s] * fact[p - s - 1] / fact[p];

  ShapleyVector out;
  out.features = feature_names(background.rows.schema());
  out.phi.assign(p, 0.0);
  out.scale = spec.scale;
  out.base_value = v[0];
  out.prediction = eval.prediction();
  for (int j = 0; j < p; ++j) {
    std::uint64_t bit = 1ULL << j;
    for (std::uint64_t s = 0; s < n_subsets; ++s) {
      if (s & bit) continue;
      int size = std::popcount(s);
      out.phi[j] += weight[size] * (v[s | bit] - v[s]);
    }
  }
  return out;
}

// --- KernelSHAP -------------------------------------------------------------

namespace {

struct CoalitionBatch {
  std::vector<std::uint64_t> masks;
  std::vector<double> weights;
};

// shap-style allocation: enumerate subset sizes from the outside in while the
// budget allows, sample the remainder proportional to the leftover kernel mass.
CoalitionBatch sample_coalitions(int p, int budget, Rng& rng) {
  CoalitionBatch batch;
  std::map<std::uint64_t, double> weight_of;

  std::vector<double> size_mass(p, 0.0);  // index s = subset size, 1..p-1
  double total_mass = 0;
  for (int s = 1; s < p; ++s) {
    size_mass[s] = static_cast<double>(p - 1) / (static_cast<double>(s) * (p - s));
    total_mass += size_mass[s];
  }

  int remaining = budget;
  std::vector<char> enumerated(p, 0);
  double remaining_mass = total_mass;

  int half = (p - 1) / 2;
  bool has_middle = (p % 2) == 0;  // unpaired middle size p/2 when p even
  for (int s = 1; s <= half + (has_middle ? 1 : 0); ++s) {
    bool paired = s <= half;
    double subsets = binomial(p, s) * (paired ? 2.0 : 1.0);
    if (subsets > remaining) break;
    // Enumerate all coalitions of size s (and their complements when paired).
    std::vector<int> comb(s);
    for (int i = 0; i < s; ++i) comb[i] = i;
    double mass = size_mass[s] + (paired ? size_mass[p - s] : 0.0);
    double per_subset = mass / subsets;
    while (true) {
      std::uint64_t m = 0;
      for (int i : comb) m |= 1ULL << i;
      weight_of[m] += per_subset;
      if (paired) weight_of[((1ULL << p) - 1) & ~m] += per_subset;
      int i = s - 1;
      while (i >= 0 && comb[i] == p - s + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int k = i + 1; k < s; ++k) comb[k] = comb[k - 1] + 1;
    }
    enumerated[s] = 1;
    if (paired) enumerated[p - s] = 1;
    remaining -= static_cast<int>(subsets);
    remaining_mass -= mass;
  }

  if (remaining > 0 && remaining_mass > 1e-12) {
    // Frequency-weighted sampling from the un-enumerated sizes, paired.
    std::vector<int> open_sizes;
    std::vector<double> open_mass;
    double open_total = 0;
    for (int s = 1; s < p; ++s) {
      if (!enumerated[s]) {
        open_sizes.push_back(s);
        open_mass.push_back(size_mass[s]);
        open_total += size_mass[s];
      }
    }
    std::map<std::uint64_t, double> freq;
    int n_sampled = 0;
    while (n_sampled < remaining) {
      double u = rng.uniform() * open_total;
      int s = open_sizes.back();
      for (std::size_t k = 0; k < open_sizes.size(); ++k) {
        if (u < open_mass[k]) {
          s = open_sizes[k];
          break;
        }
        u -= open_mass[k];
      }
      auto members = rng.sample_indices(p, s);
      std::uint64_t m = 0;
      for (std::size_t i : members) m |= 1ULL << i;
      freq[m] += 1;
      ++n_sampled;
      if (n_sampled < remaining) {
        freq[((1ULL << p) - 1) & ~m] += 1;
        ++n_sampled;
      }
    }
    for (auto& [m, f] : freq) {
      weight_of[m] += remaining_mass * f / static_cast<double>(n_sampled);
    }
  }

  for (auto& [m, w] : weight_of) {
    batch.masks.push_back(m);
    batch.weights.push_back(w);
  }
  return batch;
}

}  // namespace

ShapleyVector kernel_shap(const PredictFn& model, std::span<const double> instance,
                          const BackgroundSet& background, const ValueFunctionSpec& spec,
                          int n_coalitions, std::uint64_t seed) {
  CoalitionEvaluator eval(model, instance, background, spec);
  const auto p = static_cast<int>(eval.n_features());
  if (p > 62) throw ValidationError("kernel_shap: more than 62 features unsupported");
  if (n_coalitions < p + 2) {
    throw ValidationError("kernel_shap: n_coalitions must be at least p + 2");
  }

  std::vector<char> mask(p, 0);
  double v_empty = eval.value(mask);
  double v_full = eval.prediction();
  double delta = v_full - v_empty;

  ShapleyVector out;
  out.features = feature_names(background.rows.schema());
  out.phi.assign(p, 0.0);
  out.scale = spec.scale;
  out.base_value = v_empty;
  out.prediction = v_full;
  if (p == 1) {
    out.phi[0] = delta;
    return out;
  }

  Rng rng(seed);
  for (int attempt = 0; attempt < 2; ++attempt) {
    // Budget for the strict middle sizes (empty and full are handled by the
    // constraint and base value).
    CoalitionBatch batch = sample_coalitions(p, n_coalitions - 2, rng);

    std::vector<double> y(batch.masks.size());
    for (std::size_t k = 0; k < batch.masks.size(); ++k) {
      for (int j = 0; j < p; ++j) mask[j] = (batch.masks[k] >> j) & 1 ? 1 : 0;
      y[k] = eval.value(mask) - v_empty;
    }

    // Constrained weighted least squares: minimize sum w (y - Z phi)^2
    // subject to sum(phi) = delta (Lagrange system of size p + 1).
    Matrix normal(p + 1, p + 1);
    std::vector<double> target(p + 1, 0.0);
    double diag_total = 0;
    for (std::size_t k = 0; k < batch.masks.size(); ++k) {
      double w = batch.weights[k];
      std::uint64_t bits = batch.masks[k];
      for (int a = 0; a < p; ++a) {
        if (!((bits >> a) & 1)) continue;
        for (int b = 0; b < p; ++b) {
          if ((bits >> b) & 1) normal(a, b) += w;
        }
        target[a] += w * y[k];
        diag_total += w;
      }
    }
    for (int a = 0; a < p; ++a) {
      normal(a, p) = 1.0;
      normal(p, a) = 1.0;
    }
    target[p] = delta;

    // Tiny budgets can leave the design rank-deficient; a vanishing ridge
    // picks the minimum-norm solution without disturbing exact budgets.
    for (double ridge : {0.0, 1e-9 * diag_total / p + 1e-12}) {
      Matrix m = normal;
      std::vector<double> rhs = target;
      for (int a = 0; a < p; ++a) m(a, a) += ridge;
      std::vector<double> solution;
      if (solve_linear_system(m, rhs, solution)) {
        for (int j = 0; j < p; ++j) out.phi[j] = solution[j];
        return out;
      }
    }
    // Degenerate design: retry once with fresh coalitions.
    rng = Rng(seed ^ 0xdecaf);
  }
  throw std::runtime_error("kernel_shap: degenerate coalition design after retry");
}

// --- explanation bundle -----------------------------------------------------

ExplanationBundle explain_instance(const TreeEnsembleModel& model,
                                   std::span<const double> instance,
                                   const std::set<ShapEngine>& engines,
                                   const BackgroundSet& background,
                                   const ConditionalSampler* sampler,
                                   const ExplainOptions& options) {
  ExplanationBundle bundle;
  bundle.score = model.predict_one(instance);

  auto prob_fn = model.predictor();
  for (ShapEngine engine : engines) {
    switch (engine) {
      case ShapEngine::Exact: {
        ValueFunctionSpec spec;
        spec.scale = ValueScale::Probability;
        spec.n_imputations = options.n_imputations;
        spec.seed = options.seed;
        bundle.vectors.emplace_back("exact_marginal",
                                    exact_shapley(prob_fn, instance, background, spec));
        break;
      }
      case ShapEngine::KernelMarginal: {
        ValueFunctionSpec spec;
        spec.scale = ValueScale::Probability;
        spec.n_imputations = options.n_imputations;
        spec.seed = options.seed;
        bundle.vectors.emplace_back(
            "kernel_marginal",
            kernel_shap(prob_fn, instance, background, spec, options.n_coalitions, options.seed));
        break;
      }
      case ShapEngine::KernelConditional: {
        if (!sampler) throw ValidationError("explain_instance: conditional engine needs sampler");
        ValueFunctionSpec spec;
        spec.mode = ValueMode::Conditional;
        spec.sampler = sampler;
        spec.scale = ValueScale::Probability;
        spec.n_imputations = options.n_imputations;
        spec.seed = options.seed;
        bundle.vectors.emplace_back(
            "kernel_conditional",
            kernel_shap(prob_fn, instance, background, spec, options.n_coalitions, options.seed));
        break;
      }
      case ShapEngine::Tree:
        bundle.vectors.emplace_back("tree_path_dependent", tree_shap(model, instance));
        break;
      case ShapEngine::TreeInteractions:
        bundle.interactions = tree_shap_interactions(model, instance);
        break;
    }
  }

  // Narrative tags from the first probability-scale vector, else any vector.
  const ShapleyVector* tagged = nullptr;
  for (const auto& [name, vec] : bundle.vectors) {
    if (vec.scale == ValueScale::Probability) {
      tagged = &vec;
      break;
    }
  }
  if (!tagged && !bundle.vectors.empty()) tagged = &bundle.vectors.front().second;

  if (tagged) {
    bool synthetic_looking = bundle.score < 0.5 - options.tag_margin;
    bool real_looking = bundle.score > 0.5 + options.tag_margin;
    if (synthetic_looking || real_looking) {
      std::vector<std::size_t> order(tagged->phi.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return synthetic_looking ? tagged->phi[a] < tagged->phi[b]
                                 : tagged->phi[a] > tagged->phi[b];
      });
      for (int k = 0; k < options.tag_top_k && k < static_cast<int>(order.size()); ++k) {
        double phi = tagged->phi[order[k]];
        if (synthetic_looking && phi < -1e-9) {
          bundle.tags.push_back({tagged->features[order[k]], "unrealistic value/combination", phi});
        } else if (real_looking && phi > 1e-9) {
          bundle.tags.push_back(
              {tagged->features[order[k]], "underrepresented in synthetic data", phi});
        }
      }
    }
  }
  return bundle;
}

// --- JSON -------------------------------------------------------------------

nlohmann::ordered_json ShapleyVector::to_json() const {
  nlohmann::ordered_json j;
  j["scale"] = scale_name(scale);
  j["base_value"] = base_value;
  j["prediction"] = prediction;
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    entries.push_back({{"feature", features[i]}, {"phi", phi[i]}});
  }
  j["phi"] = std::move(entries);
  return j;
}

std::vector<double> InteractionMatrix::row_sums() const {
  std::vector<double> sums(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (double v : values[i]) sums[i] += v;
  }
  return sums;
}

double InteractionMatrix::total() const {
  double t = 0;
  for (const auto& row : values) {
    for (double v : row) t += v;
  }
  return t;
}

nlohmann::ordered_json InteractionMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["scale"] = scale_name(scale);
  j["base_value"] = base_value;
  j["prediction"] = prediction;
  j["features"] = features;
  j["values"] = values;
  return j;
}

nlohmann::ordered_json ExplanationBundle::to_json() const {
  nlohmann::ordered_json j;
  j["score"] = score;
  nlohmann::ordered_json vecs = nlohmann::ordered_json::object();
  for (const auto& [name, vec] : vectors) vecs[name] = vec.to_json();
  j["shapley"] = std::move(vecs);
  if (interactions) j["interactions"] = interactions->to_json();
  nlohmann::ordered_json tag_arr = nlohmann::ordered_json::array();
  for (const auto& t : tags) {
    tag_arr.push_back({{"feature", t.feature}, {"tag", t.tag}, {"phi", t.phi}});
  }
  j["tags"] = std::move(tag_arr);
  return j;
}

}  // namespace synaudit
