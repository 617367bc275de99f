// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL/SKIP line per criterion. Exit code 0 when nothing
// failed (skips are reported but do not fail the gate).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "synaudit/audit.hpp"
#include "synaudit/counterfactual.hpp"
#include "synaudit/dataset.hpp"
#include "synaudit/effects.hpp"
#include "synaudit/gbdt.hpp"
#include "synaudit/generator.hpp"
#include "synaudit/importance.hpp"
#include "synaudit/metrics.hpp"
#include "synaudit/rng.hpp"
#include "synaudit/shapley.hpp"

using namespace synaudit;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool failed = false;
  bool skipped = false;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      failed = true;
      notes.push_back(what);
    }
  }
  void skip(const std::string& why) {
    skipped = true;
    notes.push_back(why);
  }
};

std::string data_dir() {
  if (const char* env = std::getenv("SYNAUDIT_DATA_DIR")) return env;
  return std::string(SYNAUDIT_SOURCE_DIR) + "/data";
}

std::string source_dir() { return SYNAUDIT_SOURCE_DIR; }

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// --- shared toy constructions -------------------------------------------------

Schema numeric_schema(const std::vector<std::string>& names) {
  Schema s;
  for (const auto& n : names) {
    ColumnSchema c;
    c.name = n;
    s.push_back(c);
  }
  return s;
}

TabularDataset factorial_table(int p, int arity) {
  Schema schema = numeric_schema([p] {
    std::vector<std::string> names;
    for (int c = 0; c < p; ++c) names.push_back("b" + std::to_string(c));
    return names;
  }());
  TabularDataset d(schema, Provenance::Unlabeled);
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

Tree random_grid_tree(int p, int arity, int depth, Rng& rng) {
  Tree t;
  std::vector<int> lo(p, 0), hi(p, arity - 1);
  std::function<std::int32_t(int)> grow = [&](int d) -> std::int32_t {
    auto id = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.push_back(TreeNode{});
    std::vector<int> candidates;
    for (int f = 0; f < p; ++f) {
      if (hi[f] > lo[f]) candidates.push_back(f);
    }
    if (d >= depth || candidates.empty() || rng.uniform() < 0.25) {
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

void set_covers(Tree& tree, const TabularDataset& rows) {
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

TreeEnsembleModel wrap_model(std::vector<Tree> trees, const Schema& schema, double base = 0.0) {
  TreeEnsembleModel m;
  m.trees = std::move(trees);
  m.base_score = base;
  m.schema = schema;
  m.fingerprint = schema_fingerprint(schema);
  return m;
}

BackgroundSet uniform_background(const TabularDataset& rows) {
  BackgroundSet b;
  b.rows = rows;
  b.weights.assign(rows.n_rows(), 1.0 / static_cast<double>(rows.n_rows()));
  return b;
}

DetectionDataset labeled_pool(const TabularDataset& real, const TabularDataset& synth) {
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

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// The end-to-end audit toy: correlated Gaussian pair, a 21-level quantized
// feature in [0, 1] carrying the planted spike, and two categoricals.
TabularDataset audit_toy_real(std::size_t n, std::uint64_t seed) {
  Schema schema = numeric_schema({"x0", "x1", "x2"});
  ColumnSchema c0;
  c0.name = "c0";
  c0.kind = ColumnKind::Categorical;
  c0.categories = {"a", "b", "c"};
  ColumnSchema c1;
  c1.name = "c1";
  c1.kind = ColumnKind::Categorical;
  c1.categories = {"u", "v"};
  schema.push_back(c0);
  schema.push_back(c1);

  Rng rng(seed);
  TabularDataset d(schema, Provenance::Real);
  for (std::size_t i = 0; i < n; ++i) {
    double x0 = rng.normal();
    double x1 = x0 + rng.normal(0.0, 0.4);
    double x2 = static_cast<double>(rng.uniform_index(21)) / 20.0;
    double g0 = static_cast<double>(rng.uniform_index(3));
    double g1 = static_cast<double>(rng.uniform_index(2));
    d.append_row(std::vector<double>{x0, x1, x2, g0, g1});
  }
  return d;
}

// --- criteria -------------------------------------------------------------------

void criterion_adult(Check& check) {
  std::string path = data_dir() + "/adult.csv";
  if (!fs::exists(path)) {
    check.skip("dataset not present; run scripts/fetch_data.sh (expects " + path + ")");
    return;
  }
  RawTable raw = parse_csv(path);
  Schema schema = infer_schema(raw);
  for (auto& col : schema) {
    // integer-valued numeric columns that the threshold rule would demote
    for (const char* name :
         {"age", "fnlwgt", "education_num", "capital_gain", "capital_loss", "hours_per_week"}) {
      if (col.name == name) {
        col.kind = ColumnKind::Numeric;
        col.categories.clear();
      }
    }
  }
  TabularDataset adult = load_csv(path, schema, Provenance::Real);

  check.expect(adult.n_cols() == 14,
               "columns " + std::to_string(adult.n_cols()) + " != 14");
  check.expect(adult.n_rows() == 47876,
               "rows " + std::to_string(adult.n_rows()) + " != 47876");

  std::vector<ConditionalQuery> queries(4);
  queries[0].kind = ConditionalQuery::Kind::Mean;
  queries[0].target = "education_num";
  queries[0].where = {"age", Predicate::Op::Eq, 17.0, "", false};
  queries[1].kind = ConditionalQuery::Kind::Mean;
  queries[1].target = "age";
  queries[1].where = {"education_num", Predicate::Op::Eq, 4.0, "", false};
  queries[2].kind = ConditionalQuery::Kind::Fraction;
  queries[2].target = "education_num";
  queries[2].target_value = 4.0;
  queries[2].where = {"age", Predicate::Op::Eq, 17.0, "", false};
  queries[3].kind = ConditionalQuery::Kind::Correlation;
  queries[3].target = "age";
  queries[3].second = "education_num";
  queries[3].where = {"age", Predicate::Op::Le, 20.0, "", false};
  StatsReport stats = column_statistics(adult, queries);

  auto overall_corr = [&]() {
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < stats.numeric_columns.size(); ++i) {
      if (stats.numeric_columns[i] == "age") a = i;
      if (stats.numeric_columns[i] == "education_num") b = i;
    }
    return stats.correlations[a][b];
  }();

  auto near = [&](double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os << what << " = " << got << " not within " << tol << " of " << want;
    check.expect(std::fabs(got - want) <= tol, os.str());
  };
  check.expect(stats.conditionals[0].defined, "mean(education_num | age=17) undefined");
  if (stats.conditionals[0].defined) {
    near(stats.conditionals[0].value, 6.69, 0.01, "mean(education_num | age=17)");
  }
  check.expect(stats.conditionals[1].defined, "mean(age | education_num=4) undefined");
  if (stats.conditionals[1].defined) {
    near(stats.conditionals[1].value, 49.12, 0.05, "mean(age | education_num=4)");
  }
  if (stats.conditionals[2].defined) {
    near(stats.conditionals[2].value, 0.007, 0.001, "fraction(education_num=4 | age=17)");
  }
  near(overall_corr, 0.03, 0.005, "corr(age, education_num)");
  if (stats.conditionals[3].defined) {
    near(stats.conditionals[3].value, 0.54, 0.02, "corr(age, education_num | age<=20)");
  }
}

void criterion_nursery(Check& check) {
  std::string path = data_dir() + "/nursery.csv";
  if (!fs::exists(path)) {
    check.skip("dataset not present; run scripts/fetch_data.sh (expects " + path + ")");
    return;
  }
  TabularDataset nursery = load_csv(path);
  check.expect(nursery.n_rows() == 12958,
               "rows " + std::to_string(nursery.n_rows()) + " != 12958");
  check.expect(nursery.n_cols() == 9, "columns " + std::to_string(nursery.n_cols()) + " != 9");
  for (const auto& col : nursery.schema()) {
    check.expect(col.kind == ColumnKind::Categorical, "column " + col.name + " not categorical");
  }
}

void criterion_shapley_oracles(Check& check) {
  Rng rng(1001);
  int models = 0;
  for (int rep = 0; rep < 20; ++rep) {
    int p = 3 + rep % 6;  // 3..8
    int arity = p >= 7 ? 2 : 3;
    TabularDataset table = factorial_table(p, arity);
    std::vector<Tree> trees;
    for (int k = 0; k < 2; ++k) {
      Tree t = random_grid_tree(p, arity, 4, rng);
      set_covers(t, table);
      trees.push_back(std::move(t));
    }
    TreeEnsembleModel model = wrap_model(trees, table.schema(), rng.uniform(-0.5, 0.5));
    BackgroundSet bg = uniform_background(table);
    ValueFunctionSpec spec;
    spec.scale = ValueScale::LogOdds;
    std::vector<double> x(p);
    for (auto& v : x) v = static_cast<double>(rng.uniform_index(arity));

    ShapleyVector exact = exact_shapley(model.margin_predictor(), x, bg, spec);
    ShapleyVector kernel =
        kernel_shap(model.margin_predictor(), x, bg, spec, 1 << p, 31 + rep);
    ShapleyVector fast = tree_shap(model, x);
    InteractionMatrix inter = tree_shap_interactions(model, x);

    double kernel_err = linf(kernel.phi, exact.phi);
    double tree_err = linf(fast.phi, exact.phi);
    double row_err = linf(inter.row_sums(), fast.phi);
    check.expect(kernel_err <= 1e-6,
                 "model " + std::to_string(rep) + ": kernel linf " + format_double(kernel_err));
    check.expect(tree_err <= 1e-6,
                 "model " + std::to_string(rep) + ": tree linf " + format_double(tree_err));
    check.expect(row_err <= 1e-9,
                 "model " + std::to_string(rep) + ": row sums linf " + format_double(row_err));
    ++models;
  }
  check.expect(models >= 20, "fewer than 20 models exercised");
}

void criterion_axioms(Check& check) {
  Rng rng(2002);
  int cases = 0;
  for (int rep = 0; rep < 25; ++rep) {
    int p = 3 + rep % 4;  // 3..6
    int arity = 3;
    TabularDataset table = factorial_table(p, arity);
    BackgroundSet bg = uniform_background(table);
    ValueFunctionSpec spec;
    spec.scale = ValueScale::LogOdds;
    std::vector<double> x(p);
    for (auto& v : x) v = static_cast<double>(rng.uniform_index(arity));

    // efficiency: exact, kernel and tree engines
    Tree t = random_grid_tree(p, arity, 4, rng);
    set_covers(t, table);
    TreeEnsembleModel model = wrap_model({t}, table.schema(), 0.2);
    {
      ShapleyVector v = exact_shapley(model.margin_predictor(), x, bg, spec);
      double gap = std::fabs(v.base_value + std::accumulate(v.phi.begin(), v.phi.end(), 0.0) -
                             v.prediction);
      check.expect(gap <= 1e-9, "exact efficiency gap " + format_double(gap));
      ShapleyVector k =
          kernel_shap(model.margin_predictor(), x, bg, spec, std::max(2 * p, 16), rep + 1);
      double kgap = std::fabs(k.base_value + std::accumulate(k.phi.begin(), k.phi.end(), 0.0) -
                              k.prediction);
      check.expect(kgap <= 1e-6, "kernel efficiency gap " + format_double(kgap));
      ShapleyVector f = tree_shap(model, x);
      double fgap = std::fabs(f.base_value + std::accumulate(f.phi.begin(), f.phi.end(), 0.0) -
                              f.prediction);
      check.expect(fgap <= 1e-9, "tree efficiency gap " + format_double(fgap));
      ++cases;
    }

    // dummy: a feature the model never touches
    {
      Tree s = random_grid_tree(p - 1, arity, 3, rng);  // uses features 0..p-2 only
      set_covers(s, table);
      TreeEnsembleModel sub = wrap_model({s}, table.schema());
      ShapleyVector v = exact_shapley(sub.margin_predictor(), x, bg, spec);
      check.expect(std::fabs(v.phi[p - 1]) <= 1e-9,
                   "exact dummy phi " + format_double(v.phi[p - 1]));
      ShapleyVector f = tree_shap(sub, x);
      check.expect(f.phi[p - 1] == 0.0, "tree dummy phi " + format_double(f.phi[p - 1]));
      ++cases;
    }

    // symmetry: two features in identical roles with identical values
    {
      PredictFn symmetric = [](const TabularDataset& rows) {
        std::vector<double> out(rows.n_rows());
        for (std::size_t i = 0; i < rows.n_rows(); ++i) {
          out[i] = rows.cell(i, 0) * 1.3 + rows.cell(i, 1) * 1.3;
        }
        return out;
      };
      std::vector<double> z = x;
      z[1] = z[0];
      ShapleyVector v = exact_shapley(symmetric, z, bg, spec);
      check.expect(std::fabs(v.phi[0] - v.phi[1]) <= 1e-9,
                   "symmetry gap " + format_double(std::fabs(v.phi[0] - v.phi[1])));
      ++cases;
    }

    // linearity of weighted model sums
    {
      Tree t1 = random_grid_tree(p, arity, 3, rng);
      Tree t2 = random_grid_tree(p, arity, 3, rng);
      set_covers(t1, table);
      set_covers(t2, table);
      TreeEnsembleModel m1 = wrap_model({t1}, table.schema());
      TreeEnsembleModel m2 = wrap_model({t2}, table.schema());
      double w1 = rng.uniform(0.2, 2.0), w2 = rng.uniform(0.2, 2.0);
      PredictFn combined = [&](const TabularDataset& rows) {
        auto a = m1.predict_margin(rows);
        auto b = m2.predict_margin(rows);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = w1 * a[i] + w2 * b[i];
        return a;
      };
      ShapleyVector va = exact_shapley(m1.margin_predictor(), x, bg, spec);
      ShapleyVector vb = exact_shapley(m2.margin_predictor(), x, bg, spec);
      ShapleyVector vc = exact_shapley(combined, x, bg, spec);
      double worst = 0;
      for (int j = 0; j < p; ++j) {
        worst = std::max(worst, std::fabs(vc.phi[j] - (w1 * va.phi[j] + w2 * vb.phi[j])));
      }
      check.expect(worst <= 1e-9, "linearity gap " + format_double(worst));
      ++cases;
    }
  }
  check.expect(cases >= 100, "only " + std::to_string(cases) + " randomized cases");
}

void criterion_effects_identity(Check& check) {
  Rng rng(3003);
  Schema schema = numeric_schema({"x0", "x1"});
  TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
  for (int i = 0; i < 400; ++i) {
    real.append_row(std::vector<double>{rng.normal(), rng.uniform()});
    synth.append_row(std::vector<double>{rng.normal(0.5, 1.0), rng.uniform()});
  }
  DetectionDataset d = labeled_pool(real, synth);
  train_test_split(d, 0.3, 1);
  TrainConfig cfg;
  cfg.n_trees = 30;
  cfg.max_depth = 3;
  TreeEnsembleModel model = fit_gbdt(d, cfg);

  for (int resolution : {5, 15, 30}) {
    Grid grid = make_grid(d.data, "x0", resolution);
    EffectResult e = ice(model.predictor(), d, "x0", grid, d.data.n_rows(), 2);
    pdp(e);
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      double mean = 0;
      for (const auto& curve : e.ice) mean += curve[g];
      mean /= static_cast<double>(e.ice.size());
      check.expect(std::fabs(e.pdp[g] - mean) <= 1e-12, "pdp != mean(ice) at grid point");
    }
  }

  // additive model: parallel curves within 1e-9
  Tree fx;
  fx.nodes.resize(3);
  fx.nodes[0] = TreeNode{0, false, 0.0, {}, 1, 2, true, 0, 4};
  fx.nodes[1] = TreeNode{-1, false, 0, {}, -1, -1, true, -0.7, 2};
  fx.nodes[2] = TreeNode{-1, false, 0, {}, -1, -1, true, 0.7, 2};
  Tree gz;
  gz.nodes.resize(3);
  gz.nodes[0] = TreeNode{1, false, 0.5, {}, 1, 2, true, 0, 4};
  gz.nodes[1] = TreeNode{-1, false, 0, {}, -1, -1, true, 0.4, 2};
  gz.nodes[2] = TreeNode{-1, false, 0, {}, -1, -1, true, -0.4, 2};
  TreeEnsembleModel additive = wrap_model({fx, gz}, schema);
  Grid grid = make_grid(d.data, "x0", 12);
  EffectResult e = ice(additive.margin_predictor(), d, "x0", grid, 60, 3);
  for (std::size_t i = 1; i < e.ice.size(); ++i) {
    double offset = e.ice[i][0] - e.ice[0][0];
    for (std::size_t g = 1; g < grid.points.size(); ++g) {
      check.expect(std::fabs((e.ice[i][g] - e.ice[0][g]) - offset) <= 1e-9,
                   "non-parallel additive ICE");
    }
  }
}

void criterion_pfi(Check& check) {
  Rng rng(4004);
  Schema schema = numeric_schema({"x0", "idle"});
  TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
  for (int i = 0; i < 400; ++i) {
    real.append_row(std::vector<double>{rng.normal(10.0, 1.0), rng.normal()});
    synth.append_row(std::vector<double>{rng.normal(0.0, 1.0), rng.normal()});
  }
  DetectionDataset d = labeled_pool(real, synth);
  train_test_split(d, 0.3, 2);
  Tree t;
  t.nodes.resize(3);
  t.nodes[0] = TreeNode{0, false, 5.0, {}, 1, 2, true, 0, 800};
  t.nodes[1] = TreeNode{-1, false, 0, {}, -1, -1, true, -4.0, 400};
  t.nodes[2] = TreeNode{-1, false, 0, {}, -1, -1, true, 4.0, 400};
  TreeEnsembleModel model = wrap_model({t}, schema);

  ImportanceReport acc =
      permutation_importance(model.predictor(), d, PfiLoss::OneMinusAccuracy, 20, 5);
  check.expect(acc.entries[1].mean == 0.0,
               "unused feature PFI " + format_double(acc.entries[1].mean) + " != 0");
  check.expect(std::fabs(acc.entries[0].mean - 0.5) <= 0.05,
               "informative feature PFI " + format_double(acc.entries[0].mean) +
                   " not within 0.05 of 0.5");
  ImportanceReport ll = permutation_importance(model.predictor(), d, PfiLoss::LogLoss, 5, 5);
  check.expect(std::fabs(ll.entries[1].mean) <= 1e-12, "unused feature log-loss PFI nonzero");
}

void criterion_detector(Check& check) {
  // identical distributions across five seeds
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 17);
    Schema schema = numeric_schema({"x0", "x1"});
    TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
    for (int i = 0; i < 1000; ++i) {
      real.append_row(std::vector<double>{rng.normal(), rng.uniform()});
      synth.append_row(std::vector<double>{rng.normal(), rng.uniform()});
    }
    DetectionDataset d = labeled_pool(real, synth);
    train_test_split(d, 0.3, seed);
    TrainConfig cfg;
    cfg.n_trees = 50;
    cfg.max_depth = 3;
    cfg.early_stopping_rounds = 10;
    cfg.seed = seed;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    double auc = evaluate(model.predictor(), d).test.auc;
    check.expect(std::fabs(auc - 0.5) <= 0.05,
                 "seed " + std::to_string(seed) + ": indistinguishable AUC " +
                     format_double(auc));
  }

  // separable pair
  {
    Rng rng(99);
    Schema schema = numeric_schema({"x0"});
    TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
    for (int i = 0; i < 500; ++i) {
      real.append_row(std::vector<double>{rng.normal(10, 1)});
      synth.append_row(std::vector<double>{rng.normal(0, 1)});
    }
    DetectionDataset d = labeled_pool(real, synth);
    train_test_split(d, 0.3, 7);
    TrainConfig cfg;
    cfg.n_trees = 40;
    cfg.max_depth = 3;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    double auc = evaluate(model.predictor(), d).test.auc;
    check.expect(auc >= 0.99, "separable AUC " + format_double(auc) + " < 0.99");
  }

  // monotone training loss
  {
    Rng rng(5);
    Schema schema = numeric_schema({"x0", "x1"});
    TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
    for (int i = 0; i < 400; ++i) {
      real.append_row(std::vector<double>{rng.normal(0.7, 1.0), rng.normal()});
      synth.append_row(std::vector<double>{rng.normal(0.0, 1.0), rng.normal()});
    }
    DetectionDataset d = labeled_pool(real, synth);
    TrainConfig cfg;
    cfg.n_trees = 80;
    cfg.max_depth = 4;
    FitDiagnostics diag;
    fit_gbdt(d, cfg, &diag);
    for (std::size_t r = 1; r < diag.train_logloss.size(); ++r) {
      check.expect(diag.train_logloss[r] <= diag.train_logloss[r - 1] + 1e-9,
                   "training log-loss increased at round " + std::to_string(r));
    }
  }
}

void criterion_end_to_end(Check& check) {
  TabularDataset real = audit_toy_real(5000, 42);
  TabularDataset synth = baseline_synthesize(real, SamplerConfig::Mode::Independent, 5000, 43);
  // plant an out-of-support spike: 20% of synthetic x2 at 2.0
  Rng rng(44);
  std::size_t x2 = 2;
  for (std::size_t r = 0; r < synth.n_rows(); ++r) {
    if (rng.uniform() < 0.2) synth.set_cell(r, x2, 2.0);
  }

  fs::path dir = fs::temp_directory_path() / "synaudit_acceptance_audit";
  fs::remove_all(dir);
  std::string real_csv = (dir / "real.csv").string();
  std::string synth_csv = (dir / "synthetic.csv").string();
  fs::create_directories(dir);
  save_csv(real, real_csv);
  save_csv(synth, synth_csv);

  AuditConfig cfg;
  cfg.seed = 7;
  cfg.replications = 1;
  cfg.tune_enabled = true;
  cfg.tune_budget = 6;
  cfg.pfi_repeats = 5;
  cfg.effect_features = {"x2", "x0"};
  cfg.cf_samples = 100000;
  cfg.cf_instances = 10;
  cfg.n_coalitions = 256;
  cfg.render_figures = true;
  AuditReport report = run_audit(real_csv, {synth_csv}, cfg, (dir / "out").string());
  const auto& doc = report.document;

  double auc = doc["detection"]["summary"]["test_auc_mean"].get<double>();
  check.expect(auc > 0.6, "detector test AUC " + format_double(auc) + " <= 0.6");

  // the dependence-carrying pair ranks in the top 3 of both importances
  auto top3_has_pair = [&](const char* key) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& je : doc["importance"][key]["entries"]) {
      ranked.emplace_back(-je["mean"].get<double>(), je["features"][0].get<std::string>());
    }
    std::sort(ranked.begin(), ranked.end());
    bool has_x0 = false, has_x1 = false;
    for (std::size_t k = 0; k < std::min<std::size_t>(3, ranked.size()); ++k) {
      has_x0 |= ranked[k].second == "x0";
      has_x1 |= ranked[k].second == "x1";
    }
    return has_x0 && has_x1;
  };
  check.expect(top3_has_pair("pfi"), "PFI top 3 does not contain the x0/x1 pair");
  check.expect(top3_has_pair("mean_abs_shap"),
               "mean |SHAP| top 3 does not contain the x0/x1 pair");

  // the planted region is flagged with PDP below 0.45
  bool spike_flagged = false;
  for (const auto& je : doc["effects"]) {
    if (je["grid"]["feature"] != "x2") continue;
    for (const auto& jf : je["flags"]) {
      if (jf["kind"] == "unrealistic_synthetic_region" && jf.contains("hi") &&
          jf["hi"].get<double>() >= 2.0 && jf["extreme_pdp"].get<double>() < 0.45) {
        spike_flagged = true;
      }
    }
  }
  check.expect(spike_flagged, "planted x2 spike not flagged by PDP < 0.45");

  // counterfactuals: 10 instances, 100% valid, mean sparsity <= 3
  const auto& cfs = doc["counterfactuals"];
  check.expect(cfs.size() == 10, "expected 10 counterfactual instances, got " +
                                     std::to_string(cfs.size()));
  double sparsity_sum = 0;
  std::size_t candidates = 0;
  for (const auto& jc : cfs) {
    check.expect(jc["result"]["status"] == "ok", "counterfactual search returned no candidates");
    for (const auto& cand : jc["result"]["candidates"]) {
      check.expect(cand["score"].get<double>() > 0.5, "invalid counterfactual returned");
      sparsity_sum += cand["sparsity"].get<double>();
      ++candidates;
    }
  }
  if (candidates > 0) {
    double mean_sparsity = sparsity_sum / static_cast<double>(candidates);
    check.expect(mean_sparsity <= 3.0,
                 "mean sparsity " + format_double(mean_sparsity) + " > 3");
  } else {
    check.expect(false, "no counterfactual candidates at all");
  }
  fs::remove_all(dir);
}

void criterion_chain_beats_independent(Check& check) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    TabularDataset real = audit_toy_real(5000, 100 + seed);
    auto auc_against = [&](SamplerConfig::Mode mode) {
      TabularDataset synth = baseline_synthesize(real, mode, 5000, 200 + seed);
      DetectionDataset d = build_detection_dataset(real, synth, seed);
      train_test_split(d, 0.3, seed);
      TrainConfig cfg;
      cfg.n_trees = 80;
      cfg.max_depth = 4;
      cfg.early_stopping_rounds = 10;
      cfg.seed = seed;
      TreeEnsembleModel model = fit_gbdt(d, cfg);
      return evaluate(model.predictor(), d).test.auc;
    };
    double independent = auc_against(SamplerConfig::Mode::Independent);
    double chain = auc_against(SamplerConfig::Mode::CartChain);
    check.expect(chain < independent,
                 "seed " + std::to_string(seed) + ": chain AUC " + format_double(chain) +
                     " !< independent AUC " + format_double(independent));
  }
}

void criterion_determinism(Check& check) {
  std::string real_csv = source_dir() + "/data/toy_real.csv";
  std::string synth_csv = source_dir() + "/data/toy_synthetic.csv";
  if (!fs::exists(real_csv) || !fs::exists(synth_csv)) {
    check.expect(false, "bundled toy dataset pair missing under data/");
    return;
  }
  AuditConfig cfg;
  cfg.seed = 11;
  cfg.replications = 2;
  cfg.tune_enabled = false;
  cfg.detector.n_trees = 50;
  cfg.detector.max_depth = 3;
  cfg.pfi_repeats = 3;
  cfg.shap_sample = 80;
  cfg.interaction_sample = 40;
  cfg.n_coalitions = 128;
  cfg.cf_samples = 5000;
  cfg.cf_instances = 3;

  fs::path base = fs::temp_directory_path() / "synaudit_acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);
  run_audit(real_csv, {synth_csv}, cfg, (base / "a").string());
  run_audit(real_csv, {synth_csv}, cfg, (base / "b").string());

  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  check.expect(read(base / "a/report.json") == read(base / "b/report.json"),
               "report.json differs between identical runs");
  std::size_t figures = 0;
  for (const auto& entry : fs::directory_iterator(base / "a/figures")) {
    ++figures;
    auto name = entry.path().filename();
    check.expect(read(entry.path()) == read(base / "b/figures" / name),
                 "figure " + name.string() + " differs between identical runs");
  }
  check.expect(figures > 0, "no figures rendered");
  fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void(Check&)> run;
  };
  std::vector<Criterion> criteria{
      {1, "adult dataset statistics", 30, criterion_adult},
      {2, "nursery ingestion", 5, criterion_nursery},
      {3, "shapley oracle equivalence", 120, criterion_shapley_oracles},
      {4, "efficiency/dummy/symmetry/linearity axioms", 120, criterion_axioms},
      {5, "pdp identity and ice parallelism", 60, criterion_effects_identity},
      {6, "pfi soundness", 60, criterion_pfi},
      {7, "detector sanity", 120, criterion_detector},
      {8, "end-to-end self-contained audit", 600, criterion_end_to_end},
      {9, "cart chain beats independent baseline", 600, criterion_chain_beats_independent},
      {10, "byte-identical seeded audit runs", 600, criterion_determinism},
  };

  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  bool any_failed = false;
  for (auto& criterion : criteria) {
    if (only > 0 && criterion.id != only) continue;
    Check check;
    auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!check.skipped && seconds > criterion.budget_seconds) {
      check.expect(false, "runtime " + format_double(seconds) + "s over the " +
                              format_double(criterion.budget_seconds) + "s budget");
    }
    const char* verdict = check.skipped ? "SKIP" : (check.failed ? "FAIL" : "PASS");
    std::ostringstream line;
    line << "[" << verdict << "] criterion " << criterion.id << ": " << criterion.name << " ("
         << static_cast<int>(seconds * 1000) << " ms)";
    for (const auto& note : check.notes) line << "\n    - " << note;
    std::cout << line.str() << "\n";
    any_failed |= check.failed;
  }
  return any_failed ? 1 : 0;
}
