#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "synaudit/baselines.hpp"
#include "synaudit/gbdt.hpp"
#include "synaudit/mathx.hpp"
#include "synaudit/metrics.hpp"
#include "synaudit/tuner.hpp"

using namespace synaudit;
using namespace testutil;

TEST_CASE("hand-built trees: additivity against the tree-walk oracle") {
  Schema schema = numeric_schema({"x", "y"});
  Tree t1 = stump(0, 1.0, -2.0, 2.0);
  Tree t2 = stump(1, 0.0, 0.5, -0.25);
  TreeEnsembleModel model = model_of({t1, t2}, schema, 0.1);

  TabularDataset rows = dataset_of(schema, {{0.5, -1}, {3, 2}, {1, 0}, {-7, 9}});
  auto probs = model.predict_proba(rows);
  for (std::size_t r = 0; r < rows.n_rows(); ++r) {
    double margin = 0.1 + oracle_tree_walk(t1, rows.row(r)) + oracle_tree_walk(t2, rows.row(r));
    CHECK(probs[r] == doctest::Approx(sigmoid(margin)).epsilon(1e-15));
  }

  SUBCASE("single stump gives sigmoid(+-2)") {
    TreeEnsembleModel one = model_of({t1}, schema, 0.0);
    TabularDataset two = dataset_of(schema, {{0.0, 0}, {2.0, 0}});
    auto p = one.predict_proba(two);
    CHECK(p[0] == doctest::Approx(sigmoid(-2.0)));
    CHECK(p[1] == doctest::Approx(sigmoid(2.0)));
  }
}

TEST_CASE("constant model predicts the class prior") {
  DetectionDataset d = gaussian_pair(0, 1, 60, 3);
  TrainConfig cfg;
  cfg.n_trees = 0;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  CHECK(model.trees.empty());
  auto probs = model.predict_proba(d.data);
  for (double p : probs) CHECK(p == doctest::Approx(0.5));  // balanced classes

  SUBCASE("base score 0 scores one half") {
    TreeEnsembleModel constant = model_of({}, d.data.schema(), 0.0);
    for (double p : constant.predict_proba(d.data)) CHECK(p == 0.5);
  }
}

TEST_CASE("separable classes reach 0.99 accuracy") {
  DetectionDataset d = gaussian_pair(0.0, 10.0, 500, 42);
  train_test_split(d, 0.3, 42);
  TrainConfig cfg;
  cfg.n_trees = 50;
  cfg.max_depth = 3;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  MetricsReport report = evaluate(model.predictor(), d);
  CHECK(report.test.accuracy >= 0.99);
  CHECK(report.test.auc >= 0.99);
}

TEST_CASE("indistinguishable classes score an AUC near one half") {
  DetectionDataset d = gaussian_pair(0.0, 0.0, 400, 9, 2);
  train_test_split(d, 0.3, 9);
  TrainConfig cfg;
  cfg.n_trees = 40;
  cfg.max_depth = 3;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  MetricsReport report = evaluate(model.predictor(), d);
  CHECK(report.test.auc == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::fabs(report.test.auc - 0.5) <= 0.05);
}

TEST_CASE("training log-loss is non-increasing per round") {
  DetectionDataset d = gaussian_pair(0.0, 1.5, 250, 3, 2);
  TrainConfig cfg;
  cfg.n_trees = 60;
  cfg.max_depth = 4;
  FitDiagnostics diag;
  fit_gbdt(d, cfg, &diag);
  REQUIRE(diag.train_logloss.size() >= 2);
  for (std::size_t r = 1; r < diag.train_logloss.size(); ++r) {
    CHECK(diag.train_logloss[r] <= diag.train_logloss[r - 1] + 1e-9);
  }
}

TEST_CASE("identical data, config and seed reproduce bit-identical trees") {
  DetectionDataset d = gaussian_pair(0.0, 0.7, 200, 17, 2);
  TrainConfig cfg;
  cfg.n_trees = 25;
  cfg.subsample = 0.8;
  cfg.colsample = 0.7;
  cfg.seed = 99;
  auto a = fit_gbdt(d, cfg);
  auto b = fit_gbdt(d, cfg);
  CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  DetectionDataset d = gaussian_pair(0.0, 1.0, 150, 21);
  train_test_split(d, 0.3, 21);
  TrainConfig cfg;
  cfg.n_trees = 30;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  std::vector<int> labels;
  TabularDataset test_rows = d.subset(true, &labels);
  double auc_prob = auc_score(labels, model.predict_proba(test_rows));
  double auc_margin = auc_score(labels, model.predict_margin(test_rows));
  CHECK(auc_prob == doctest::Approx(auc_margin).epsilon(1e-12));
}

TEST_CASE("trained ensembles match the oracle on exhaustive toy tables") {
  for (int p = 2; p <= 3; ++p) {
    TabularDataset table = binary_table(p);
    DetectionDataset d;
    d.data = TabularDataset(table.schema(), Provenance::Unlabeled);
    // labels: parity-ish rule to give the trees something to learn
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      for (int copy = 0; copy < 4; ++copy) {
        d.data.append_row(table.row(r));
        int bits = 0;
        for (int c = 0; c < p; ++c) bits += table.cell(r, c) > 0.5 ? 1 : 0;
        d.labels.push_back((bits % 2 == 0) == (copy < 3) ? 1 : 0);
      }
    }
    TrainConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 3;
    cfg.min_child_weight = 1e-3;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
      double margin = model.base_score;
      for (const auto& tree : model.trees) margin += oracle_tree_walk(tree, table.row(r));
      CHECK(model.predict_one(table.row(r)) == doctest::Approx(sigmoid(margin)).epsilon(1e-15));
    }
  }
}

TEST_CASE("unknown categories follow the default branch") {
  Schema schema{categorical_column("c", {"a", "b"})};
  Tree t;
  TreeNode root;
  root.feature = 0;
  root.categorical = true;
  root.left_categories = {0};
  root.default_left = false;
  root.left = 1;
  root.right = 2;
  root.cover = 2;
  TreeNode l, r;
  l.value = 1.5;
  l.cover = 1;
  r.value = -1.5;
  r.cover = 1;
  t.nodes = {root, l, r};
  TreeEnsembleModel model = model_of({t}, schema);
  TabularDataset rows = dataset_of(schema, {{0}, {1}, {kUnknownCategory}});
  auto probs = model.predict_proba(rows);
  CHECK(probs[0] == doctest::Approx(sigmoid(1.5)));
  CHECK(probs[1] == doctest::Approx(sigmoid(-1.5)));
  CHECK(probs[2] == doctest::Approx(sigmoid(-1.5)));  // unknown goes right here
  CHECK(std::isfinite(probs[2]));
}

TEST_CASE("fit_gbdt rejects single-class training data") {
  Schema schema = numeric_schema({"x"});
  DetectionDataset d;
  d.data = dataset_of(schema, {{1}, {2}, {3}});
  d.labels = {1, 1, 1};
  CHECK_THROWS_AS(fit_gbdt(d, TrainConfig{}), ValidationError);
}

TEST_CASE("all-constant features yield leaf-only trees") {
  Schema schema = numeric_schema({"x"});
  DetectionDataset d;
  d.data = dataset_of(schema, {{1}, {1}, {1}, {1}});
  d.labels = {1, 0, 1, 0};
  TrainConfig cfg;
  cfg.n_trees = 3;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  for (const auto& tree : model.trees) {
    CHECK(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
  }
}

TEST_CASE("model serialization reproduces predictions bit-exactly") {
  TempDir dir("model");
  DetectionDataset d = gaussian_pair(0.0, 0.8, 120, 31, 2);
  TrainConfig cfg;
  cfg.n_trees = 15;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  model.save(dir.file("m.json"));
  TreeEnsembleModel back = TreeEnsembleModel::load(dir.file("m.json"));
  auto before = model.predict_proba(d.data);
  auto after = back.predict_proba(d.data);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("evaluate reports confusion-derived rates") {
  DetectionDataset d = gaussian_pair(0.0, 0.0, 50, 2);
  train_test_split(d, 0.3, 2);

  SUBCASE("perfect classifier") {
    DetectionDataset sep = gaussian_pair(0.0, 10.0, 50, 2);
    train_test_split(sep, 0.3, 2);
    PredictFn by_threshold = [](const TabularDataset& rows) {
      std::vector<double> out(rows.n_rows());
      for (std::size_t i = 0; i < rows.n_rows(); ++i) out[i] = rows.cell(i, 0) < 5 ? 0.99 : 0.01;
      return out;
    };
    MetricsReport r = evaluate(by_threshold, sep);
    CHECK(r.test.accuracy == 1.0);
    CHECK(r.test.auc == 1.0);
    CHECK(r.test.fpr == 0.0);
    CHECK(r.test.fnr == 0.0);
  }
  SUBCASE("constant one half: ties classified synthetic") {
    PredictFn constant = [](const TabularDataset& rows) {
      return std::vector<double>(rows.n_rows(), 0.5);
    };
    MetricsReport r = evaluate(constant, d);
    CHECK(r.test.accuracy == doctest::Approx(0.5));
    CHECK(r.test.auc == doctest::Approx(0.5));
    CHECK(r.test.confusion.tp == 0);  // nothing classified real
  }
  SUBCASE("all-real predictions") {
    PredictFn always_real = [](const TabularDataset& rows) {
      return std::vector<double>(rows.n_rows(), 0.9);
    };
    MetricsReport r = evaluate(always_real, d);
    CHECK(r.test.fpr == 1.0);
    CHECK(r.test.fnr == 0.0);
  }
}

TEST_CASE("logistic baseline separates a margin-separated pair") {
  DetectionDataset d = gaussian_pair(0.0, 6.0, 200, 11);
  train_test_split(d, 0.3, 11);
  BaselineModel model = fit_baseline(d, BaselineKind::Logistic, 0);
  MetricsReport r = evaluate(model.predictor(), d);
  CHECK(r.test.accuracy >= 0.95);
}

TEST_CASE("single-stump forest accuracy equals the feature's class purity") {
  Schema schema{categorical_column("flag", {"off", "on"})};
  DetectionDataset d;
  d.data = TabularDataset(schema, Provenance::Unlabeled);
  // flag=off: 40 synthetic + 10 real; flag=on: 10 synthetic + 40 real
  for (int i = 0; i < 50; ++i) {
    d.data.append_row(std::vector<double>{0.0});
    d.labels.push_back(i < 10 ? 1 : 0);
    d.data.append_row(std::vector<double>{1.0});
    d.labels.push_back(i < 40 ? 1 : 0);
  }
  BaselineOptions options;
  options.n_trees = 1;
  options.max_depth = 1;
  options.min_leaf = 1;
  BaselineModel model = fit_baseline(d, BaselineKind::RandomForest, 5, options);
  auto probs = model.predict_proba(d.data);
  double correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if ((probs[i] > 0.5) == (d.labels[i] == 1)) correct += 1;
  }
  CHECK(correct / static_cast<double>(probs.size()) == doctest::Approx(0.8));
}

TEST_CASE("baselines stay near chance on shared-distribution labels") {
  DetectionDataset d = gaussian_pair(0.0, 0.0, 300, 77, 2);
  train_test_split(d, 0.3, 77);
  for (auto kind : {BaselineKind::Logistic, BaselineKind::RandomForest}) {
    BaselineModel model = fit_baseline(d, kind, 42);
    MetricsReport r = evaluate(model.predictor(), d);
    CHECK(std::fabs(r.test.auc - 0.5) <= 0.07);
  }
}

TEST_CASE("tuner") {
  DetectionDataset d = gaussian_pair(0.0, 2.0, 120, 55);
  train_test_split(d, 0.3, 55);

  SUBCASE("budget one returns the single sampled config") {
    std::vector<TrialRecord> trace;
    TrainConfig c = tune(d, 1, 4, TunerOptions{}, &trace);
    REQUIRE(trace.size() == 1);
    CHECK(c.max_depth == trace[0].config.max_depth);
    CHECK(c.learning_rate == trace[0].config.learning_rate);
  }
  SUBCASE("same seed twice gives identical configs") {
    TrainConfig a = tune(d, 6, 12);
    TrainConfig b = tune(d, 6, 12);
    CHECK(a.max_depth == b.max_depth);
    CHECK(a.learning_rate == b.learning_rate);
    CHECK(a.n_trees == b.n_trees);
    CHECK(a.l2 == b.l2);
    CHECK(a.min_child_weight == b.min_child_weight);
    CHECK(a.subsample == b.subsample);
  }
  SUBCASE("tuned config is no worse than the default, within a point") {
    TrainConfig tuned_cfg = tune(d, 20, 8);
    tuned_cfg.seed = 1;
    TrainConfig default_cfg;
    default_cfg.seed = 1;
    auto tuned = fit_gbdt(d, tuned_cfg);
    auto fallback = fit_gbdt(d, default_cfg);
    double tuned_auc = evaluate(tuned.predictor(), d).test.auc;
    double default_auc = evaluate(fallback.predictor(), d).test.auc;
    CHECK(tuned_auc >= default_auc - 0.01);
  }
  SUBCASE("invalid budget") {
    CHECK_THROWS_AS(tune(d, 0, 0), ValidationError);
  }
  SUBCASE("sampled configs stay inside the documented space") {
    std::vector<TrialRecord> trace;
    TunerOptions opts;
    opts.random_search = true;  // cheap uniform probes of the space mapping
    tune(d, 8, 31, opts, &trace);
    for (const auto& trial : trace) {
      const auto& c = trial.config;
      CHECK(c.max_depth >= 2);
      CHECK(c.max_depth <= 10);
      CHECK(c.learning_rate >= 0.01);
      CHECK(c.learning_rate <= 0.3);
      CHECK(c.n_trees >= 50);
      CHECK(c.n_trees <= 1000);
      CHECK(c.l2 >= 0.0);
      CHECK(c.l2 <= 10.0);
      CHECK(c.min_child_weight >= 1.0);
      CHECK(c.min_child_weight <= 20.0);
      CHECK(c.subsample >= 0.5);
      CHECK(c.subsample <= 1.0);
      CHECK(c.early_stopping_rounds > 0);
    }
  }
}

TEST_CASE("early stopping truncates to the best round") {
  DetectionDataset d = gaussian_pair(0.0, 0.0, 200, 8, 2);  // nothing to learn
  TrainConfig cfg;
  cfg.n_trees = 200;
  cfg.early_stopping_rounds = 5;
  FitDiagnostics diag;
  TreeEnsembleModel model = fit_gbdt(d, cfg, &diag);
  CHECK(model.trees.size() < 200);
  CHECK(diag.best_iteration + 1 == static_cast<int>(model.trees.size()));
}
