#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "synaudit/effects.hpp"
#include "synaudit/gbdt.hpp"
#include "synaudit/mathx.hpp"

using namespace synaudit;
using namespace testutil;

namespace {

PredictFn constant_half() {
  return [](const TabularDataset& rows) { return std::vector<double>(rows.n_rows(), 0.5); };
}

}  // namespace

TEST_CASE("make_grid") {
  SUBCASE("quantile grid on uniform data hits the quartiles") {
    Rng rng(1);
    Schema schema = numeric_schema({"u"});
    TabularDataset d(schema, Provenance::Unlabeled);
    for (int i = 0; i < 2000; ++i) d.append_row(std::vector<double>{rng.uniform()});
    Grid g = make_grid(d, "u", 5);
    REQUIRE(g.points.size() == 5);
    std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0};
    for (int k = 0; k < 5; ++k) CHECK(std::fabs(g.points[k] - expect[k]) < 0.05);
  }

  SUBCASE("categorical grid lists every class") {
    std::vector<std::string> cats;
    for (int i = 0; i < 14; ++i) cats.push_back("c" + std::to_string(i));
    Schema schema{categorical_column("job", cats)};
    TabularDataset d(schema, Provenance::Unlabeled);
    for (int i = 0; i < 140; ++i) d.append_row(std::vector<double>{static_cast<double>(i % 14)});
    Grid g = make_grid(d, "job", 2, GridKind::Categories);
    CHECK(g.points.size() == 14);
    CHECK(g.labels.size() == 14);
  }

  SUBCASE("grid points are observed values only") {
    Schema schema = numeric_schema({"edu"});
    TabularDataset real(schema, Provenance::Real);
    for (int i = 0; i < 100; ++i) real.append_row(std::vector<double>{double(1 + i % 5)});
    Grid g_real = make_grid(real, "edu", 10);
    for (double v : g_real.points) CHECK(v == std::floor(v));

    // Pooled with synthetic non-integers, the grid picks those up.
    TabularDataset pooled = real;
    for (int i = 0; i < 60; ++i) pooled.append_row(std::vector<double>{2.5});
    Grid g_pooled = make_grid(pooled, "edu", 10);
    bool has_fraction = false;
    for (double v : g_pooled.points) has_fraction |= v != std::floor(v);
    CHECK(has_fraction);
  }

  SUBCASE("constant feature collapses to a flagged single point") {
    Schema schema = numeric_schema({"k"});
    TabularDataset d = dataset_of(schema, {{3}, {3}, {3}});
    Grid g = make_grid(d, "k", 5);
    CHECK(g.points.size() == 1);
    CHECK(g.constant_feature);
  }

  SUBCASE("resolution below two rejected") {
    Schema schema = numeric_schema({"x"});
    TabularDataset d = dataset_of(schema, {{1}, {2}});
    CHECK_THROWS_AS(make_grid(d, "x", 1), ValidationError);
  }

  SUBCASE("grid determinism") {
    DetectionDataset d = gaussian_pair(0, 1, 100, 4);
    Grid a = make_grid(d.data, "x0", 30);
    Grid b = make_grid(d.data, "x0", 30);
    CHECK(a.points == b.points);
  }
}

TEST_CASE("ice curves") {
  DetectionDataset d = gaussian_pair(0.0, 1.0, 60, 11, 2);

  SUBCASE("model ignoring the feature yields constant curves") {
    TreeEnsembleModel model = model_of({stump(1, 0.0, -1.0, 1.0, 5, 5)}, d.data.schema());
    Grid g = make_grid(d.data, "x0", 10);
    EffectResult e = ice(model.predictor(), d, "x0", g, 50, 1);
    for (const auto& curve : e.ice) {
      for (double v : curve) CHECK(v == curve.front());
    }
  }

  SUBCASE("additive model produces parallel curves") {
    // margin = f(x0) + g(noise): additive in the swept feature
    Tree fx = stump(0, 0.3, -0.8, 0.8, 5, 5);
    Tree gz = stump(1, 0.0, -0.5, 0.5, 5, 5);
    TreeEnsembleModel model = model_of({fx, gz}, d.data.schema());
    Grid grid = make_grid(d.data, "x0", 12);
    EffectResult e = ice(model.margin_predictor(), d, "x0", grid, 40, 2);
    REQUIRE(e.ice.size() >= 2);
    for (std::size_t i = 1; i < e.ice.size(); ++i) {
      double offset = e.ice[i][0] - e.ice[0][0];
      for (std::size_t g = 1; g < grid.points.size(); ++g) {
        CHECK(std::fabs((e.ice[i][g] - e.ice[0][g]) - offset) <= 1e-9);
      }
    }
  }

  SUBCASE("stump model: identical step curves for all instances") {
    TreeEnsembleModel model = model_of({stump(0, 0.5, -2.0, 2.0, 5, 5)}, d.data.schema());
    Grid g = make_grid(d.data, "x0", 8);
    EffectResult e = ice(model.predictor(), d, "x0", g, 30, 3);
    for (const auto& curve : e.ice) {
      for (std::size_t k = 0; k < g.points.size(); ++k) {
        double expect = sigmoid(g.points[k] < 0.5 ? -2.0 : 2.0);
        CHECK(curve[k] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("pdp") {
  SUBCASE("pointwise mean, exactly") {
    EffectResult e;
    e.grid.points = {0.0};
    e.ice = {{0.2}, {0.8}};
    e.instance_labels = {1, 0};
    pdp(e);
    CHECK(e.pdp[0] == doctest::Approx(0.5).epsilon(1e-15));
  }

  SUBCASE("flat 0.5 produces no flags") {
    DetectionDataset d = gaussian_pair(0, 0, 40, 5);
    Grid g = make_grid(d.data, "x0", 10);
    EffectResult e = ice(constant_half(), d, "x0", g, 20, 1);
    pdp(e);
    CHECK(e.flags.empty());
  }

  SUBCASE("pdp equals mean of ice on real models") {
    DetectionDataset d = gaussian_pair(0, 1, 80, 6);
    train_test_split(d, 0.3, 6);
    TrainConfig cfg;
    cfg.n_trees = 20;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    Grid g = make_grid(d.data, "x0", 15);
    EffectResult e = ice(model.predictor(), d, "x0", g, d.data.n_rows(), 2);
    pdp(e);
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      double mean = 0;
      for (const auto& curve : e.ice) mean += curve[k];
      mean /= static_cast<double>(e.ice.size());
      CHECK(e.pdp[k] == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  SUBCASE("out-of-support synthetic spike is flagged") {
    Rng rng(17);
    Schema schema = numeric_schema({"x"});
    TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
    for (int i = 0; i < 800; ++i) {
      real.append_row(std::vector<double>{rng.uniform()});
      // 20% of synthetic mass parked far outside the real support
      synth.append_row(std::vector<double>{i % 5 == 0 ? 2.0 : rng.uniform()});
    }
    DetectionDataset d = detection_of(real, synth);
    train_test_split(d, 0.3, 17);
    TrainConfig cfg;
    cfg.n_trees = 40;
    cfg.max_depth = 3;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    Grid g = make_grid(d.data, "x", 30);
    EffectResult e = ice(model.predictor(), d, "x", g, d.data.n_rows(), 3);
    pdp(e);

    bool spike_flagged = false;
    for (const auto& f : e.flags) {
      if (f.kind == RegionFlagKind::UnrealisticSynthetic && f.hi >= 2.0) spike_flagged = true;
    }
    CHECK(spike_flagged);
  }

  SUBCASE("scale flip: replacing C by 1-C maps every value to its complement") {
    DetectionDataset d = gaussian_pair(0, 1, 60, 9);
    train_test_split(d, 0.3, 9);
    TrainConfig cfg;
    cfg.n_trees = 10;
    TreeEnsembleModel model = fit_gbdt(d, cfg);
    PredictFn direct = model.predictor();
    PredictFn flipped = [direct](const TabularDataset& rows) {
      auto out = direct(rows);
      for (auto& v : out) v = 1.0 - v;
      return out;
    };
    Grid g = make_grid(d.data, "x0", 10);
    EffectResult a = ice(direct, d, "x0", g, 25, 4);
    EffectResult b = ice(flipped, d, "x0", g, 25, 4);
    pdp(a);
    pdp(b);
    for (std::size_t i = 0; i < a.ice.size(); ++i) {
      for (std::size_t k = 0; k < g.points.size(); ++k) {
        CHECK(b.ice[i][k] == doctest::Approx(1.0 - a.ice[i][k]).epsilon(1e-12));
      }
    }
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      CHECK(b.pdp[k] == doctest::Approx(1.0 - a.pdp[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("categorical effects") {
  Rng rng(23);
  Schema schema{categorical_column("job", {"common", "other", "rare", "over"})};
  schema.push_back(numeric_schema({"z"})[0]);

  auto draw_class = [&rng](double p_common, double p_other, double p_rare) {
    double u = rng.uniform();
    if (u < p_common) return 0.0;
    if (u < p_common + p_other) return 1.0;
    if (u < p_common + p_other + p_rare) return 2.0;
    return 3.0;
  };

  TabularDataset real(schema, Provenance::Real), synth(schema, Provenance::Synthetic);
  for (int i = 0; i < 1200; ++i) {
    // real: rare has mass, over is small; synthetic: rare absent, over doubled
    real.append_row(std::vector<double>{draw_class(0.40, 0.35, 0.15), rng.normal()});
    synth.append_row(std::vector<double>{draw_class(0.40, 0.30, 0.0), rng.normal()});
  }
  DetectionDataset d = detection_of(real, synth);
  train_test_split(d, 0.3, 23);
  TrainConfig cfg;
  cfg.n_trees = 50;
  cfg.max_depth = 3;
  TreeEnsembleModel model = fit_gbdt(d, cfg);

  EffectResult e = categorical_effect(model.predictor(), d, "job", d.data.n_rows(), 1);

  auto pdp_of = [&](const std::string& label) {
    for (std::size_t k = 0; k < e.grid.labels.size(); ++k) {
      if (e.grid.labels[k] == label) return e.pdp[k];
    }
    REQUIRE(false);
    return 0.0;
  };

  CHECK(pdp_of("rare") > 0.55);   // absent from synthetic: model calls it real
  CHECK(pdp_of("over") < 0.45);   // overrepresented in synthetic
  CHECK(std::fabs(pdp_of("common") - 0.5) <= 0.05);  // balanced class

  SUBCASE("class frequencies are reported side by side") {
    REQUIRE(e.annotation.real_frequency.size() == e.grid.points.size());
    double real_rare = 0, synth_rare = 0;
    for (std::size_t k = 0; k < e.grid.labels.size(); ++k) {
      if (e.grid.labels[k] == "rare") {
        real_rare = e.annotation.real_frequency[k];
        synth_rare = e.annotation.synthetic_frequency[k];
      }
    }
    CHECK(real_rare > 0.1);
    CHECK(synth_rare == 0.0);
  }

  SUBCASE("flags carry the class labels") {
    bool rare_flagged = false, over_flagged = false;
    for (const auto& f : e.flags) {
      if (f.category == "rare" && f.kind == RegionFlagKind::Underrepresented)
        rare_flagged = true;
      if (f.category == "over" && f.kind == RegionFlagKind::UnrealisticSynthetic)
        over_flagged = true;
    }
    CHECK(rare_flagged);
    CHECK(over_flagged);
  }
}
