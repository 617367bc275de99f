#include "synaudit/audit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "synaudit/baselines.hpp"
#include "synaudit/generator.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

// --- config -----------------------------------------------------------------

namespace {

template <typename T>
void read_if(const nlohmann::ordered_json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

AuditConfig AuditConfig::from_json(const nlohmann::ordered_json& j) {
  AuditConfig c;
  read_if(j, "seed", c.seed);
  read_if(j, "replications", c.replications);
  read_if(j, "test_fraction", c.test_fraction);
  if (j.contains("tune")) {
    const auto& t = j["tune"];
    read_if(t, "enabled", c.tune_enabled);
    read_if(t, "budget", c.tune_budget);
    read_if(t, "random_search", c.tune_random_search);
  }
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    read_if(d, "n_trees", c.detector.n_trees);
    read_if(d, "max_depth", c.detector.max_depth);
    read_if(d, "learning_rate", c.detector.learning_rate);
    read_if(d, "min_child_weight", c.detector.min_child_weight);
    read_if(d, "l1", c.detector.l1);
    read_if(d, "l2", c.detector.l2);
    read_if(d, "subsample", c.detector.subsample);
    read_if(d, "colsample", c.detector.colsample);
    read_if(d, "early_stopping_rounds", c.detector.early_stopping_rounds);
  }
  if (j.contains("importance")) {
    const auto& i = j["importance"];
    read_if(i, "pfi_repeats", c.pfi_repeats);
    if (i.contains("pfi_loss")) {
      std::string loss = i["pfi_loss"].get<std::string>();
      if (loss == "log_loss") {
        c.pfi_loss = PfiLoss::LogLoss;
      } else if (loss == "one_minus_accuracy") {
        c.pfi_loss = PfiLoss::OneMinusAccuracy;
      } else {
        throw ValidationError("config: unknown pfi_loss '" + loss + "'");
      }
    }
    read_if(i, "shap_sample", c.shap_sample);
    read_if(i, "interaction_sample", c.interaction_sample);
    read_if(i, "interaction_top_k", c.interaction_top_k);
  }
  if (j.contains("effects")) {
    const auto& e = j["effects"];
    read_if(e, "grid_resolution", c.grid_resolution);
    read_if(e, "delta", c.delta);
    read_if(e, "features", c.effect_features);
    read_if(e, "auto_features", c.auto_effect_features);
    read_if(e, "ice_curves", c.ice_curves);
  }
  if (j.contains("shapley")) {
    const auto& s = j["shapley"];
    read_if(s, "n_coalitions", c.n_coalitions);
    read_if(s, "background_size", c.background_size);
    read_if(s, "n_imputations", c.n_imputations);
    read_if(s, "instances_per_class", c.instances_per_class);
    read_if(s, "conditional", c.conditional_shapley);
  }
  if (j.contains("counterfactual")) {
    const auto& f = j["counterfactual"];
    read_if(f, "enabled", c.cf_enabled);
    read_if(f, "n_samples", c.cf_samples);
    read_if(f, "instances", c.cf_instances);
    read_if(f, "max_returned", c.cf_max_returned);
    read_if(f, "immutable", c.cf_immutable);
  }
  read_if(j, "render_figures", c.render_figures);
  return c;
}

AuditConfig AuditConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config file " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json AuditConfig::to_json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["replications"] = replications;
  j["test_fraction"] = test_fraction;
  j["tune"] = {{"enabled", tune_enabled},
               {"budget", tune_budget},
               {"random_search", tune_random_search}};
  j["detector"] = {{"n_trees", detector.n_trees},
                   {"max_depth", detector.max_depth},
                   {"learning_rate", detector.learning_rate},
                   {"min_child_weight", detector.min_child_weight},
                   {"l1", detector.l1},
                   {"l2", detector.l2},
                   {"subsample", detector.subsample},
                   {"colsample", detector.colsample},
                   {"early_stopping_rounds", detector.early_stopping_rounds}};
  j["importance"] = {
      {"pfi_repeats", pfi_repeats},
      {"pfi_loss", pfi_loss == PfiLoss::LogLoss ? "log_loss" : "one_minus_accuracy"},
      {"shap_sample", shap_sample},
      {"interaction_sample", interaction_sample},
      {"interaction_top_k", interaction_top_k}};
  j["effects"] = {{"grid_resolution", grid_resolution},
                  {"delta", delta},
                  {"features", effect_features},
                  {"auto_features", auto_effect_features},
                  {"ice_curves", ice_curves}};
  j["shapley"] = {{"n_coalitions", n_coalitions},
                  {"background_size", background_size},
                  {"n_imputations", n_imputations},
                  {"instances_per_class", instances_per_class},
                  {"conditional", conditional_shapley}};
  j["counterfactual"] = {{"enabled", cf_enabled},
                         {"n_samples", cf_samples},
                         {"instances", cf_instances},
                         {"max_returned", cf_max_returned},
                         {"immutable", cf_immutable}};
  j["render_figures"] = render_figures;
  return j;
}

// --- helpers ------------------------------------------------------------------

EffectResult plot_subset(const EffectResult& effect, std::size_t max_curves) {
  if (effect.ice.size() <= max_curves) return effect;
  EffectResult out = effect;
  out.ice.clear();
  out.instance_labels.clear();
  out.instance_rows.clear();
  std::size_t taken[2] = {0, 0};
  std::size_t want_each = max_curves / 2;
  for (std::size_t i = 0; i < effect.ice.size(); ++i) {
    int label = effect.instance_labels[i] == 1 ? 1 : 0;
    if (taken[label] >= want_each) continue;
    ++taken[label];
    out.ice.push_back(effect.ice[i]);
    out.instance_labels.push_back(effect.instance_labels[i]);
    out.instance_rows.push_back(effect.instance_rows[i]);
  }
  return out;
}

namespace {

struct ReplicationOutput {
  MetricsReport metrics;
  std::vector<double> pfi_means;            // per feature
  std::vector<double> shap_means;           // per feature
  std::map<std::string, double> interaction_means;  // "a" or "a x b" -> mean
  ImportanceReport pfi_report;
};

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  }
  return out;
}

std::string pair_key(const std::vector<std::string>& features) {
  std::string k = features[0];
  for (std::size_t i = 1; i < features.size(); ++i) k += " x " + features[i];
  return k;
}

// Stratified sample of test-split row indices.
std::vector<std::size_t> stratified_test_rows(const DetectionDataset& d, std::size_t want,
                                              std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.split[i] == 1) by_class[d.labels[i] == 1 ? 1 : 0].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> out;
  for (int cls = 0; cls < 2; ++cls) {
    Rng fork = rng.fork(static_cast<std::uint64_t>(cls));
    auto take = fork.sample_indices(by_class[cls].size(),
                                    std::min(want / 2, by_class[cls].size()));
    for (std::size_t k : take) out.push_back(by_class[cls][k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

// --- run_audit -----------------------------------------------------------------

AuditReport run_audit(const std::string& real_csv,
                      const std::vector<std::string>& synthetic_csvs, const AuditConfig& config,
                      const std::string& out_dir, const std::optional<Schema>& schema) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "figures");

  AuditReport report;
  auto& doc = report.document;
  doc["schema_version"] = "1.0";
  std::string current_stage = "ingest";

  auto persist_partial = [&](const std::string& stage, const std::string& what) {
    doc["aborted_stage"] = stage;
    doc["error"] = what;
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    out << doc.dump(2) << '\n';
  };

  try {
    // ingest
    if (synthetic_csvs.empty()) throw ValidationError("no synthetic input files");
    TabularDataset real = load_csv(real_csv, schema, Provenance::Real);
    std::vector<TabularDataset> synths;
    for (const auto& path : synthetic_csvs) {
      synths.push_back(load_csv(path, schema, Provenance::Synthetic));
    }

    nlohmann::ordered_json meta;
    meta["seed"] = config.seed;
    meta["replications"] = config.replications;
    meta["real_file"] = fs::path(real_csv).filename().string();
    nlohmann::ordered_json synth_names = nlohmann::ordered_json::array();
    for (const auto& p : synthetic_csvs) synth_names.push_back(fs::path(p).filename().string());
    meta["synthetic_files"] = std::move(synth_names);
    meta["n_real_rows"] = real.n_rows();
    meta["n_synthetic_rows"] = synths.front().n_rows();
    meta["config"] = config.to_json();
    doc["metadata"] = std::move(meta);

    // replication loop: default one per synthetic file
    int reps = config.replications > 0 ? config.replications
                                       : static_cast<int>(synthetic_csvs.size());
    std::vector<ReplicationOutput> outputs;
    TreeEnsembleModel model0;
    DetectionDataset dd0;
    std::vector<InteractionMatrix> matrices0;
    std::vector<std::string> feature_names;
    for (const auto& col : real.schema()) feature_names.push_back(col.name);

    for (int r = 0; r < reps; ++r) {
      std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(r);
      const TabularDataset& synth = synths[static_cast<std::size_t>(r) % synths.size()];

      current_stage = "detection_dataset";
      DetectionDataset dd = build_detection_dataset(real, synth, rep_seed);
      current_stage = "split";
      train_test_split(dd, config.test_fraction, rep_seed);

      current_stage = "tune";
      TrainConfig train_cfg = config.detector;
      if (config.tune_enabled) {
        TunerOptions opts;
        opts.random_search = config.tune_random_search;
        train_cfg = tune(dd, config.tune_budget, rep_seed, opts);
      }
      train_cfg.seed = rep_seed;

      current_stage = "train";
      TreeEnsembleModel model = fit_gbdt(dd, train_cfg);

      current_stage = "evaluate";
      ReplicationOutput out;
      out.metrics = evaluate(model.predictor(), dd);

      current_stage = "importance";
      out.pfi_report = permutation_importance(model.predictor(), dd, config.pfi_loss,
                                              config.pfi_repeats, rep_seed);
      for (const auto& e : out.pfi_report.entries) out.pfi_means.push_back(e.mean);

      auto shap_rows = stratified_test_rows(dd, config.shap_sample, rep_seed ^ 0x51);
      std::vector<ShapleyVector> vectors;
      vectors.reserve(shap_rows.size());
      for (std::size_t i : shap_rows) vectors.push_back(tree_shap(model, dd.data.row(i)));
      ImportanceReport shap_rep = shap_importance(vectors);
      for (const auto& e : shap_rep.entries) out.shap_means.push_back(e.mean);

      auto inter_rows = stratified_test_rows(dd, config.interaction_sample, rep_seed ^ 0x52);
      std::vector<InteractionMatrix> matrices;
      matrices.reserve(inter_rows.size());
      for (std::size_t i : inter_rows) {
        matrices.push_back(tree_shap_interactions(model, dd.data.row(i)));
      }
      ImportanceReport inter_rep = interaction_importance(matrices, 0);
      for (const auto& e : inter_rep.entries) {
        out.interaction_means[pair_key(e.features)] = e.mean;
      }

      if (r == 0) {
        model0 = model;
        dd0 = dd;
        matrices0 = std::move(matrices);
      }
      outputs.push_back(std::move(out));
    }

    // detection section
    current_stage = "evaluate";
    {
      nlohmann::ordered_json detection;
      nlohmann::ordered_json reps_json = nlohmann::ordered_json::array();
      double acc = 0, auc = 0, fpr = 0, fnr = 0;
      for (const auto& out : outputs) {
        reps_json.push_back(metrics_to_json(out.metrics));
        acc += out.metrics.test.accuracy;
        auc += out.metrics.test.auc;
        fpr += out.metrics.test.fpr;
        fnr += out.metrics.test.fnr;
      }
      auto n = static_cast<double>(outputs.size());
      detection["replications"] = std::move(reps_json);
      detection["summary"] = {{"test_accuracy_mean", acc / n},
                              {"test_auc_mean", auc / n},
                              {"test_fpr_mean", fpr / n},
                              {"test_fnr_mean", fnr / n}};
      doc["detection"] = std::move(detection);
    }

    // Q1 aggregation across replications
    current_stage = "importance";
    ImportanceReport pfi_agg, shap_agg, inter_agg;
    {
      pfi_agg.method = ImportanceMethod::PFI;
      pfi_agg.loss = config.pfi_loss;
      pfi_agg.notes = outputs.front().pfi_report.notes;
      shap_agg.method = ImportanceMethod::MeanAbsShap;
      for (std::size_t f = 0; f < feature_names.size(); ++f) {
        ImportanceEntry pe, se;
        pe.features = {feature_names[f]};
        se.features = {feature_names[f]};
        for (const auto& out : outputs) {
          pe.values.push_back(out.pfi_means[f]);
          se.values.push_back(out.shap_means[f]);
        }
        auto finish = [](ImportanceEntry& e) {
          for (double v : e.values) e.mean += v;
          e.mean /= static_cast<double>(e.values.size());
          double ss = 0;
          for (double v : e.values) ss += (v - e.mean) * (v - e.mean);
          e.sd = e.values.size() > 1
                     ? std::sqrt(ss / static_cast<double>(e.values.size() - 1))
                     : 0.0;
        };
        finish(pe);
        finish(se);
        pfi_agg.entries.push_back(std::move(pe));
        shap_agg.entries.push_back(std::move(se));
      }

      inter_agg.method = ImportanceMethod::Interaction;
      std::map<std::string, ImportanceEntry> merged;
      for (const auto& out : outputs) {
        for (const auto& [key, mean] : out.interaction_means) {
          auto& entry = merged[key];
          entry.values.push_back(mean);
        }
      }
      for (auto& [key, entry] : merged) {
        std::size_t split = key.find(" x ");
        entry.features = split == std::string::npos
                             ? std::vector<std::string>{key}
                             : std::vector<std::string>{key.substr(0, split), key.substr(split + 3)};
        for (double v : entry.values) entry.mean += v;
        entry.mean /= static_cast<double>(entry.values.size());
        double ss = 0;
        for (double v : entry.values) ss += (v - entry.mean) * (v - entry.mean);
        entry.sd = entry.values.size() > 1
                       ? std::sqrt(ss / static_cast<double>(entry.values.size() - 1))
                       : 0.0;
        inter_agg.entries.push_back(entry);
      }
      std::sort(inter_agg.entries.begin(), inter_agg.entries.end(),
                [](const ImportanceEntry& a, const ImportanceEntry& b) {
                  if (a.mean != b.mean) return a.mean > b.mean;
                  return a.features < b.features;
                });
      if (config.interaction_top_k > 0 &&
          inter_agg.entries.size() > static_cast<std::size_t>(config.interaction_top_k)) {
        inter_agg.entries.resize(static_cast<std::size_t>(config.interaction_top_k));
      }

      nlohmann::ordered_json importance;
      importance["pfi"] = pfi_agg.to_json();
      importance["mean_abs_shap"] = shap_agg.to_json();
      importance["interactions"] = inter_agg.to_json();
      doc["importance"] = std::move(importance);
    }

    std::vector<std::string> findings;

    // Q2: effects on the strongest features (replication 0 model)
    current_stage = "effects";
    std::vector<EffectResult> effects;
    {
      std::vector<std::string> chosen = config.effect_features;
      if (chosen.empty()) {
        std::vector<std::size_t> order(feature_names.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return shap_agg.entries[a].mean > shap_agg.entries[b].mean;
        });
        for (int k = 0; k < config.auto_effect_features &&
                        k < static_cast<int>(order.size());
             ++k) {
          chosen.push_back(feature_names[order[k]]);
        }
      }
      nlohmann::ordered_json effects_json = nlohmann::ordered_json::array();
      for (const auto& feature : chosen) {
        std::size_t col = dd0.data.column_index(feature);
        EffectResult effect;
        if (dd0.data.schema()[col].kind == ColumnKind::Categorical) {
          effect = categorical_effect(model0.predictor(), dd0, feature, dd0.data.n_rows(),
                                      config.seed, config.delta);
        } else {
          Grid grid = make_grid(dd0.data, feature, config.grid_resolution);
          effect = ice(model0.predictor(), dd0, feature, grid, dd0.data.n_rows(), config.seed);
          pdp(effect, config.delta);
        }
        for (const auto& flag : effect.flags) findings.push_back(flag.text());
        EffectResult reduced = plot_subset(effect, config.ice_curves);
        effects_json.push_back(reduced.to_json());
        effects.push_back(std::move(reduced));
      }
      doc["effects"] = std::move(effects_json);
    }

    // Q3: local explanations for confidently classified test instances
    current_stage = "shapley";
    std::vector<std::pair<std::size_t, ExplanationBundle>> bundles;
    {
      std::vector<int> test_labels;
      auto test_rows_idx = dd0.rows_in_split(true);
      TabularDataset test_rows = dd0.subset(true, &test_labels);
      auto probs = model0.predict_proba(test_rows);

      std::vector<std::size_t> synth_order, real_order;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        (test_labels[i] == 1 ? real_order : synth_order).push_back(i);
      }
      std::sort(synth_order.begin(), synth_order.end(),
                [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
      std::sort(real_order.begin(), real_order.end(),
                [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

      BackgroundSet background = BackgroundSet::from_dataset(
          dd0.subset(false), config.background_size, config.seed ^ 0xb6);
      std::optional<ConditionalSampler> sampler;
      std::set<ShapEngine> engines{ShapEngine::KernelMarginal, ShapEngine::Tree,
                                   ShapEngine::TreeInteractions};
      if (config.conditional_shapley) {
        ConditionalSampler::Config sc;
        sc.seed = config.seed ^ 0xc1;
        sampler = ConditionalSampler::fit(dd0.subset(false), sc);
        engines.insert(ShapEngine::KernelConditional);
      }

      ExplainOptions opts;
      opts.n_coalitions = config.n_coalitions;
      opts.n_imputations = config.n_imputations;
      opts.seed = config.seed ^ 0xd4;

      nlohmann::ordered_json explanations = nlohmann::ordered_json::array();
      auto explain_rows = [&](const std::vector<std::size_t>& order, int label) {
        for (int k = 0;
             k < config.instances_per_class && k < static_cast<int>(order.size()); ++k) {
          std::size_t local = order[k];
          std::size_t row = test_rows_idx[local];
          ExplanationBundle bundle =
              explain_instance(model0, dd0.data.row(row), engines, background,
                               sampler ? &*sampler : nullptr, opts);
          for (const auto& tag : bundle.tags) {
            findings.push_back("instance " + std::to_string(row) + " (" +
                               (label == 1 ? "real" : "synthetic") + "): feature '" +
                               tag.feature + "' " + tag.tag);
          }
          nlohmann::ordered_json je;
          je["row"] = row;
          je["label"] = label == 1 ? "real" : "synthetic";
          je["bundle"] = bundle.to_json();
          explanations.push_back(std::move(je));
          bundles.emplace_back(row, std::move(bundle));
        }
      };
      explain_rows(synth_order, 0);
      explain_rows(real_order, 1);
      doc["explanations"] = std::move(explanations);
    }

    // Q4: counterfactuals for detected-synthetic instances
    current_stage = "counterfactual";
    if (config.cf_enabled) {
      std::vector<std::size_t> real_train_rows;
      for (std::size_t i = 0; i < dd0.labels.size(); ++i) {
        if (dd0.split[i] == 0 && dd0.labels[i] == 1) real_train_rows.push_back(i);
      }
      TabularDataset real_train = dd0.data.select_rows(real_train_rows);
      SamplerConfig chain_cfg;
      chain_cfg.seed = config.seed;
      if (!config.cf_immutable.empty()) {
        // Immutable features first so conditioning is a chain prefix.
        std::vector<std::string> order = config.cf_immutable;
        for (const auto& name : feature_names) {
          if (std::find(order.begin(), order.end(), name) == order.end()) {
            order.push_back(name);
          }
        }
        chain_cfg.column_order = order;
      }
      ChainModel chain = fit_chain(real_train, chain_cfg);

      std::vector<int> test_labels;
      auto test_rows_idx = dd0.rows_in_split(true);
      TabularDataset test_rows = dd0.subset(true, &test_labels);
      auto probs = model0.predict_proba(test_rows);
      std::vector<std::size_t> detected;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        if (test_labels[i] == 0 && probs[i] <= 0.5) detected.push_back(i);
      }
      std::sort(detected.begin(), detected.end(),
                [&](std::size_t a, std::size_t b) { return probs[a] < probs[b]; });
      if (detected.size() > config.cf_instances) detected.resize(config.cf_instances);

      nlohmann::ordered_json cf_json = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < detected.size(); ++k) {
        std::size_t row = test_rows_idx[detected[k]];
        MCCEConfig mcce;
        mcce.n_samples = config.cf_samples;
        mcce.immutable = config.cf_immutable;
        mcce.max_returned = config.cf_max_returned;
        mcce.seed = config.seed + 1000 + k;
        CounterfactualSet result =
            generate_counterfactuals(model0.predictor(), dd0.data.row(row), chain, mcce);
        if (result.status == "no_valid_candidates") {
          findings.push_back("instance " + std::to_string(row) +
                             ": no valid counterfactual among " +
                             std::to_string(result.candidates_tried) + " candidates");
        }
        nlohmann::ordered_json jc;
        jc["row"] = row;
        jc["result"] = result.to_json(dd0.data.schema(), dd0.data.row(row));
        cf_json.push_back(std::move(jc));
      }
      doc["counterfactuals"] = std::move(cf_json);
    } else {
      doc["counterfactuals"] = nlohmann::ordered_json::array();
    }

    doc["findings"] = findings;

    // figures
    current_stage = "report";
    nlohmann::ordered_json figure_list = nlohmann::ordered_json::array();
    if (config.render_figures) {
      report.figures.emplace_back(
          "figures/importance.svg",
          render_importance({{"permutation importance", pfi_agg},
                             {"mean |SHAP| (tree, log-odds)", shap_agg}}));
      figure_list.push_back({{"file", "figures/importance.svg"}, {"section", "importance"}});
      if (!inter_agg.entries.empty()) {
        report.figures.emplace_back("figures/interactions.svg",
                                    render_interactions(inter_agg, config.interaction_top_k));
        figure_list.push_back({{"file", "figures/interactions.svg"}, {"section", "importance"}});
      }
      for (const auto& effect : effects) {
        std::string name = "figures/effect_" + safe_name(effect.grid.feature) + ".svg";
        report.figures.emplace_back(name, render_effects(effect, config.ice_curves));
        figure_list.push_back({{"file", name}, {"section", "effects"}});
      }
      for (const auto& [row, bundle] : bundles) {
        std::vector<std::pair<std::string, ShapleyVector>> prob_vectors;
        for (const auto& [name, vec] : bundle.vectors) {
          if (vec.scale == ValueScale::Probability) prob_vectors.emplace_back(name, vec);
        }
        if (!prob_vectors.empty()) {
          std::string name = "figures/force_row" + std::to_string(row) + ".svg";
          report.figures.emplace_back(name, render_force(prob_vectors));
          figure_list.push_back({{"file", name}, {"section", "explanations"}});
        }
        if (bundle.interactions) {
          std::string name = "figures/waterfall_row" + std::to_string(row) + ".svg";
          report.figures.emplace_back(name, render_waterfall(*bundle.interactions, 10));
          figure_list.push_back({{"file", name}, {"section", "explanations"}});
        }
      }
    }
    doc["figures"] = std::move(figure_list);

    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!out) throw ValidationError("cannot write report to " + out_dir);
    out << doc.dump(2) << '\n';
    for (const auto& [name, svg] : report.figures) {
      std::ofstream fig(fs::path(out_dir) / name, std::ios::binary);
      fig << svg;
    }
  } catch (const ValidationError& e) {
    persist_partial(current_stage, e.what());
    throw StageError(current_stage, e.what(), true);
  } catch (const std::exception& e) {
    persist_partial(current_stage, e.what());
    throw StageError(current_stage, e.what(), false);
  }

  return report;
}

// --- schema validation --------------------------------------------------------

namespace {

void validate_node(const nlohmann::ordered_json& doc, const nlohmann::ordered_json& schema,
                   const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    bool ok = (type == "object" && doc.is_object()) || (type == "array" && doc.is_array()) ||
              (type == "string" && doc.is_string()) || (type == "number" && doc.is_number()) ||
              (type == "integer" && doc.is_number_integer()) ||
              (type == "boolean" && doc.is_boolean()) || (type == "null" && doc.is_null());
    if (!ok) {
      errors.push_back(path + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool hit = false;
    for (const auto& v : schema["enum"]) hit |= v == doc;
    if (!hit) errors.push_back(path + ": value not in enum");
  }
  if (schema.contains("required")) {
    for (const auto& key : schema["required"]) {
      if (!doc.contains(key.get<std::string>())) {
        errors.push_back(path + ": missing required key '" + key.get<std::string>() + "'");
      }
    }
  }
  if (schema.contains("properties") && doc.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items()) {
      if (doc.contains(key)) validate_node(doc[key], sub, path + "/" + key, errors);
    }
    if (schema.contains("additionalProperties") &&
        schema["additionalProperties"].is_boolean() &&
        !schema["additionalProperties"].get<bool>()) {
      for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!schema["properties"].contains(key)) {
          errors.push_back(path + ": unexpected key '" + key + "'");
        }
      }
    }
  }
  if (schema.contains("items") && doc.is_array()) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      validate_node(doc[i], schema["items"], path + "[" + std::to_string(i) + "]", errors);
    }
  }
}

}  // namespace

std::vector<std::string> validate_json_schema(const nlohmann::ordered_json& document,
                                              const nlohmann::ordered_json& schema) {
  std::vector<std::string> errors;
  validate_node(document, schema, "$", errors);
  return errors;
}

// --- report re-rendering --------------------------------------------------------

ImportanceReport importance_report_from_json(const nlohmann::ordered_json& j) {
  ImportanceReport r;
  std::string method = j.at("method").get<std::string>();
  if (method == "pfi") {
    r.method = ImportanceMethod::PFI;
  } else if (method == "mean_abs_shap") {
    r.method = ImportanceMethod::MeanAbsShap;
  } else {
    r.method = ImportanceMethod::Interaction;
  }
  if (j.contains("loss")) {
    r.loss = j["loss"] == "log_loss" ? PfiLoss::LogLoss : PfiLoss::OneMinusAccuracy;
  }
  for (const auto& je : j.at("entries")) {
    ImportanceEntry e;
    e.features = je.at("features").get<std::vector<std::string>>();
    e.mean = je.at("mean").get<double>();
    e.sd = je.at("sd").get<double>();
    if (je.contains("values")) e.values = je["values"].get<std::vector<double>>();
    r.entries.push_back(std::move(e));
  }
  if (j.contains("notes")) r.notes = j["notes"].get<std::vector<std::string>>();
  return r;
}

EffectResult effect_result_from_json(const nlohmann::ordered_json& j) {
  EffectResult e;
  const auto& jg = j.at("grid");
  e.grid.feature = jg.at("feature").get<std::string>();
  std::string kind = jg.at("kind").get<std::string>();
  if (kind == "categories") {
    e.grid.kind = GridKind::Categories;
    e.grid.labels = jg.at("labels").get<std::vector<std::string>>();
    e.grid.points.resize(e.grid.labels.size());
  } else {
    e.grid.kind = kind == "uniform" ? GridKind::Uniform : GridKind::Quantile;
    e.grid.points = jg.at("points").get<std::vector<double>>();
    e.grid.constant_feature = jg.value("constant_feature", false);
  }
  e.pdp = j.at("pdp").get<std::vector<double>>();
  e.delta = j.at("delta").get<double>();
  e.instance_labels = j.at("instance_labels").get<std::vector<int>>();
  e.ice = j.at("ice").get<std::vector<std::vector<double>>>();
  for (const auto& jf : j.at("flags")) {
    RegionFlag f;
    f.feature = jf.at("feature").get<std::string>();
    f.kind = jf.at("kind") == "unrealistic_synthetic_region"
                 ? RegionFlagKind::UnrealisticSynthetic
                 : RegionFlagKind::Underrepresented;
    if (jf.contains("category")) f.category = jf["category"].get<std::string>();
    if (jf.contains("lo")) f.lo = jf["lo"].get<double>();
    if (jf.contains("hi")) f.hi = jf["hi"].get<double>();
    f.extreme_pdp = jf.at("extreme_pdp").get<double>();
    e.flags.push_back(std::move(f));
  }
  const auto& ja = j.at("marginals");
  if (ja.contains("bin_edges")) e.annotation.bin_edges = ja["bin_edges"].get<std::vector<double>>();
  e.annotation.real_frequency = ja.at("real_frequency").get<std::vector<double>>();
  e.annotation.synthetic_frequency = ja.at("synthetic_frequency").get<std::vector<double>>();
  if (j.contains("notes")) e.notes = j["notes"].get<std::vector<std::string>>();
  return e;
}

ShapleyVector shapley_vector_from_json(const nlohmann::ordered_json& j) {
  ShapleyVector v;
  v.scale = j.at("scale") == "probability" ? ValueScale::Probability : ValueScale::LogOdds;
  v.base_value = j.at("base_value").get<double>();
  v.prediction = j.at("prediction").get<double>();
  for (const auto& je : j.at("phi")) {
    v.features.push_back(je.at("feature").get<std::string>());
    v.phi.push_back(je.at("phi").get<double>());
  }
  return v;
}

InteractionMatrix interaction_matrix_from_json(const nlohmann::ordered_json& j) {
  InteractionMatrix m;
  m.scale = j.at("scale") == "probability" ? ValueScale::Probability : ValueScale::LogOdds;
  m.base_value = j.at("base_value").get<double>();
  m.prediction = j.at("prediction").get<double>();
  m.features = j.at("features").get<std::vector<std::string>>();
  m.values = j.at("values").get<std::vector<std::vector<double>>>();
  return m;
}

std::vector<std::pair<std::string, std::string>> render_report_figures(
    const nlohmann::ordered_json& document) {
  std::vector<std::pair<std::string, std::string>> figures;
  if (document.contains("importance")) {
    const auto& imp = document["importance"];
    figures.emplace_back(
        "figures/importance.svg",
        render_importance(
            {{"permutation importance", importance_report_from_json(imp.at("pfi"))},
             {"mean |SHAP| (tree, log-odds)",
              importance_report_from_json(imp.at("mean_abs_shap"))}}));
    ImportanceReport inter = importance_report_from_json(imp.at("interactions"));
    if (!inter.entries.empty()) {
      figures.emplace_back("figures/interactions.svg", render_interactions(inter, 20));
    }
  }
  if (document.contains("effects")) {
    for (const auto& je : document["effects"]) {
      EffectResult effect = effect_result_from_json(je);
      std::string name;
      for (char c : effect.grid.feature) {
        name += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
      }
      figures.emplace_back("figures/effect_" + name + ".svg", render_effects(effect));
    }
  }
  if (document.contains("explanations")) {
    for (const auto& je : document["explanations"]) {
      std::string row = std::to_string(je.at("row").get<std::size_t>());
      const auto& bundle = je.at("bundle");
      std::vector<std::pair<std::string, ShapleyVector>> prob_vectors;
      for (const auto& [name, jv] : bundle.at("shapley").items()) {
        ShapleyVector v = shapley_vector_from_json(jv);
        if (v.scale == ValueScale::Probability) prob_vectors.emplace_back(name, v);
      }
      if (!prob_vectors.empty()) {
        figures.emplace_back("figures/force_row" + row + ".svg", render_force(prob_vectors));
      }
      if (bundle.contains("interactions")) {
        figures.emplace_back(
            "figures/waterfall_row" + row + ".svg",
            render_waterfall(interaction_matrix_from_json(bundle["interactions"]), 10));
      }
    }
  }
  return figures;
}

}  // namespace synaudit
