// synaudit: audits synthetic tabular data by training a real-vs-synthetic
// detector and explaining it with importance, effect, Shapley and
// counterfactual methods.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "synaudit/audit.hpp"
#include "synaudit/baselines.hpp"
#include "synaudit/generator.hpp"

namespace {

using namespace synaudit;
namespace fs = std::filesystem;

std::optional<Schema> maybe_schema(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_schema_file(path);
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << j.dump(2) << '\n';
}

DetectionDataset load_pair(const std::string& real_csv, const std::string& synth_csv,
                           const std::string& schema_path, std::uint64_t seed,
                           double test_fraction) {
  auto schema = maybe_schema(schema_path);
  TabularDataset real = load_csv(real_csv, schema, Provenance::Real);
  TabularDataset synth = load_csv(synth_csv, schema, Provenance::Synthetic);
  DetectionDataset d = build_detection_dataset(real, synth, seed);
  train_test_split(d, test_fraction, seed);
  return d;
}

struct CommonOpts {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  std::string schema;
};

int cmd_train(const CommonOpts& common, const std::string& real_csv,
              const std::string& synth_csv, int tune_budget, const std::string& metrics_path) {
  DetectionDataset d = load_pair(real_csv, synth_csv, common.schema, common.seed, 0.3);
  TrainConfig cfg;
  if (!common.config.empty()) cfg = AuditConfig::load(common.config).detector;
  if (tune_budget > 0) cfg = tune(d, tune_budget, common.seed);
  cfg.seed = common.seed;
  TreeEnsembleModel model = fit_gbdt(d, cfg);
  model.save(common.out);
  MetricsReport report = evaluate(model.predictor(), d);
  if (!metrics_path.empty()) write_json(metrics_path, metrics_to_json(report));
  std::cout << "model written to " << common.out << "\n"
            << "test accuracy " << report.test.accuracy << ", test AUC " << report.test.auc
            << "\n";
  return 0;
}

int cmd_audit(const CommonOpts& common, const std::string& real_csv,
              const std::vector<std::string>& synth_csvs, bool seed_given) {
  AuditConfig cfg;
  if (!common.config.empty()) cfg = AuditConfig::load(common.config);
  if (seed_given) cfg.seed = common.seed;
  AuditReport report = run_audit(real_csv, synth_csvs, cfg, common.out, maybe_schema(common.schema));
  const auto& summary = report.document["detection"]["summary"];
  std::cout << "audit written to " << common.out << "\n"
            << "detection test accuracy (mean) " << summary["test_accuracy_mean"]
            << ", AUC (mean) " << summary["test_auc_mean"] << "\n";
  for (const auto& finding : report.document["findings"]) {
    std::cout << "finding: " << finding.get<std::string>() << "\n";
  }
  return 0;
}

int cmd_importance(const CommonOpts& common, const std::string& model_path,
                   const std::string& real_csv, const std::string& synth_csv,
                   const std::string& method, int repeats, const std::string& loss_name) {
  TreeEnsembleModel model = TreeEnsembleModel::load(model_path);
  DetectionDataset d = load_pair(real_csv, synth_csv, common.schema, common.seed, 0.3);
  nlohmann::ordered_json out;
  if (method == "pfi" || method == "both") {
    PfiLoss loss = loss_name == "one_minus_accuracy" ? PfiLoss::OneMinusAccuracy
                                                     : PfiLoss::LogLoss;
    out["pfi"] = permutation_importance(model.predictor(), d, loss, repeats, common.seed)
                     .to_json();
  }
  if (method == "shap" || method == "both") {
    std::vector<ShapleyVector> vectors;
    auto rows = d.rows_in_split(true);
    for (std::size_t i : rows) vectors.push_back(tree_shap(model, d.data.row(i)));
    out["mean_abs_shap"] = shap_importance(vectors).to_json();
  }
  write_json(common.out, out);
  std::cout << "importance written to " << common.out << "\n";
  return 0;
}

int cmd_effects(const CommonOpts& common, const std::string& model_path,
                const std::string& real_csv, const std::string& synth_csv,
                const std::string& feature, int resolution, double delta, bool svg) {
  TreeEnsembleModel model = TreeEnsembleModel::load(model_path);
  DetectionDataset d = load_pair(real_csv, synth_csv, common.schema, common.seed, 0.3);
  std::size_t col = d.data.column_index(feature);
  EffectResult effect;
  if (d.data.schema()[col].kind == ColumnKind::Categorical) {
    effect = categorical_effect(model.predictor(), d, feature, d.data.n_rows(), common.seed,
                                delta);
  } else {
    Grid grid = make_grid(d.data, feature, resolution);
    effect = ice(model.predictor(), d, feature, grid, d.data.n_rows(), common.seed);
    pdp(effect, delta);
  }
  EffectResult reduced = plot_subset(effect, 200);
  write_json(common.out, reduced.to_json());
  if (svg) {
    std::string path = fs::path(common.out).replace_extension(".svg").string();
    std::ofstream fig(path, std::ios::binary);
    fig << render_effects(reduced);
    std::cout << "figure written to " << path << "\n";
  }
  for (const auto& flag : effect.flags) std::cout << "flag: " << flag.text() << "\n";
  std::cout << "effect written to " << common.out << "\n";
  return 0;
}

int cmd_shapley(const CommonOpts& common, const std::string& model_path,
                const std::string& real_csv, const std::string& synth_csv, std::size_t row,
                const std::string& engine, int coalitions, std::size_t background_size,
                int imputations) {
  TreeEnsembleModel model = TreeEnsembleModel::load(model_path);
  DetectionDataset d = load_pair(real_csv, synth_csv, common.schema, common.seed, 0.3);
  if (row >= d.data.n_rows()) throw ValidationError("--row out of range");

  std::set<ShapEngine> engines;
  if (engine == "kernel") {
    engines = {ShapEngine::KernelMarginal};
  } else if (engine == "kernel_conditional") {
    engines = {ShapEngine::KernelConditional};
  } else if (engine == "exact") {
    engines = {ShapEngine::Exact};
  } else if (engine == "tree") {
    engines = {ShapEngine::Tree};
  } else if (engine == "interactions") {
    engines = {ShapEngine::TreeInteractions};
  } else if (engine == "all") {
    engines = {ShapEngine::KernelMarginal, ShapEngine::KernelConditional, ShapEngine::Tree,
               ShapEngine::TreeInteractions};
  } else {
    throw ValidationError("unknown engine '" + engine + "'");
  }

  BackgroundSet background =
      BackgroundSet::from_dataset(d.subset(false), background_size, common.seed);
  std::optional<ConditionalSampler> sampler;
  if (engines.count(ShapEngine::KernelConditional)) {
    sampler = ConditionalSampler::fit(d.subset(false));
  }
  ExplainOptions opts;
  opts.n_coalitions = coalitions;
  opts.n_imputations = imputations;
  opts.seed = common.seed;
  ExplanationBundle bundle = explain_instance(model, d.data.row(row), engines, background,
                                              sampler ? &*sampler : nullptr, opts);
  write_json(common.out, bundle.to_json());
  std::cout << "explanation written to " << common.out << " (score " << bundle.score << ")\n";
  return 0;
}

int cmd_counterfactual(const CommonOpts& common, const std::string& model_path,
                       const std::string& real_csv, const std::string& synth_csv,
                       std::size_t row, std::size_t n_samples, std::size_t max_returned,
                       const std::vector<std::string>& immutable) {
  TreeEnsembleModel model = TreeEnsembleModel::load(model_path);
  DetectionDataset d = load_pair(real_csv, synth_csv, common.schema, common.seed, 0.3);
  if (row >= d.data.n_rows()) throw ValidationError("--row out of range");

  std::vector<std::size_t> real_rows;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] == 1) real_rows.push_back(i);
  }
  SamplerConfig chain_cfg;
  chain_cfg.seed = common.seed;
  ChainModel chain = fit_chain(d.data.select_rows(real_rows), chain_cfg);

  MCCEConfig mcce;
  mcce.n_samples = n_samples;
  mcce.max_returned = max_returned;
  mcce.immutable = immutable;
  mcce.seed = common.seed;
  CounterfactualSet result =
      generate_counterfactuals(model.predictor(), d.data.row(row), chain, mcce);
  write_json(common.out, result.to_json(d.data.schema(), d.data.row(row)));

  // changed-feature table, changed cells marked with *
  const Schema& schema = d.data.schema();
  std::cout << "status: " << result.status << " (tried " << result.candidates_tried
            << ", valid " << result.valid_count << ")\n";
  for (std::size_t c = 0; c < schema.size(); ++c) {
    std::cout << schema[c].name << ": " << d.data.cell_text(row, c);
    for (const auto& cf : result.candidates) {
      std::string cell = schema[c].kind == ColumnKind::Numeric
                             ? format_double(cf.cells[c])
                             : schema[c].category_label(cf.cells[c]);
      std::cout << " | " << cell << (cf.changed[c] ? "*" : "");
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_synthesize(const CommonOpts& common, const std::string& input_csv,
                   const std::string& mode, std::size_t n, const std::string& chain_out) {
  auto schema = maybe_schema(common.schema);
  TabularDataset real = load_csv(input_csv, schema, Provenance::Real);
  SamplerConfig cfg;
  cfg.seed = common.seed;
  if (mode == "independent") {
    cfg.mode = SamplerConfig::Mode::Independent;
  } else if (mode == "cart_chain") {
    cfg.mode = SamplerConfig::Mode::CartChain;
  } else {
    throw ValidationError("unknown mode '" + mode + "'");
  }
  ChainModel chain = fit_chain(real, cfg);
  if (!chain_out.empty()) write_json(chain_out, chain.to_json());
  TabularDataset synth = chain.sample(n == 0 ? real.n_rows() : n, common.seed);
  save_csv(synth, common.out);
  std::cout << "synthesized " << synth.n_rows() << " rows to " << common.out << "\n";
  return 0;
}

int cmd_report(const CommonOpts& common, const std::string& report_path,
               const std::string& schema_path) {
  std::ifstream in(report_path);
  if (!in) throw ValidationError("cannot open report: " + report_path);
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("report parse: ") + e.what());
  }

  if (!schema_path.empty()) {
    std::ifstream sin(schema_path);
    if (!sin) throw ValidationError("cannot open schema: " + schema_path);
    nlohmann::ordered_json schema;
    sin >> schema;
    auto errors = validate_json_schema(doc, schema);
    for (const auto& e : errors) std::cout << "schema violation: " << e << "\n";
    if (!errors.empty()) throw ValidationError("report does not validate against the schema");
    std::cout << "report validates against " << schema_path << "\n";
  }

  if (!common.out.empty()) {
    fs::create_directories(fs::path(common.out) / "figures");
    auto figures = render_report_figures(doc);
    for (const auto& [name, svg] : figures) {
      std::ofstream fig(fs::path(common.out) / name, std::ios::binary);
      fig << svg;
    }
    std::cout << "re-rendered " << figures.size() << " figures to " << common.out << "\n";
  }
  if (doc.contains("findings")) {
    for (const auto& finding : doc["findings"]) {
      std::cout << "finding: " << finding.get<std::string>() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synaudit: explainable synthetic tabular data auditing"};
  app.require_subcommand(1);

  CommonOpts common;
  std::function<int()> action;

  auto add_common = [&common](CLI::App* cmd, bool needs_out = true) {
    cmd->add_option("--seed", common.seed, "random seed");
    if (needs_out) cmd->add_option("--out", common.out, "output path")->required();
    cmd->add_option("--config", common.config, "JSON config file");
    cmd->add_option("--data-schema", common.schema, "JSON column schema for CSV ingestion");
  };

  // train
  {
    auto* cmd = app.add_subcommand("train", "fit the detection model on a real/synthetic pair");
    auto real = std::make_shared<std::string>();
    auto synth = std::make_shared<std::string>();
    auto budget = std::make_shared<int>(0);
    auto metrics = std::make_shared<std::string>();
    cmd->add_option("--real", *real, "real data CSV")->required();
    cmd->add_option("--synthetic", *synth, "synthetic data CSV")->required();
    cmd->add_option("--tune", *budget, "tuning budget in trials (0 = defaults)");
    cmd->add_option("--metrics", *metrics, "also write a metrics JSON");
    add_common(cmd);
    cmd->callback([&, real, synth, budget, metrics] {
      action = [&, real, synth, budget, metrics] {
        return cmd_train(common, *real, *synth, *budget, *metrics);
      };
    });
  }
  // audit
  {
    auto* cmd = app.add_subcommand("audit", "run the full audit pipeline");
    auto real = std::make_shared<std::string>();
    auto synths = std::make_shared<std::vector<std::string>>();
    cmd->add_option("--real", *real, "real data CSV")->required();
    cmd->add_option("--synthetic", *synths, "synthetic data CSV (repeatable)")->required();
    add_common(cmd);
    auto* seed_opt = cmd->get_option("--seed");
    cmd->callback([&, real, synths, seed_opt] {
      bool seed_given = seed_opt->count() > 0;
      action = [&, real, synths, seed_given] {
        return cmd_audit(common, *real, *synths, seed_given);
      };
    });
  }
  // importance
  {
    auto* cmd = app.add_subcommand("importance", "global feature importance (Q1)");
    auto model = std::make_shared<std::string>();
    auto real = std::make_shared<std::string>();
    auto synth = std::make_shared<std::string>();
    auto method = std::make_shared<std::string>("both");
    auto repeats = std::make_shared<int>(10);
    auto loss = std::make_shared<std::string>("log_loss");
    cmd->add_option("--model", *model, "model JSON")->required();
    cmd->add_option("--real", *real)->required();
    cmd->add_option("--synthetic", *synth)->required();
    cmd->add_option("--method", *method, "pfi | shap | both");
    cmd->add_option("--repeats", *repeats, "PFI permutation repeats");
    cmd->add_option("--loss", *loss, "log_loss | one_minus_accuracy");
    add_common(cmd);
    cmd->callback([&, model, real, synth, method, repeats, loss] {
      action = [&, model, real, synth, method, repeats, loss] {
        return cmd_importance(common, *model, *real, *synth, *method, *repeats, *loss);
      };
    });
  }
  // effects
  {
    auto* cmd = app.add_subcommand("effects", "ICE / PDP feature effects (Q2)");
    auto model = std::make_shared<std::string>();
    auto real = std::make_shared<std::string>();
    auto synth = std::make_shared<std::string>();
    auto feature = std::make_shared<std::string>();
    auto resolution = std::make_shared<int>(30);
    auto delta = std::make_shared<double>(0.05);
    auto svg = std::make_shared<bool>(false);
    cmd->add_option("--model", *model)->required();
    cmd->add_option("--real", *real)->required();
    cmd->add_option("--synthetic", *synth)->required();
    cmd->add_option("--feature", *feature)->required();
    cmd->add_option("--resolution", *resolution, "grid resolution");
    cmd->add_option("--delta", *delta, "flag band half-width");
    cmd->add_flag("--svg", *svg, "also render the figure");
    add_common(cmd);
    cmd->callback([&, model, real, synth, feature, resolution, delta, svg] {
      action = [&, model, real, synth, feature, resolution, delta, svg] {
        return cmd_effects(common, *model, *real, *synth, *feature, *resolution, *delta, *svg);
      };
    });
  }
  // shapley
  {
    auto* cmd = app.add_subcommand("shapley", "local Shapley explanations (Q3)");
    auto model = std::make_shared<std::string>();
    auto real = std::make_shared<std::string>();
    auto synth = std::make_shared<std::string>();
    auto row = std::make_shared<std::size_t>(0);
    auto engine = std::make_shared<std::string>("all");
    auto coalitions = std::make_shared<int>(2000);
    auto background = std::make_shared<std::size_t>(100);
    auto imputations = std::make_shared<int>(100);
    cmd->add_option("--model", *model)->required();
    cmd->add_option("--real", *real)->required();
    cmd->add_option("--synthetic", *synth)->required();
    cmd->add_option("--row", *row, "row index into the detection dataset")->required();
    cmd->add_option("--engine", *engine,
                    "kernel | kernel_conditional | exact | tree | interactions | all");
    cmd->add_option("--coalitions", *coalitions);
    cmd->add_option("--background", *background);
    cmd->add_option("--imputations", *imputations);
    add_common(cmd);
    cmd->callback([&, model, real, synth, row, engine, coalitions, background, imputations] {
      action = [&, model, real, synth, row, engine, coalitions, background, imputations] {
        return cmd_shapley(common, *model, *real, *synth, *row, *engine, *coalitions,
                           *background, *imputations);
      };
    });
  }
  // counterfactual
  {
    auto* cmd = app.add_subcommand("counterfactual", "MCCE-style counterfactuals (Q4)");
    auto model = std::make_shared<std::string>();
    auto real = std::make_shared<std::string>();
    auto synth = std::make_shared<std::string>();
    auto row = std::make_shared<std::size_t>(0);
    auto samples = std::make_shared<std::size_t>(100000);
    auto max_returned = std::make_shared<std::size_t>(4);
    auto immutable = std::make_shared<std::vector<std::string>>();
    cmd->add_option("--model", *model)->required();
    cmd->add_option("--real", *real)->required();
    cmd->add_option("--synthetic", *synth)->required();
    cmd->add_option("--row", *row)->required();
    cmd->add_option("--samples", *samples, "Monte Carlo candidates");
    cmd->add_option("--max-returned", *max_returned);
    cmd->add_option("--immutable", *immutable, "feature kept fixed (repeatable)");
    add_common(cmd);
    cmd->callback([&, model, real, synth, row, samples, max_returned, immutable] {
      action = [&, model, real, synth, row, samples, max_returned, immutable] {
        return cmd_counterfactual(common, *model, *real, *synth, *row, *samples, *max_returned,
                                  *immutable);
      };
    });
  }
  // synthesize
  {
    auto* cmd = app.add_subcommand("synthesize", "fit the tree chain and sample synthetic rows");
    auto input = std::make_shared<std::string>();
    auto mode = std::make_shared<std::string>("cart_chain");
    auto n = std::make_shared<std::size_t>(0);
    auto chain_out = std::make_shared<std::string>();
    cmd->add_option("--input", *input, "training CSV")->required();
    cmd->add_option("--mode", *mode, "independent | cart_chain");
    cmd->add_option("-n,--n", *n, "rows to sample (0 = input size)");
    cmd->add_option("--chain-out", *chain_out, "also dump the fitted chain model JSON");
    add_common(cmd);
    cmd->callback([&, input, mode, n, chain_out] {
      action = [&, input, mode, n, chain_out] {
        return cmd_synthesize(common, *input, *mode, *n, *chain_out);
      };
    });
  }
  // report
  {
    auto* cmd = app.add_subcommand("report", "validate and re-render an existing report");
    auto report = std::make_shared<std::string>();
    auto schema = std::make_shared<std::string>();
    cmd->add_option("--report", *report, "report.json path")->required();
    cmd->add_option("--validate", *schema, "JSON schema to validate against");
    cmd->add_option("--seed", common.seed, "random seed");
    cmd->add_option("--out", common.out, "directory for re-rendered figures");
    cmd->add_option("--config", common.config, "JSON config file");
    cmd->callback([&, report, schema] {
      action = [&, report, schema] { return cmd_report(common, *report, *schema); };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // validation errors exit 2, --help exits 0
  }

  try {
    return action();
  } catch (const synaudit::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.validation() ? 2 : 1;
  } catch (const synaudit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
