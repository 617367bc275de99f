#pragma once

#include <optional>
#include <string>
#include <vector>

#include "counterfactual.hpp"
#include "dataset.hpp"
#include "effects.hpp"
#include "gbdt.hpp"
#include "importance.hpp"
#include "metrics.hpp"
#include "render.hpp"
#include "shapley.hpp"
#include "tuner.hpp"

namespace synaudit {

struct AuditConfig {
  std::uint64_t seed = 0;
  int replications = 0;  // 0: one replication per synthetic file
  double test_fraction = 0.3;

  bool tune_enabled = true;
  int tune_budget = 10;
  bool tune_random_search = false;
  TrainConfig detector;  // used directly when tuning is off

  int pfi_repeats = 10;
  PfiLoss pfi_loss = PfiLoss::LogLoss;
  std::size_t shap_sample = 500;
  std::size_t interaction_sample = 100;
  int interaction_top_k = 20;

  int grid_resolution = 30;
  double delta = 0.05;
  std::vector<std::string> effect_features;  // empty: strongest by mean |SHAP|
  int auto_effect_features = 2;
  std::size_t ice_curves = 200;  // plotted/embedded curves; PDP uses all rows

  int n_coalitions = 2000;
  std::size_t background_size = 100;
  int n_imputations = 100;
  int instances_per_class = 1;
  bool conditional_shapley = true;

  bool cf_enabled = true;
  std::size_t cf_samples = 100000;
  std::size_t cf_instances = 10;
  std::size_t cf_max_returned = 4;
  std::vector<std::string> cf_immutable;

  bool render_figures = true;

  static AuditConfig from_json(const nlohmann::ordered_json& j);
  static AuditConfig load(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message, bool validation)
      : std::runtime_error("stage " + stage + ": " + message),
        stage_(std::move(stage)),
        validation_(validation) {}
  const std::string& stage() const { return stage_; }
  bool validation() const { return validation_; }  // true: caller input problem

 private:
  std::string stage_;
  bool validation_;
};

struct AuditReport {
  nlohmann::ordered_json document;
  // figure file name (relative to out_dir) -> svg markup
  std::vector<std::pair<std::string, std::string>> figures;
};

// Full pipeline: ingest, balance, split, tune, train, evaluate, then the four
// question stages; artifacts land in out_dir (report.json + figures/).
// Stage failures persist the partial report and raise StageError.
AuditReport run_audit(const std::string& real_csv,
                      const std::vector<std::string>& synthetic_csvs, const AuditConfig& config,
                      const std::string& out_dir,
                      const std::optional<Schema>& schema = {});

// Subset JSON-schema validator (type / properties / required / items / enum).
// Returns human-readable violations, empty when the document conforms.
std::vector<std::string> validate_json_schema(const nlohmann::ordered_json& document,
                                              const nlohmann::ordered_json& schema);

// Reduced copy for plotting and embedding: a stratified subset of curves,
// pdp/flags/annotation untouched.
EffectResult plot_subset(const EffectResult& effect, std::size_t max_curves);

// Parsers for re-rendering figures from a persisted report.
ImportanceReport importance_report_from_json(const nlohmann::ordered_json& j);
EffectResult effect_result_from_json(const nlohmann::ordered_json& j);
ShapleyVector shapley_vector_from_json(const nlohmann::ordered_json& j);
InteractionMatrix interaction_matrix_from_json(const nlohmann::ordered_json& j);

// Writes figure files for an existing report document; returns the pairs.
std::vector<std::pair<std::string, std::string>> render_report_figures(
    const nlohmann::ordered_json& document);

}  // namespace synaudit
