#include "synaudit/importance.hpp"

#include <algorithm>
#include <cmath>

#include "synaudit/metrics.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

double loss_value(PfiLoss loss, const std::vector<int>& labels,
                  const std::vector<double>& probs) {
  if (loss == PfiLoss::LogLoss) return log_loss_score(labels, probs);
  double correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool predicted_real = probs[i] > 0.5;
    if ((labels[i] == 1) == predicted_real) correct += 1;
  }
  return 1.0 - correct / static_cast<double>(labels.size());
}

double sd_of(const std::vector<double>& values, double mean) {
  if (values.size() < 2) return 0.0;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace

ImportanceReport permutation_importance(const PredictFn& model, const DetectionDataset& d,
                                        PfiLoss loss, int repeats, std::uint64_t seed,
                                        bool on_test_split) {
  if (repeats < 1) throw ValidationError("permutation_importance: repeats must be >= 1");

  std::vector<int> labels;
  TabularDataset rows = d.has_split() ? d.subset(on_test_split, &labels) : d.data;
  if (!d.has_split()) labels = d.labels;
  if (rows.n_rows() == 0) throw ValidationError("permutation_importance: empty evaluation split");
  if (rows.n_rows() < 2) {
    throw ValidationError("permutation_importance: permutation needs at least 2 rows");
  }

  double baseline = loss_value(loss, labels, model(rows));

  ImportanceReport report;
  report.method = ImportanceMethod::PFI;
  report.loss = loss;
  report.notes.push_back(
      "marginal permutation breaks feature dependence; correlated features can "
      "share or hide importance");

  Rng rng(seed);
  const std::size_t n = rows.n_rows();
  for (std::size_t c = 0; c < rows.n_cols(); ++c) {
    ImportanceEntry entry;
    entry.features = {rows.schema()[c].name};
    std::vector<double> original(n);
    for (std::size_t r = 0; r < n; ++r) original[r] = rows.cell(r, c);

    TabularDataset permuted = rows;
    for (int rep = 0; rep < repeats; ++rep) {
      Rng fork = rng.fork(static_cast<std::uint64_t>(c) * 1000003ULL +
                          static_cast<std::uint64_t>(rep));
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      fork.shuffle(perm);
      for (std::size_t r = 0; r < n; ++r) permuted.set_cell(r, c, original[perm[r]]);
      entry.values.push_back(loss_value(loss, labels, model(permuted)) - baseline);
    }
    for (std::size_t r = 0; r < n; ++r) permuted.set_cell(r, c, original[r]);

    for (double v : entry.values) entry.mean += v;
    entry.mean /= static_cast<double>(entry.values.size());
    entry.sd = sd_of(entry.values, entry.mean);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

ImportanceReport shap_importance(const std::vector<ShapleyVector>& vectors) {
  if (vectors.empty()) throw ValidationError("shap_importance: empty collection");
  const auto& names = vectors.front().features;
  for (const auto& v : vectors) {
    if (v.features != names) {
      throw ValidationError("shap_importance: vectors disagree on feature order");
    }
  }

  ImportanceReport report;
  report.method = ImportanceMethod::MeanAbsShap;
  for (std::size_t j = 0; j < names.size(); ++j) {
    ImportanceEntry entry;
    entry.features = {names[j]};
    double total = 0;
    for (const auto& v : vectors) total += std::fabs(v.phi[j]);
    entry.mean = total / static_cast<double>(vectors.size());
    report.entries.push_back(std::move(entry));
  }
  return report;
}

ImportanceReport interaction_importance(const std::vector<InteractionMatrix>& matrices,
                                        int top_k) {
  if (matrices.empty()) throw ValidationError("interaction_importance: empty collection");
  const auto& names = matrices.front().features;
  const std::size_t p = names.size();
  for (const auto& m : matrices) {
    if (m.features != names) {
      throw ValidationError("interaction_importance: matrices disagree on feature order");
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (std::fabs(m.values[i][j] - m.values[j][i]) > 1e-9) {
          throw ValidationError("interaction_importance: non-symmetric matrix");
        }
      }
    }
  }

  ImportanceReport report;
  report.method = ImportanceMethod::Interaction;
  auto n = static_cast<double>(matrices.size());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      ImportanceEntry entry;
      entry.features = i == j ? std::vector<std::string>{names[i]}
                              : std::vector<std::string>{names[i], names[j]};
      double total = 0;
      for (const auto& m : matrices) {
        // Off-diagonal pairs counted once: both halves of the split convention.
        total += std::fabs(i == j ? m.values[i][i] : m.values[i][j] + m.values[j][i]);
      }
      entry.mean = total / n;
      report.entries.push_back(std::move(entry));
    }
  }
  std::sort(report.entries.begin(), report.entries.end(),
            [](const ImportanceEntry& a, const ImportanceEntry& b) {
              if (a.mean != b.mean) return a.mean > b.mean;
              return a.features < b.features;
            });
  if (top_k > 0 && report.entries.size() > static_cast<std::size_t>(top_k)) {
    report.entries.resize(static_cast<std::size_t>(top_k));
  }
  return report;
}

nlohmann::ordered_json ImportanceReport::to_json() const {
  nlohmann::ordered_json j;
  switch (method) {
    case ImportanceMethod::PFI: j["method"] = "pfi"; break;
    case ImportanceMethod::MeanAbsShap: j["method"] = "mean_abs_shap"; break;
    case ImportanceMethod::Interaction: j["method"] = "interaction"; break;
  }
  if (loss) {
    j["loss"] = *loss == PfiLoss::LogLoss ? "log_loss" : "one_minus_accuracy";
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json je;
    je["features"] = e.features;
    je["mean"] = e.mean;
    je["sd"] = e.sd;
    if (!e.values.empty()) je["values"] = e.values;
    arr.push_back(std::move(je));
  }
  j["entries"] = std::move(arr);
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

}  // namespace synaudit
