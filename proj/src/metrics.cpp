#include "synaudit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace synaudit {

double auc_score(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size() || labels.empty()) {
    throw ValidationError("auc_score: empty or mismatched inputs");
  }
  std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double rank_sum_pos = 0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("auc_score: single-class labels");
  return (rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double log_loss_score(const std::vector<int>& labels, const std::vector<double>& probs) {
  if (labels.size() != probs.size() || labels.empty()) {
    throw ValidationError("log_loss_score: empty or mismatched inputs");
  }
  double s = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    s += labels[i] == 1 ? -std::log(p) : -std::log1p(-p);
  }
  return s / static_cast<double>(labels.size());
}

SplitMetrics compute_split_metrics(const std::vector<int>& labels,
                                   const std::vector<double>& probs) {
  SplitMetrics m;
  m.n = labels.size();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    bool predicted_real = probs[i] > 0.5;
    if (labels[i] == 1) {
      predicted_real ? ++m.confusion.tp : ++m.confusion.fn;
    } else {
      predicted_real ? ++m.confusion.fp : ++m.confusion.tn;
    }
  }
  auto total = static_cast<double>(m.n);
  m.accuracy = (static_cast<double>(m.confusion.tp) + static_cast<double>(m.confusion.tn)) / total;
  m.auc = auc_score(labels, probs);
  m.log_loss = log_loss_score(labels, probs);
  double neg = static_cast<double>(m.confusion.fp + m.confusion.tn);
  double pos = static_cast<double>(m.confusion.fn + m.confusion.tp);
  m.fpr = neg > 0 ? static_cast<double>(m.confusion.fp) / neg : 0.0;
  m.fnr = pos > 0 ? static_cast<double>(m.confusion.fn) / pos : 0.0;
  return m;
}

MetricsReport evaluate(const PredictFn& model, const DetectionDataset& d) {
  if (!d.has_split()) throw ValidationError("evaluate: dataset has no split assignment");
  MetricsReport report;
  for (bool test : {false, true}) {
    std::vector<int> labels;
    TabularDataset rows = d.subset(test, &labels);
    if (rows.n_rows() == 0) throw ValidationError("evaluate: empty split");
    auto probs = model(rows);
    (test ? report.test : report.train) = compute_split_metrics(labels, probs);
  }
  return report;
}

namespace {

nlohmann::ordered_json split_to_json(const SplitMetrics& m) {
  nlohmann::ordered_json j;
  j["n"] = m.n;
  j["accuracy"] = m.accuracy;
  j["auc"] = m.auc;
  j["log_loss"] = m.log_loss;
  j["fpr"] = m.fpr;
  j["fnr"] = m.fnr;
  j["confusion"] = {{"tp", m.confusion.tp},
                    {"fp", m.confusion.fp},
                    {"tn", m.confusion.tn},
                    {"fn", m.confusion.fn}};
  return j;
}

}  // namespace

nlohmann::ordered_json metrics_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["train"] = split_to_json(report.train);
  j["test"] = split_to_json(report.test);
  return j;
}

}  // namespace synaudit
