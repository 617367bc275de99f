#include "synaudit/tuner.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "synaudit/metrics.hpp"
#include "synaudit/rng.hpp"

namespace synaudit {

namespace {

// Search space over unit coordinates; one dimension per tunable parameter.
// max_depth 2-10, learning_rate 0.01-0.3 (log), n_trees 50-1000,
// l2 0-10, min_child_weight 1-20, subsample 0.5-1.
constexpr int kDims = 6;

TrainConfig config_from_unit(const std::array<double, kDims>& u, std::uint64_t seed,
                             int early_stopping_rounds) {
  TrainConfig c;
  c.max_depth = 2 + static_cast<int>(std::floor(u[0] * 8.9999));
  c.learning_rate = std::exp(std::log(0.01) + u[1] * (std::log(0.3) - std::log(0.01)));
  c.n_trees = 50 + static_cast<int>(std::floor(u[2] * 950.9999));
  c.n_trees = std::min(c.n_trees, 1000);
  c.l2 = u[3] * 10.0;
  c.min_child_weight = 1.0 + u[4] * 19.0;
  c.subsample = 0.5 + u[5] * 0.5;
  c.early_stopping_rounds = early_stopping_rounds;
  c.seed = seed;
  return c;
}

std::array<double, kDims> random_unit(Rng& rng) {
  std::array<double, kDims> u;
  for (auto& v : u) v = rng.uniform();
  return u;
}

// 1-D Parzen estimate over unit-interval observations, clipped Gaussian kernels.
double parzen_log_density(double x, const std::vector<double>& obs) {
  if (obs.empty()) return 0.0;  // uniform prior
  double sd = 0.0, mean = 0.0;
  for (double o : obs) mean += o;
  mean /= static_cast<double>(obs.size());
  for (double o : obs) sd += (o - mean) * (o - mean);
  sd = obs.size() > 1 ? std::sqrt(sd / static_cast<double>(obs.size() - 1)) : 0.25;
  double bw = std::max(0.05, 1.06 * sd * std::pow(static_cast<double>(obs.size()), -0.2));
  double total = 0;
  for (double o : obs) {
    double z = (x - o) / bw;
    total += std::exp(-0.5 * z * z) / bw;
  }
  return std::log(std::max(total / static_cast<double>(obs.size()), 1e-12));
}

// Stratified k-fold mean test AUC for one config.
double cv_auc(const DetectionDataset& train, const std::vector<std::size_t>& rows,
              const TrainConfig& config, int folds, std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i : rows) by_class[train.labels[i] == 1 ? 1 : 0].push_back(i);
  Rng rng(seed);
  for (int cls = 0; cls < 2; ++cls) {
    Rng fork = rng.fork(static_cast<std::uint64_t>(cls));
    fork.shuffle(by_class[cls]);
  }

  double total = 0;
  for (int f = 0; f < folds; ++f) {
    DetectionDataset fold;
    fold.seed = seed;
    fold.data = TabularDataset(train.data.schema(), Provenance::Unlabeled);
    for (int cls = 0; cls < 2; ++cls) {
      for (std::size_t k = 0; k < by_class[cls].size(); ++k) {
        std::size_t i = by_class[cls][k];
        fold.data.append_row(train.data.row(i));
        fold.labels.push_back(train.labels[i]);
        fold.split.push_back(k % static_cast<std::size_t>(folds) ==
                                     static_cast<std::size_t>(f)
                                 ? 1
                                 : 0);
      }
    }
    auto model = fit_gbdt(fold, config);
    std::vector<int> labels;
    auto test_rows = fold.subset(true, &labels);
    total += auc_score(labels, model.predict_proba(test_rows));
  }
  return total / folds;
}

}  // namespace

TrainConfig tune(const DetectionDataset& train, int budget, std::uint64_t seed,
                 const TunerOptions& options, std::vector<TrialRecord>* trace) {
  if (budget < 1) throw ValidationError("tune: budget must be >= 1");
  std::vector<std::size_t> rows =
      train.has_split() ? train.rows_in_split(false) : [&] {
        std::vector<std::size_t> all(train.labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
      }();

  Rng rng(seed);
  std::vector<std::array<double, kDims>> points;
  std::vector<double> scores;
  int failures = 0;

  for (int trial = 0; trial < budget; ++trial) {
    std::array<double, kDims> u;
    bool guided = !options.random_search &&
                  static_cast<int>(points.size()) >= options.n_startup && !points.empty();
    if (!guided) {
      u = random_unit(rng);
    } else {
      // Split observed points into good/bad by score quantile, sample
      // candidates around good points, keep the best density ratio.
      std::vector<std::size_t> order(points.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
      auto n_good = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::ceil(options.good_fraction *
                                                static_cast<double>(order.size()))));
      std::vector<std::vector<double>> good(kDims), bad(kDims);
      for (std::size_t i = 0; i < order.size(); ++i) {
        for (int d = 0; d < kDims; ++d) {
          (i < n_good ? good[d] : bad[d]).push_back(points[order[i]][d]);
        }
      }
      double best_ratio = -1e300;
      for (int cand = 0; cand < options.n_candidates; ++cand) {
        std::array<double, kDims> c;
        double ratio = 0;
        for (int d = 0; d < kDims; ++d) {
          std::size_t pick = rng.uniform_index(good[d].size());
          double center = good[d][pick];
          double x = std::clamp(center + rng.normal(0.0, 0.12), 0.0, 1.0);
          c[d] = x;
          ratio += parzen_log_density(x, good[d]) - parzen_log_density(x, bad[d]);
        }
        if (ratio > best_ratio) {
          best_ratio = ratio;
          u = c;
        }
      }
    }

    TrainConfig config = config_from_unit(u, seed, options.early_stopping_rounds);
    TrialRecord record;
    record.config = config;
    try {
      record.cv_auc = cv_auc(train, rows, config,
                             std::max(2, options.cv_folds), seed ^ 0x7u);
      points.push_back(u);
      scores.push_back(record.cv_auc);
    } catch (const std::exception&) {
      record.failed = true;
      ++failures;
    }
    if (trace) trace->push_back(record);
  }

  if (points.empty()) {
    throw std::runtime_error("tune: all " + std::to_string(failures) + " trials failed");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return config_from_unit(points[best], seed, options.early_stopping_rounds);
}

}  // namespace synaudit
