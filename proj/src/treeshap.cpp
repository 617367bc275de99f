// Path-dependent tree Shapley values and pairwise interaction values on the
// log-odds scale, following the polynomial-time EXTEND/UNWIND formulation.

#include <cmath>
#include <vector>

#include "synaudit/shapley.hpp"

namespace synaudit {

namespace {

struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature_index) {
  path[depth].feature_index = feature_index;
  path[depth].zero_fraction = zero_fraction;
  path[depth].one_fraction = one_fraction;
  path[depth].pweight = depth == 0 ? 1.0 : 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / (depth + 1.0);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / (depth + 1.0);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;

  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1.0) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) / (depth + 1.0);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1.0) / (zero_fraction * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0) {
      const double tmp = next_one_portion * (depth + 1.0) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i) / (depth + 1.0);
    } else if (zero_fraction != 0) {
      total += (path[i].pweight / zero_fraction) / ((depth - i) / (depth + 1.0));
    }
  }
  return total;
}

// condition: 0 unconditioned, +1 fix condition_feature present, -1 absent.
void tree_shap_recurse(const Tree& tree, std::span<const double> row, double* phi,
                       std::int32_t node_index, int unique_depth, PathElement* parent_path,
                       double parent_zero_fraction, double parent_one_fraction,
                       int parent_feature_index, int condition, int condition_feature,
                       double condition_fraction) {
  if (condition_fraction == 0) return;
  const TreeNode& node = tree.nodes[node_index];

  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);

  if (condition == 0 || condition_feature != parent_feature_index) {
    extend_path(path, unique_depth, parent_zero_fraction, parent_one_fraction,
                parent_feature_index);
  }

  if (node.is_leaf()) {
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[el.feature_index] +=
          w * (el.one_fraction - el.zero_fraction) * node.value * condition_fraction;
    }
    return;
  }

  const std::int32_t hot = tree.route(node, row[node.feature]);
  const std::int32_t cold = hot == node.left ? node.right : node.left;
  const double w = node.cover;
  const double hot_zero_fraction = tree.nodes[hot].cover / w;
  const double cold_zero_fraction = tree.nodes[cold].cover / w;
  double incoming_zero_fraction = 1;
  double incoming_one_fraction = 1;

  // Undo an earlier split on the same feature so it can be redone here.
  int path_index = 0;
  for (; path_index <= unique_depth; ++path_index) {
    if (path[path_index].feature_index == node.feature) break;
  }
  if (path_index != unique_depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  double hot_condition_fraction = condition_fraction;
  double cold_condition_fraction = condition_fraction;
  if (condition > 0 && node.feature == condition_feature) {
    cold_condition_fraction = 0;
    unique_depth -= 1;
  } else if (condition < 0 && node.feature == condition_feature) {
    hot_condition_fraction *= hot_zero_fraction;
    cold_condition_fraction *= cold_zero_fraction;
    unique_depth -= 1;
  }

  tree_shap_recurse(tree, row, phi, hot, unique_depth + 1, path,
                    hot_zero_fraction * incoming_zero_fraction, incoming_one_fraction,
                    node.feature, condition, condition_feature, hot_condition_fraction);
  tree_shap_recurse(tree, row, phi, cold, unique_depth + 1, path,
                    cold_zero_fraction * incoming_zero_fraction, 0.0, node.feature, condition,
                    condition_feature, cold_condition_fraction);
}

// Cover-weighted expected leaf value below every node.
double fill_mean_values(const Tree& tree, std::int32_t node_index, std::vector<double>& out) {
  const TreeNode& node = tree.nodes[node_index];
  double value;
  if (node.is_leaf()) {
    value = node.value;
  } else {
    double left = fill_mean_values(tree, node.left, out) * tree.nodes[node.left].cover;
    double right = fill_mean_values(tree, node.right, out) * tree.nodes[node.right].cover;
    if (node.cover <= 0) throw ValidationError("tree_shap: node cover must be positive");
    value = (left + right) / node.cover;
  }
  out[node_index] = value;
  return value;
}

void tree_contributions(const Tree& tree, std::span<const double> row, double* phi,
                        std::size_t n_features, int condition, int condition_feature) {
  std::vector<double> mean_values(tree.nodes.size());
  fill_mean_values(tree, 0, mean_values);
  if (condition == 0) phi[n_features] += mean_values[0];

  const int maxd = tree.max_depth() + 2;
  std::vector<PathElement> path_storage((maxd * (maxd + 1)) / 2 + maxd + 1);
  tree_shap_recurse(tree, row, phi, 0, 0, path_storage.data(), 1.0, 1.0, -1, condition,
                    condition_feature, 1.0);
}

void validate_covers(const TreeEnsembleModel& model) {
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (node.is_leaf() && node.cover <= 0) {
        throw ValidationError("tree_shap: model is missing cover statistics");
      }
    }
  }
}

std::vector<std::string> model_feature_names(const TreeEnsembleModel& model) {
  std::vector<std::string> names;
  for (const auto& c : model.schema) names.push_back(c.name);
  return names;
}

}  // namespace

ShapleyVector tree_shap(const TreeEnsembleModel& model, std::span<const double> instance) {
  const std::size_t p = model.schema.size();
  if (instance.size() != p) throw ValidationError("tree_shap: instance width mismatch");
  validate_covers(model);

  std::vector<double> contribs(p + 1, 0.0);
  for (const auto& tree : model.trees) {
    tree_contributions(tree, instance, contribs.data(), p, 0, -1);
  }

  ShapleyVector out;
  out.features = model_feature_names(model);
  out.phi.assign(contribs.begin(), contribs.begin() + static_cast<std::ptrdiff_t>(p));
  out.scale = ValueScale::LogOdds;
  out.base_value = model.base_score + contribs[p];
  out.prediction = model.margin_one(instance);
  return out;
}

InteractionMatrix tree_shap_interactions(const TreeEnsembleModel& model,
                                         std::span<const double> instance) {
  const std::size_t p = model.schema.size();
  if (instance.size() != p) throw ValidationError("tree_shap: instance width mismatch");
  validate_covers(model);

  std::vector<double> diag(p + 1, 0.0);
  for (const auto& tree : model.trees) {
    tree_contributions(tree, instance, diag.data(), p, 0, -1);
  }

  InteractionMatrix out;
  out.features = model_feature_names(model);
  out.values.assign(p, std::vector<double>(p, 0.0));
  out.scale = ValueScale::LogOdds;
  out.base_value = model.base_score + diag[p];
  out.prediction = model.margin_one(instance);

  std::vector<double> on(p + 1), off(p + 1);
  for (std::size_t i = 0; i < p; ++i) {
    std::fill(on.begin(), on.end(), 0.0);
    std::fill(off.begin(), off.end(), 0.0);
    for (const auto& tree : model.trees) {
      tree_contributions(tree, instance, on.data(), p, 1, static_cast<int>(i));
      tree_contributions(tree, instance, off.data(), p, -1, static_cast<int>(i));
    }
    double off_diagonal_sum = 0;
    for (std::size_t j = 0; j < p; ++j) {
      if (j == i) continue;
      out.values[i][j] = (on[j] - off[j]) / 2.0;
      off_diagonal_sum += out.values[i][j];
    }
    out.values[i][i] = diag[i] - off_diagonal_sum;
  }

  // Exact symmetry up to float noise; average the halves.
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      double v = 0.5 * (out.values[i][j] + out.values[j][i]);
      out.values[i][j] = v;
      out.values[j][i] = v;
    }
  }
  return out;
}

}  // namespace synaudit
