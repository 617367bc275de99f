#pragma once

#include <string>
#include <utility>
#include <vector>

#include "effects.hpp"
#include "importance.hpp"
#include "shapley.hpp"

namespace synaudit {

// All renderers emit deterministic standalone SVG 1.1 documents.

// Side-by-side importance panels (one per report); entries with repeated
// values render as box-and-whisker marks, single values as bars.
std::string render_importance(
    const std::vector<std::pair<std::string, ImportanceReport>>& reports, int top_k = 15);

// Degree-1 and degree-2 terms of an interaction report, labels "a x b".
std::string render_interactions(const ImportanceReport& report, int top_k = 20);

// ICE spaghetti + PDP with flag shading; numeric features carry marginal
// histograms for real and synthetic data, categorical features render
// per-class ICE boxes, PDP markers and class-frequency bars.
std::string render_effects(const EffectResult& effect, std::size_t max_curves = 200);

// Stacked force rows decomposing predictions from their base values.
// Throws when the vectors disagree on scale.
std::string render_force(const std::vector<std::pair<std::string, ShapleyVector>>& vectors);

// Waterfall of the strongest terms; everything below top_k is aggregated
// into one "rest" bar so the running total still lands on the prediction.
std::string render_waterfall(const ShapleyVector& vector, int top_k = 10);
std::string render_waterfall(const InteractionMatrix& matrix, int top_k = 10);

}  // namespace synaudit
