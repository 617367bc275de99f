#pragma once

#include <functional>
#include <vector>

#include "dataset.hpp"

namespace synaudit {

// Batch probability predictor: the surface every explanation method works
// against. Implementations must be pure functions of (model, rows).
using PredictFn = std::function<std::vector<double>(const TabularDataset&)>;

}  // namespace synaudit
