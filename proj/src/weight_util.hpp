#pragma once

#include <vector>

namespace transport {

// Caps weights at the q-quantile (type-7) of the nonzero weights.
void truncate_weights(std::vector<double>& w, double quantile, const char* component);

}  // namespace transport
