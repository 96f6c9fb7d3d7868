#include "weight_util.hpp"

#include <algorithm>
#include <cstddef>

#include "transport/error.hpp"

namespace transport {

void truncate_weights(std::vector<double>& w, double quantile, const char* component) {
  if (!(quantile > 0.0 && quantile <= 1.0))
    fail_config(component, "truncation quantile must lie in (0, 1]");
  std::vector<double> nonzero;
  for (double v : w)
    if (v > 0.0) nonzero.push_back(v);
  if (nonzero.empty()) return;
  std::sort(nonzero.begin(), nonzero.end());
  double h = quantile * (static_cast<double>(nonzero.size()) - 1.0);
  std::size_t lo = static_cast<std::size_t>(h);
  std::size_t hi = std::min(lo + 1, nonzero.size() - 1);
  double cap = nonzero[lo] + (h - static_cast<double>(lo)) * (nonzero[hi] - nonzero[lo]);
  for (double& v : w) v = std::min(v, cap);
}

}  // namespace transport
