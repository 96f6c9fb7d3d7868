#pragma once

#include <string>

#include "transport/estimate_types.hpp"
#include "transport/sensitivity.hpp"

namespace transport {

// Static sensitivity-curve figure for one estimator: one panel per u0 value,
// delta on the x axis, potential outcome means on the y axis. Solid lines
// are a=1, dashed a=0, gray lines the confidence bounds.
std::string sensitivity_curves_svg(const SensitivityGridResult& result,
                                   EstimatorId estimator);

}  // namespace transport
