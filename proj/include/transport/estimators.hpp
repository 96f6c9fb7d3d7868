#pragma once

#include "transport/estimators_nested.hpp"
#include "transport/estimators_nonnested.hpp"

namespace transport {

// Routes to the family the estimator id belongs to.
double point_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                      Estimand estimand, const BiasFunctionSpec& bias,
                      const EstimatorOptions& options = {});

}  // namespace transport
