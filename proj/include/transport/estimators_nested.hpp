#pragma once

#include <vector>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"

namespace transport {

// Inverse-probability-of-participation weights for one arm:
//   w~_a(X,S,A) = S * I(A=a) / (p(X) * e_a(X)).
struct IPWeights {
  int arm = 1;
  std::vector<double> values;

  double sum() const;
};

IPWeights compute_ip_weights(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                             const EstimatorOptions& options = {});

// Whole-population g-formula estimator of E[Y^a]; the correction averages
// (1-S) * u(a,X) over all n rows.
double estimate_pop_om(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                       const BiasFunctionSpec& bias);

double estimate_pop_ipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                        bool normalized, const BiasFunctionSpec& bias,
                        const EstimatorOptions& options = {});

double estimate_pop_aipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                         bool normalized, const BiasFunctionSpec& bias,
                         const EstimatorOptions& options = {});

// Bias-corrected-outcome route with Y~* = Y - u(A,X) * (1 - p(X)).
double estimate_pop_bc_outcome(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                               const BiasFunctionSpec& bias,
                               const EstimatorOptions& options = {});

double pop_arm_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                        int arm, const BiasFunctionSpec& bias,
                        const EstimatorOptions& options = {});

double estimate_pop_ate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                        const BiasFunctionSpec& bias, const EstimatorOptions& options = {});

}  // namespace transport
