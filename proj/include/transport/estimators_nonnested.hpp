#pragma once

#include <vector>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"

namespace transport {

// Inverse-odds-of-participation weights for one arm:
//   w_a(X,S,A) = S * I(A=a) * (1 - p(X)) / (p(X) * e_a(X)).
struct IOWeights {
  int arm = 1;
  std::vector<double> values;  // one per row, zero for non-contributing rows

  double sum() const;
};

IOWeights compute_io_weights(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                             const EstimatorOptions& options = {});

// Outcome-model (g-formula) estimator of E[Y^a | S=0] with the bias
// correction subtracted inside the S=0 average; the zero spec gives the
// plain estimator.
double estimate_om(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                   const BiasFunctionSpec& bias);

// IO weighting estimator; normalized=true divides by the weight sum instead
// of the S=0 count.
double estimate_iow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                    bool normalized, const BiasFunctionSpec& bias,
                    const EstimatorOptions& options = {});

// Augmented (doubly robust) IO weighting estimator.
double estimate_aiow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                     bool normalized, const BiasFunctionSpec& bias,
                     const EstimatorOptions& options = {});

// Bias-corrected-outcome route: a weighted mean of Y - u(A,X) over the
// contributing trial rows. Shares its probability limit with the normalized
// IO estimator; equal to it only for covariate-constant specs.
double estimate_bc_outcome_iow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                               const BiasFunctionSpec& bias,
                               const EstimatorOptions& options = {});

// Dispatch over the non-nested family for a single arm.
double arm_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                    int arm, const BiasFunctionSpec& bias,
                    const EstimatorOptions& options = {});

double estimate_ate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                    const BiasFunctionSpec& bias, const EstimatorOptions& options = {});

}  // namespace transport
