#include "transport/estimators.hpp"

namespace transport {

double point_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                      Estimand estimand, const BiasFunctionSpec& bias,
                      const EstimatorOptions& options) {
  const bool pop = is_population_estimator(id);
  switch (estimand) {
    case Estimand::MeanA1:
      return pop ? pop_arm_estimate(ds, nm, id, 1, bias, options)
                 : arm_estimate(ds, nm, id, 1, bias, options);
    case Estimand::MeanA0:
      return pop ? pop_arm_estimate(ds, nm, id, 0, bias, options)
                 : arm_estimate(ds, nm, id, 0, bias, options);
    case Estimand::Ate:
      return pop ? estimate_pop_ate(ds, nm, id, bias, options)
                 : estimate_ate(ds, nm, id, bias, options);
  }
  return 0.0;  // unreachable
}

}  // namespace transport
