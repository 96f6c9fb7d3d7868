#include "transport/estimators_nested.hpp"

#include <cmath>

#include "transport/error.hpp"
#include "weight_util.hpp"

namespace transport {

namespace {
constexpr const char* kComponent = "estimators_nested";
}

double IPWeights::sum() const {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

IPWeights compute_ip_weights(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                             const EstimatorOptions& options) {
  IPWeights weights;
  weights.arm = arm;
  weights.values.assign(ds.n(), 0.0);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (row.s != 1 || *row.a != arm) continue;
    double p = nm.participation_prob(row);
    double e = nm.treatment_prob(row, arm);
    if (!(p > 0.0))
      fail_numeric(kComponent, "participation probability 0 at row " + std::to_string(i) +
                                   " violates positivity");
    if (!(e > 0.0))
      fail_numeric(kComponent, "treatment probability 0 at row " + std::to_string(i) +
                                   " violates positivity");
    weights.values[i] = 1.0 / (p * e);
  }
  if (options.weight_truncation_quantile)
    truncate_weights(weights.values, *options.weight_truncation_quantile, kComponent);
  return weights;
}

double estimate_pop_om(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                       const BiasFunctionSpec& bias) {
  const int mod = resolve_modulation(bias, ds.covariate_names);
  double sum = 0.0;
  for (const Row& row : ds.rows) {
    sum += nm.outcome_mean(row, arm);
    if (row.s == 0) sum -= eval_u(bias, arm, row.x, mod);
  }
  return sum / static_cast<double>(ds.n());
}

double estimate_pop_ipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                        bool normalized, const BiasFunctionSpec& bias,
                        const EstimatorOptions& options) {
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IPWeights w = compute_ip_weights(ds, nm, arm, options);
  const double n = static_cast<double>(ds.n());

  double weighted_y = 0.0, u_sum = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (w.values[i] > 0.0) weighted_y += w.values[i] * *row.y;
    if (row.s == 0) u_sum += eval_u(bias, arm, row.x, mod);
  }
  double correction = u_sum / n;
  if (!normalized) return weighted_y / n - correction;
  double w_sum = w.sum();
  if (w_sum <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return weighted_y / w_sum - correction;
}

double estimate_pop_aipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                         bool normalized, const BiasFunctionSpec& bias,
                         const EstimatorOptions& options) {
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IPWeights w = compute_ip_weights(ds, nm, arm, options);
  const double n = static_cast<double>(ds.n());

  double weighted_resid = 0.0, om_sum = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (w.values[i] > 0.0)
      weighted_resid += w.values[i] * (*row.y - nm.outcome_mean(row, arm));
    om_sum += nm.outcome_mean(row, arm);
    if (row.s == 0) om_sum -= eval_u(bias, arm, row.x, mod);
  }
  if (!normalized) return (weighted_resid + om_sum) / n;
  double w_sum = w.sum();
  if (w_sum <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return weighted_resid / w_sum + om_sum / n;
}

double estimate_pop_bc_outcome(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                               const BiasFunctionSpec& bias,
                               const EstimatorOptions& options) {
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IPWeights w = compute_ip_weights(ds, nm, arm, options);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (w.values[i] <= 0.0) continue;
    const Row& row = ds.rows[i];
    // Y~* = Y - u(A, X) * (1 - p(X))
    double p = nm.participation_prob(row);
    num += w.values[i] * (*row.y - eval_u(bias, *row.a, row.x, mod) * (1.0 - p));
    den += w.values[i];
  }
  if (den <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return num / den;
}

double pop_arm_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                        int arm, const BiasFunctionSpec& bias,
                        const EstimatorOptions& options) {
  switch (id) {
    case EstimatorId::OMPop: return estimate_pop_om(ds, nm, arm, bias);
    case EstimatorId::IPW1: return estimate_pop_ipw(ds, nm, arm, false, bias, options);
    case EstimatorId::IPW2: return estimate_pop_ipw(ds, nm, arm, true, bias, options);
    case EstimatorId::AIPW1: return estimate_pop_aipw(ds, nm, arm, false, bias, options);
    case EstimatorId::AIPW2: return estimate_pop_aipw(ds, nm, arm, true, bias, options);
    case EstimatorId::BCOutcomeIPW:
      return estimate_pop_bc_outcome(ds, nm, arm, bias, options);
    default:
      fail_config(kComponent,
                  "estimator " + to_string(id) + " targets S=0, not the whole population");
  }
}

double estimate_pop_ate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                        const BiasFunctionSpec& bias, const EstimatorOptions& options) {
  return pop_arm_estimate(ds, nm, id, 1, bias, options) -
         pop_arm_estimate(ds, nm, id, 0, bias, options);
}

}  // namespace transport
