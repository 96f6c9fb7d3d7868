#include "transport/estimators_nonnested.hpp"

#include <algorithm>
#include <cmath>

#include "transport/error.hpp"
#include "weight_util.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "estimators_nonnested";

std::size_t require_n0(const StudyDataset& ds, const char* component) {
  std::size_t n0 = ds.n0();
  if (n0 == 0) fail_data(component, "no s=0 rows: S=0 estimand undefined");
  return n0;
}

}  // namespace

double IOWeights::sum() const {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

IOWeights compute_io_weights(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                             const EstimatorOptions& options) {
  IOWeights weights;
  weights.arm = arm;
  weights.values.assign(ds.n(), 0.0);
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (row.s != 1 || *row.a != arm) continue;
    double p = nm.participation_prob(row);
    double e = nm.treatment_prob(row, arm);
    if (!(p > 0.0) || !(p < 1.0))
      fail_numeric(kComponent, "participation probability " + std::to_string(p) +
                                   " at row " + std::to_string(i) +
                                   " violates positivity");
    if (!(e > 0.0))
      fail_numeric(kComponent, "treatment probability 0 at row " + std::to_string(i) +
                                   " violates positivity");
    weights.values[i] = (1.0 - p) / (p * e);
  }
  if (options.weight_truncation_quantile)
    truncate_weights(weights.values, *options.weight_truncation_quantile, kComponent);
  return weights;
}

double estimate_om(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                   const BiasFunctionSpec& bias) {
  const std::size_t n0 = require_n0(ds, kComponent);
  const int mod = resolve_modulation(bias, ds.covariate_names);
  double sum = 0.0;
  for (const Row& row : ds.rows) {
    if (row.s != 0) continue;
    sum += nm.outcome_mean(row, arm) - eval_u(bias, arm, row.x, mod);
  }
  return sum / static_cast<double>(n0);
}

double estimate_iow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                    bool normalized, const BiasFunctionSpec& bias,
                    const EstimatorOptions& options) {
  const std::size_t n0 = require_n0(ds, kComponent);
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IOWeights w = compute_io_weights(ds, nm, arm, options);

  double weighted_y = 0.0, u_sum = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (w.values[i] > 0.0) weighted_y += w.values[i] * *row.y;
    if (row.s == 0) u_sum += eval_u(bias, arm, row.x, mod);
  }
  double u_mean = u_sum / static_cast<double>(n0);
  if (!normalized) return weighted_y / static_cast<double>(n0) - u_mean;
  double w_sum = w.sum();
  if (w_sum <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return weighted_y / w_sum - u_mean;
}

double estimate_aiow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                     bool normalized, const BiasFunctionSpec& bias,
                     const EstimatorOptions& options) {
  const std::size_t n0 = require_n0(ds, kComponent);
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IOWeights w = compute_io_weights(ds, nm, arm, options);

  double weighted_resid = 0.0, om_sum = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    const Row& row = ds.rows[i];
    if (w.values[i] > 0.0)
      weighted_resid += w.values[i] * (*row.y - nm.outcome_mean(row, arm));
    if (row.s == 0)
      om_sum += nm.outcome_mean(row, arm) - eval_u(bias, arm, row.x, mod);
  }
  if (!normalized) return (weighted_resid + om_sum) / static_cast<double>(n0);
  double w_sum = w.sum();
  if (w_sum <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return weighted_resid / w_sum + om_sum / static_cast<double>(n0);
}

double estimate_bc_outcome_iow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                               const BiasFunctionSpec& bias,
                               const EstimatorOptions& options) {
  const int mod = resolve_modulation(bias, ds.covariate_names);
  IOWeights w = compute_io_weights(ds, nm, arm, options);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    if (w.values[i] <= 0.0) continue;
    const Row& row = ds.rows[i];
    // Y* = Y - u(A, X); on contributing rows A equals the target arm
    num += w.values[i] * (*row.y - eval_u(bias, *row.a, row.x, mod));
    den += w.values[i];
  }
  if (den <= 0.0)
    fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
  return num / den;
}

double arm_estimate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                    int arm, const BiasFunctionSpec& bias, const EstimatorOptions& options) {
  switch (id) {
    case EstimatorId::OM: return estimate_om(ds, nm, arm, bias);
    case EstimatorId::IOW1: return estimate_iow(ds, nm, arm, false, bias, options);
    case EstimatorId::IOW2: return estimate_iow(ds, nm, arm, true, bias, options);
    case EstimatorId::AIOW1: return estimate_aiow(ds, nm, arm, false, bias, options);
    case EstimatorId::AIOW2: return estimate_aiow(ds, nm, arm, true, bias, options);
    case EstimatorId::BCOutcomeIOW:
      return estimate_bc_outcome_iow(ds, nm, arm, bias, options);
    default:
      fail_config(kComponent,
                  "estimator " + to_string(id) + " targets the whole population, not S=0");
  }
}

double estimate_ate(const StudyDataset& ds, const NuisanceModels& nm, EstimatorId id,
                    const BiasFunctionSpec& bias, const EstimatorOptions& options) {
  return arm_estimate(ds, nm, id, 1, bias, options) -
         arm_estimate(ds, nm, id, 0, bias, options);
}

}  // namespace transport
