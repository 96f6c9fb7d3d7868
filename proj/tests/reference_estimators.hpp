#pragma once

// Plain serial transcriptions of the base (no bias correction) estimators,
// kept independent of the library's estimator code paths and used as test
// oracles.

#include <stdexcept>
#include <vector>

#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"

namespace testref {

using transport::NuisanceModels;
using transport::Row;
using transport::StudyDataset;

inline double io_weight(const NuisanceModels& nm, const Row& r, int arm) {
  if (r.s != 1 || *r.a != arm) return 0.0;
  double p = nm.participation_prob(r);
  return (1.0 - p) / (p * nm.treatment_prob(r, arm));
}

inline double ip_weight(const NuisanceModels& nm, const Row& r, int arm) {
  if (r.s != 1 || *r.a != arm) return 0.0;
  return 1.0 / (nm.participation_prob(r) * nm.treatment_prob(r, arm));
}

inline double om(const StudyDataset& ds, const NuisanceModels& nm, int arm) {
  double sum = 0.0, n0 = 0.0;
  for (const Row& r : ds.rows)
    if (r.s == 0) {
      sum += nm.outcome_mean(r, arm);
      n0 += 1.0;
    }
  return sum / n0;
}

inline double iow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                  bool normalized) {
  double num = 0.0, wsum = 0.0, n0 = 0.0;
  for (const Row& r : ds.rows) {
    double w = io_weight(nm, r, arm);
    if (w > 0.0) {
      num += w * *r.y;
      wsum += w;
    }
    if (r.s == 0) n0 += 1.0;
  }
  return normalized ? num / wsum : num / n0;
}

inline double aiow(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                   bool normalized) {
  double resid = 0.0, wsum = 0.0, om_part = 0.0, n0 = 0.0;
  for (const Row& r : ds.rows) {
    double w = io_weight(nm, r, arm);
    if (w > 0.0) {
      resid += w * (*r.y - nm.outcome_mean(r, arm));
      wsum += w;
    }
    if (r.s == 0) {
      om_part += nm.outcome_mean(r, arm);
      n0 += 1.0;
    }
  }
  return normalized ? resid / wsum + om_part / n0 : (resid + om_part) / n0;
}

inline double pop_om(const StudyDataset& ds, const NuisanceModels& nm, int arm) {
  double sum = 0.0;
  for (const Row& r : ds.rows) sum += nm.outcome_mean(r, arm);
  return sum / static_cast<double>(ds.rows.size());
}

inline double pop_ipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                      bool normalized) {
  double num = 0.0, wsum = 0.0;
  for (const Row& r : ds.rows) {
    double w = ip_weight(nm, r, arm);
    if (w > 0.0) {
      num += w * *r.y;
      wsum += w;
    }
  }
  return normalized ? num / wsum : num / static_cast<double>(ds.rows.size());
}

inline double pop_aipw(const StudyDataset& ds, const NuisanceModels& nm, int arm,
                       bool normalized) {
  double resid = 0.0, wsum = 0.0, om_part = 0.0;
  for (const Row& r : ds.rows) {
    double w = ip_weight(nm, r, arm);
    if (w > 0.0) {
      resid += w * (*r.y - nm.outcome_mean(r, arm));
      wsum += w;
    }
    om_part += nm.outcome_mean(r, arm);
  }
  double n = static_cast<double>(ds.rows.size());
  return normalized ? resid / wsum + om_part / n : (resid + om_part) / n;
}

// base estimator dispatch by library id
inline double base_value(const StudyDataset& ds, const NuisanceModels& nm,
                         transport::EstimatorId id, int arm) {
  using transport::EstimatorId;
  switch (id) {
    case EstimatorId::OM: return om(ds, nm, arm);
    case EstimatorId::IOW1: return iow(ds, nm, arm, false);
    case EstimatorId::IOW2: return iow(ds, nm, arm, true);
    case EstimatorId::AIOW1: return aiow(ds, nm, arm, false);
    case EstimatorId::AIOW2: return aiow(ds, nm, arm, true);
    case EstimatorId::BCOutcomeIOW: return iow(ds, nm, arm, true);
    case EstimatorId::OMPop: return pop_om(ds, nm, arm);
    case EstimatorId::IPW1: return pop_ipw(ds, nm, arm, false);
    case EstimatorId::IPW2: return pop_ipw(ds, nm, arm, true);
    case EstimatorId::AIPW1: return pop_aipw(ds, nm, arm, false);
    case EstimatorId::AIPW2: return pop_aipw(ds, nm, arm, true);
    case EstimatorId::BCOutcomeIPW: return pop_ipw(ds, nm, arm, true);
  }
  throw std::logic_error("unhandled estimator id");
}

}  // namespace testref
