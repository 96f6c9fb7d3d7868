#include "transport/estimate_types.hpp"

#include "transport/error.hpp"

namespace transport {

bool is_population_estimator(EstimatorId id) {
  switch (id) {
    case EstimatorId::OMPop:
    case EstimatorId::IPW1:
    case EstimatorId::IPW2:
    case EstimatorId::AIPW1:
    case EstimatorId::AIPW2:
    case EstimatorId::BCOutcomeIPW:
      return true;
    default:
      return false;
  }
}

TargetPopulation target_of(EstimatorId id) {
  return is_population_estimator(id) ? TargetPopulation::WholePopulation
                                     : TargetPopulation::NonRandomized;
}

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::OM: return "OM";
    case EstimatorId::IOW1: return "IOW1";
    case EstimatorId::IOW2: return "IOW2";
    case EstimatorId::AIOW1: return "AIOW1";
    case EstimatorId::AIOW2: return "AIOW2";
    case EstimatorId::BCOutcomeIOW: return "BCOutcomeIOW";
    case EstimatorId::OMPop: return "OM_pop";
    case EstimatorId::IPW1: return "IPW1";
    case EstimatorId::IPW2: return "IPW2";
    case EstimatorId::AIPW1: return "AIPW1";
    case EstimatorId::AIPW2: return "AIPW2";
    case EstimatorId::BCOutcomeIPW: return "BCOutcomeIPW";
  }
  return "?";
}

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::MeanA1: return "mean_a1";
    case Estimand::MeanA0: return "mean_a0";
    case Estimand::Ate: return "ate";
  }
  return "?";
}

std::string to_string(TargetPopulation t) {
  return t == TargetPopulation::NonRandomized ? "non_randomized" : "whole_population";
}

EstimatorId estimator_from_string(const std::string& name) {
  for (EstimatorId id :
       {EstimatorId::OM, EstimatorId::IOW1, EstimatorId::IOW2, EstimatorId::AIOW1,
        EstimatorId::AIOW2, EstimatorId::BCOutcomeIOW, EstimatorId::OMPop, EstimatorId::IPW1,
        EstimatorId::IPW2, EstimatorId::AIPW1, EstimatorId::AIPW2, EstimatorId::BCOutcomeIPW})
    if (to_string(id) == name) return id;
  fail_config("cli", "unknown estimator id '" + name + "'");
}

Estimand estimand_from_string(const std::string& name) {
  for (Estimand e : {Estimand::MeanA1, Estimand::MeanA0, Estimand::Ate})
    if (to_string(e) == name) return e;
  fail_config("cli", "unknown estimand '" + name + "'");
}

}  // namespace transport
