#pragma once

#include <optional>
#include <string>
#include <utility>

namespace transport {

// The first six target E[Y^a | S=0] (non-nested family, inverse odds of
// participation); the rest target E[Y^a] (nested designs, inverse
// probability of participation).
enum class EstimatorId {
  OM,
  IOW1,
  IOW2,
  AIOW1,
  AIOW2,
  BCOutcomeIOW,
  OMPop,
  IPW1,
  IPW2,
  AIPW1,
  AIPW2,
  BCOutcomeIPW,
};

enum class Estimand { MeanA1, MeanA0, Ate };

enum class TargetPopulation { NonRandomized, WholePopulation };

bool is_population_estimator(EstimatorId id);
TargetPopulation target_of(EstimatorId id);

std::string to_string(EstimatorId id);
std::string to_string(Estimand e);
std::string to_string(TargetPopulation t);
EstimatorId estimator_from_string(const std::string& name);
Estimand estimand_from_string(const std::string& name);

struct EstimateRecord {
  EstimatorId estimator = EstimatorId::OM;
  Estimand estimand = Estimand::Ate;
  TargetPopulation target = TargetPopulation::NonRandomized;
  double point = 0.0;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
  std::optional<std::pair<double, double>> bias_cell;  // (u0, delta)
  std::string method;  // "sandwich", "bootstrap", or empty
};

struct EstimatorOptions {
  // Cap weights at this quantile of the nonzero weights; off by default.
  std::optional<double> weight_truncation_quantile;
};

}  // namespace transport
