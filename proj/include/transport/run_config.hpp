#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"
#include "transport/sensitivity.hpp"
#include "transport/simulate.hpp"

namespace transport {

struct OutputConfig {
  std::string dir = ".";
  std::string basename = "results";
  bool csv = true;
  bool json = true;
  bool plot = false;
};

struct RunConfig {
  Design design = Design::NonNested;
  TargetPopulation target = TargetPopulation::NonRandomized;

  std::string data_path;
  CsvSchema schema;

  // per-role covariate lists; unset means all dataset covariates
  std::optional<std::vector<std::string>> participation_covariates;
  std::optional<std::vector<std::string>> treatment_covariates;
  std::optional<std::vector<std::string>> outcome_covariates;
  std::vector<std::pair<std::string, std::string>> participation_interactions;
  std::vector<std::pair<std::string, std::string>> treatment_interactions;
  std::vector<std::pair<std::string, std::string>> outcome_interactions;
  std::optional<double> fixed_treatment_probability;

  std::vector<EstimatorId> estimators;  // empty: family default for the target

  std::vector<double> u0_values{0.0};
  std::vector<double> delta_values{0.0};
  std::optional<Modulation> modulation;

  InferenceConfig inference;
  EstimatorOptions options;
  double positivity_threshold = 0.01;
  int threads = 0;  // 0: library default

  OutputConfig output;

  std::optional<DgpConfig> simulate;  // for the simulate subcommand
};

RunConfig parse_config_json(const nlohmann::json& j);
RunConfig parse_config_file(const std::string& path);

// Estimator list (or the target's default family), validated against
// design/target compatibility.
std::vector<EstimatorId> resolve_estimators(const RunConfig& cfg);

// Builds the per-role model designs against the loaded dataset.
ModelSpec resolve_models(const RunConfig& cfg, const StudyDataset& ds);

}  // namespace transport
