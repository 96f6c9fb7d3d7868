#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/sensitivity.hpp"
#include "transport/simulate.hpp"

namespace transport {

// Fixed column order: estimator,target,estimand,u0,delta,estimate,se,ci_lo,ci_hi,method.
// Missing inference fields are left empty.
std::string results_csv(const std::vector<EstimateRecord>& records);

nlohmann::json record_to_json(const EstimateRecord& rec);
nlohmann::json grid_to_json(const SensitivityGridResult& result);
nlohmann::json crossings_to_json(const std::vector<CrossingResult>& crossings);
nlohmann::json positivity_to_json(const PositivityReport& report);
nlohmann::json truths_to_json(const TrueValues& truth);

std::vector<EstimateRecord> flatten_records(const SensitivityGridResult& result);

// Dataset in the standard input schema: s,a,y followed by the covariates.
std::string dataset_csv(const StudyDataset& ds);

// Writes via a temp file and rename so partially written outputs never land.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace transport
