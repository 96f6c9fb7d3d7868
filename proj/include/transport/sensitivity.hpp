#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"
#include "transport/inference.hpp"

namespace transport {

enum class InferenceMethod { None, Sandwich, Bootstrap };

std::string to_string(InferenceMethod m);
InferenceMethod inference_method_from_string(const std::string& name);

struct InferenceConfig {
  InferenceMethod method = InferenceMethod::Sandwich;
  double level = 0.95;
  int replicates = 500;
  std::uint64_t seed = 0;
  std::optional<bool> stratify_by_s;
  bool nuisance_fixed = false;  // naive sandwich: nuisance blocks not stacked
  bool parallel = true;
};

struct GridCellResult {
  BiasFunctionSpec spec;
  // records ordered (estimator outer; MeanA1, MeanA0, Ate inner)
  std::vector<EstimateRecord> records;
};

struct GridMetadata {
  std::size_t n = 0;
  std::size_t n0 = 0;
  Design design = Design::NonNested;
  TargetPopulation target = TargetPopulation::NonRandomized;
  InferenceMethod method = InferenceMethod::None;
  double level = 0.95;
  std::uint64_t seed = 0;
  std::vector<EstimatorId> estimators;
  std::string modulation_id;  // empty when unmodulated
};

struct SensitivityGridResult {
  GridMetadata meta;
  std::vector<GridCellResult> cells;  // canonical grid order (u0 outer, delta inner)
};

// Evaluates every estimator over the bias grid for both arms and the ATE.
// Nuisance fits are shared across cells; cells may be evaluated in parallel
// and the output order is canonical regardless.
SensitivityGridResult run_grid(const StudyDataset& ds, const NuisanceModels& nm,
                               const std::vector<BiasFunctionSpec>& grid,
                               const std::vector<EstimatorId>& estimators,
                               const InferenceConfig& inference,
                               const EstimatorOptions& options = {});

struct CrossingResult {
  double u0 = 0.0;
  // delta where the interpolated ATE point estimate changes sign
  std::optional<double> delta_star;
  // contiguous delta ranges (at grid resolution) where the ATE CI excludes 0
  std::vector<std::pair<double, double>> ci_excludes_zero;
};

// Per u0 row: linear interpolation of the ATE across delta.
std::vector<CrossingResult> find_crossing(const SensitivityGridResult& result,
                                          EstimatorId estimator);

}  // namespace transport
