#include "transport/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "transport/error.hpp"
#include "transport/estimators.hpp"
#include "transport/results_io.hpp"
#include "transport/svg_plot.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "cli";

void apply_threads(const RunConfig& cfg) {
#ifdef _OPENMP
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#else
  (void)cfg;
#endif
}

std::string out_path(const RunConfig& cfg, const std::string& suffix) {
  std::filesystem::path p(cfg.output.dir);
  return (p / (cfg.output.basename + suffix)).string();
}

StudyDataset load_for(const RunConfig& cfg) {
  if (cfg.data_path.empty())
    fail_config(kComponent, "no data path given (config data.path or --data)");
  StudyDataset ds = load_dataset(cfg.data_path, cfg.schema, cfg.design);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << "\n";
  if (ds.dropped_rows > 0)
    std::cerr << "note: dropped " << ds.dropped_rows << " incomplete rows\n";
  return ds;
}

NuisanceModels fit_for(const RunConfig& cfg, const StudyDataset& ds) {
  NuisanceModels nm = fit_nuisance(ds, resolve_models(cfg, ds));
  for (const auto& w : nm.warnings) std::cerr << "warning: " << w << "\n";
  return nm;
}

void print_records(const std::vector<EstimateRecord>& records) {
  std::printf("%-14s %-10s %12s %12s %24s\n", "estimator", "estimand", "estimate", "se",
              "ci");
  for (const auto& rec : records) {
    std::printf("%-14s %-10s %12.4f", to_string(rec.estimator).c_str(),
                to_string(rec.estimand).c_str(), rec.point);
    if (rec.se) std::printf(" %12.4f", *rec.se);
    else std::printf(" %12s", "");
    if (rec.ci) std::printf("    (%10.4f, %10.4f)", rec.ci->first, rec.ci->second);
    std::printf("\n");
  }
}

void write_grid_outputs(const RunConfig& cfg, const SensitivityGridResult& result,
                        const std::vector<EstimatorId>& estimators, bool with_crossings) {
  auto records = flatten_records(result);
  nlohmann::json j = grid_to_json(result);
  if (with_crossings) {
    nlohmann::json crossings;
    for (EstimatorId id : estimators)
      crossings[to_string(id)] = crossings_to_json(find_crossing(result, id));
    j["crossings"] = crossings;
  }

  std::vector<std::pair<std::string, std::string>> files;
  if (cfg.output.csv) files.emplace_back(out_path(cfg, ".csv"), results_csv(records));
  if (cfg.output.json) files.emplace_back(out_path(cfg, ".json"), j.dump(2) + "\n");
  if (cfg.output.plot)
    for (EstimatorId id : estimators)
      files.emplace_back(out_path(cfg, "_" + to_string(id) + ".svg"),
                         sensitivity_curves_svg(result, id));

  for (const auto& [path, content] : files) {
    write_file_atomic(path, content);
    std::printf("wrote %s\n", path.c_str());
  }
}

}  // namespace

void cmd_estimate(const RunConfig& cfg) {
  apply_threads(cfg);
  if (cfg.u0_values.size() != 1 || cfg.delta_values.size() != 1)
    fail_config(kComponent,
                "estimate expects a single bias cell; use the sensitivity command for grids");
  StudyDataset ds = load_for(cfg);
  NuisanceModels nm = fit_for(cfg, ds);
  auto estimators = resolve_estimators(cfg);
  auto grid = make_grid(cfg.u0_values, cfg.delta_values, cfg.modulation);
  SensitivityGridResult result =
      run_grid(ds, nm, grid, estimators, cfg.inference, cfg.options);
  print_records(flatten_records(result));
  write_grid_outputs(cfg, result, estimators, false);
}

void cmd_sensitivity(const RunConfig& cfg) {
  apply_threads(cfg);
  StudyDataset ds = load_for(cfg);
  NuisanceModels nm = fit_for(cfg, ds);
  auto estimators = resolve_estimators(cfg);
  auto grid = make_grid(cfg.u0_values, cfg.delta_values, cfg.modulation);
  SensitivityGridResult result =
      run_grid(ds, nm, grid, estimators, cfg.inference, cfg.options);

  std::printf("%zu cells x %zu estimators on n=%zu (n0=%zu)\n", result.cells.size(),
              estimators.size(), result.meta.n, result.meta.n0);
  for (EstimatorId id : estimators) {
    for (const auto& cr : find_crossing(result, id)) {
      if (cr.delta_star)
        std::printf("%s: ATE crosses zero at delta = %.3f (u0 = %g)\n",
                    to_string(id).c_str(), *cr.delta_star, cr.u0);
      else
        std::printf("%s: no ATE sign change in the delta range (u0 = %g)\n",
                    to_string(id).c_str(), cr.u0);
    }
  }
  write_grid_outputs(cfg, result, estimators, true);
}

void cmd_simulate(const RunConfig& cfg) {
  apply_threads(cfg);
  if (!cfg.simulate) fail_config(kComponent, "config has no simulate block");
  StudyDataset ds = generate(*cfg.simulate);
  TrueValues truth = true_values(*cfg.simulate);

  std::string data_path = out_path(cfg, ".csv");
  write_file_atomic(data_path, dataset_csv(ds));
  std::string truth_path = out_path(cfg, "_truths.json");
  write_file_atomic(truth_path, truths_to_json(truth).dump(2) + "\n");
  std::printf("wrote %s (n=%zu, n0=%zu)\nwrote %s\n", data_path.c_str(), ds.n(), ds.n0(),
              truth_path.c_str());
}

void cmd_check_positivity(const RunConfig& cfg) {
  apply_threads(cfg);
  StudyDataset ds = load_for(cfg);
  NuisanceModels nm = fit_for(cfg, ds);
  PositivityReport report = positivity_diagnostics(ds, nm, cfg.positivity_threshold);

  std::printf("participation probability range: [%.6f, %.6f]\n", report.participation_min,
              report.participation_max);
  std::printf("rows outside [%g, %g]: %zu\n", report.threshold, 1.0 - report.threshold,
              report.participation_out_of_range);
  std::printf("min treatment probability (s=1): a=1 %.6f, a=0 %.6f\n",
              report.treatment_min[1], report.treatment_min[0]);
  std::printf("flagged rows: %zu\n", report.flagged_rows.size());
  if (!report.flagged_rows.empty())
    std::printf("positivity looks questionable for %zu rows; estimates may be unstable\n",
                report.flagged_rows.size());

  write_file_atomic(out_path(cfg, "_positivity.json"),
                    positivity_to_json(report).dump(2) + "\n");
  std::printf("wrote %s\n", out_path(cfg, "_positivity.json").c_str());
}

}  // namespace transport
