#include "transport/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>

#include "transport/error.hpp"
#include "transport/estimators.hpp"

namespace transport {

namespace {
constexpr const char* kComponent = "sensitivity";
}

std::string to_string(InferenceMethod m) {
  switch (m) {
    case InferenceMethod::None: return "none";
    case InferenceMethod::Sandwich: return "sandwich";
    case InferenceMethod::Bootstrap: return "bootstrap";
  }
  return "?";
}

InferenceMethod inference_method_from_string(const std::string& name) {
  if (name == "none") return InferenceMethod::None;
  if (name == "sandwich") return InferenceMethod::Sandwich;
  if (name == "bootstrap") return InferenceMethod::Bootstrap;
  fail_config(kComponent, "unknown inference method '" + name + "'");
}

namespace {

void validate_inputs(const StudyDataset& ds, const std::vector<BiasFunctionSpec>& grid,
                     const std::vector<EstimatorId>& estimators,
                     const InferenceConfig& inference, const EstimatorOptions& options) {
  if (grid.empty()) fail_config(kComponent, "empty bias grid");
  if (estimators.empty()) fail_config(kComponent, "no estimators requested");
  for (EstimatorId id : estimators)
    if (is_population_estimator(id) && ds.design == Design::NonNested)
      fail_config(kComponent,
                  "estimator " + to_string(id) +
                      " targets the whole population, which a non-nested design does not "
                      "identify; use a nested design or an S=0 estimator");
  if (options.weight_truncation_quantile &&
      inference.method == InferenceMethod::Sandwich)
    fail_numeric(kComponent,
                 "sandwich variance is unavailable with weight truncation; use bootstrap");
}

struct CellPoints {
  double mu1 = 0, mu0 = 0;
};

}  // namespace

SensitivityGridResult run_grid(const StudyDataset& ds, const NuisanceModels& nm,
                               const std::vector<BiasFunctionSpec>& grid,
                               const std::vector<EstimatorId>& estimators,
                               const InferenceConfig& inference,
                               const EstimatorOptions& options) {
  validate_inputs(ds, grid, estimators, inference, options);

  SensitivityGridResult result;
  result.meta.n = ds.n();
  result.meta.n0 = ds.n0();
  result.meta.design = ds.design;
  result.meta.target = std::any_of(estimators.begin(), estimators.end(),
                                   is_population_estimator)
                           ? TargetPopulation::WholePopulation
                           : TargetPopulation::NonRandomized;
  result.meta.method = inference.method;
  result.meta.level = inference.level;
  result.meta.seed = inference.seed;
  result.meta.estimators = estimators;
  if (!grid.front().is_constant())
    result.meta.modulation_id = grid.front().modulation->covariate;

  const std::size_t n_cells = grid.size();
  const std::size_t n_est = estimators.size();
  result.cells.resize(n_cells);

  const bool with_sandwich = inference.method == InferenceMethod::Sandwich;
  std::exception_ptr first_error = nullptr;

#pragma omp parallel for schedule(dynamic) if (inference.parallel)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n_cells); ++c) {
    try {
      const BiasFunctionSpec& spec = grid[static_cast<std::size_t>(c)];
      GridCellResult cell;
      cell.spec = spec;
      for (EstimatorId id : estimators) {
        const TargetPopulation target = target_of(id);
        const bool pop = is_population_estimator(id);
        double mu1 = pop ? pop_arm_estimate(ds, nm, id, 1, spec, options)
                         : arm_estimate(ds, nm, id, 1, spec, options);
        double mu0 = pop ? pop_arm_estimate(ds, nm, id, 0, spec, options)
                         : arm_estimate(ds, nm, id, 0, spec, options);

        EstimateRecord rec1{id, Estimand::MeanA1, target, mu1};
        EstimateRecord rec0{id, Estimand::MeanA0, target, mu0};
        EstimateRecord rate{id, Estimand::Ate, target, mu1 - mu0};
        for (EstimateRecord* rec : {&rec1, &rec0, &rate})
          rec->bias_cell = std::make_pair(spec.u0, spec.delta);

        if (with_sandwich) {
          EstimatingSystem sys =
              build_estimator_system(ds, nm, id, spec, !inference.nuisance_fixed);
          SandwichResult sw = sandwich(sys, inference.level);
          const char* block[] = {"mu1", "mu0", "ate"};
          EstimateRecord* recs[] = {&rec1, &rec0, &rate};
          for (int k = 0; k < 3; ++k) {
            recs[k]->se = sw.se_of(block[k]);
            recs[k]->ci = sw.ci_of(block[k]);
            recs[k]->method = "sandwich";
          }
        }
        cell.records.push_back(std::move(rec1));
        cell.records.push_back(std::move(rec0));
        cell.records.push_back(std::move(rate));
      }
      result.cells[static_cast<std::size_t>(c)] = std::move(cell);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  if (inference.method == InferenceMethod::Bootstrap) {
    const ModelSpec model_spec = nm.spec;
    EstimatorClosure closure = [&, model_spec](const StudyDataset& resampled) {
      NuisanceModels refit = fit_nuisance(resampled, model_spec);
      std::vector<double> flat;
      flat.reserve(n_cells * n_est * 3);
      for (const BiasFunctionSpec& spec : grid) {
        for (EstimatorId id : estimators) {
          const bool pop = is_population_estimator(id);
          double mu1 = pop ? pop_arm_estimate(resampled, refit, id, 1, spec, options)
                           : arm_estimate(resampled, refit, id, 1, spec, options);
          double mu0 = pop ? pop_arm_estimate(resampled, refit, id, 0, spec, options)
                           : arm_estimate(resampled, refit, id, 0, spec, options);
          flat.push_back(mu1);
          flat.push_back(mu0);
          flat.push_back(mu1 - mu0);
        }
      }
      return flat;
    };

    BootstrapConfig cfg;
    cfg.replicates = inference.replicates;
    cfg.seed = inference.seed;
    cfg.stratify_by_s = inference.stratify_by_s;
    cfg.level = inference.level;
    cfg.parallel = inference.parallel;
    BootstrapResult boot = bootstrap(ds, closure, cfg);

    std::size_t component = 0;
    for (auto& cell : result.cells) {
      for (auto& rec : cell.records) {
        const BootstrapComponent& bc = boot.components.at(component++);
        rec.se = bc.se;
        rec.ci = std::make_pair(bc.ci_lo, bc.ci_hi);
        rec.method = "bootstrap";
      }
    }
  }
  return result;
}

std::vector<CrossingResult> find_crossing(const SensitivityGridResult& result,
                                          EstimatorId estimator) {
  struct RowPoint {
    double delta;
    double ate;
    std::optional<std::pair<double, double>> ci;
  };
  // group by u0, preserving first-appearance (canonical) order
  std::vector<double> u0_order;
  std::map<double, std::vector<RowPoint>> by_u0;
  for (const auto& cell : result.cells) {
    for (const auto& rec : cell.records) {
      if (rec.estimator != estimator || rec.estimand != Estimand::Ate) continue;
      if (!by_u0.count(cell.spec.u0)) u0_order.push_back(cell.spec.u0);
      by_u0[cell.spec.u0].push_back({cell.spec.delta, rec.point, rec.ci});
    }
  }

  std::vector<CrossingResult> crossings;
  for (double u0 : u0_order) {
    auto& points = by_u0[u0];
    std::sort(points.begin(), points.end(),
              [](const RowPoint& a, const RowPoint& b) { return a.delta < b.delta; });
    CrossingResult cr;
    cr.u0 = u0;
    for (std::size_t k = 0; k + 1 < points.size() && !cr.delta_star; ++k) {
      double a0 = points[k].ate, a1 = points[k + 1].ate;
      if (a0 == 0.0) {
        cr.delta_star = points[k].delta;
      } else if (a0 * a1 < 0.0) {
        cr.delta_star = points[k].delta + (points[k + 1].delta - points[k].delta) *
                                              (0.0 - a0) / (a1 - a0);
      } else if (a1 == 0.0 && k + 2 == points.size()) {
        cr.delta_star = points[k + 1].delta;
      }
    }
    // contiguous delta ranges whose CI excludes zero
    std::optional<double> run_start;
    double run_end = 0.0;
    for (const auto& p : points) {
      bool excludes = p.ci && (p.ci->first > 0.0 || p.ci->second < 0.0);
      if (excludes) {
        if (!run_start) run_start = p.delta;
        run_end = p.delta;
      } else if (run_start) {
        cr.ci_excludes_zero.emplace_back(*run_start, run_end);
        run_start.reset();
      }
    }
    if (run_start) cr.ci_excludes_zero.emplace_back(*run_start, run_end);
    crossings.push_back(std::move(cr));
  }
  return crossings;
}

}  // namespace transport
