// Compares the OpenMP grid/bootstrap paths against serial evaluation and
// checks they agree exactly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "transport/estimators.hpp"
#include "transport/inference.hpp"
#include "transport/sensitivity.hpp"
#include "transport/simulate.hpp"

using namespace transport;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

DgpConfig bench_dgp(std::size_t n) {
  DgpConfig cfg;
  cfg.n = n;
  cfg.covariates = {{"x1", CovariateDist::Kind::Normal, 0.0, 1.0, 0.5},
                    {"x2", CovariateDist::Kind::Bernoulli, 0.0, 1.0, 0.5}};
  cfg.participation_intercept = 0.2;
  cfg.participation_coef = {0.6, -0.5};
  cfg.treatment_prob = 0.5;
  cfg.outcome[1] = {90.0, {12.0, 8.0}};
  cfg.outcome[0] = {70.0, {10.0, 8.0}};
  cfg.noise_sd = 12.0;
  cfg.seed = 20240811;
  return cfg;
}

bool same_grid(const SensitivityGridResult& a, const SensitivityGridResult& b) {
  if (a.cells.size() != b.cells.size()) return false;
  for (std::size_t c = 0; c < a.cells.size(); ++c) {
    if (a.cells[c].records.size() != b.cells[c].records.size()) return false;
    for (std::size_t r = 0; r < a.cells[c].records.size(); ++r) {
      const auto& ra = a.cells[c].records[r];
      const auto& rb = b.cells[c].records[r];
      if (ra.point != rb.point) return false;
      if (ra.se.has_value() != rb.se.has_value()) return false;
      if (ra.se && *ra.se != *rb.se) return false;
    }
  }
  return true;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP not enabled; both runs are serial\n");
#endif

  StudyDataset ds = generate(bench_dgp(2000));
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects(ds.covariate_names));
  auto grid = make_grid({-40, 0, 40}, {-60, -40, -20, 0, 20, 40, 60});
  std::vector<EstimatorId> estimators = {EstimatorId::OM, EstimatorId::IOW1,
                                         EstimatorId::IOW2, EstimatorId::AIOW1,
                                         EstimatorId::AIOW2};

  InferenceConfig serial_cfg;
  serial_cfg.method = InferenceMethod::Sandwich;
  serial_cfg.parallel = false;
  InferenceConfig parallel_cfg = serial_cfg;
  parallel_cfg.parallel = true;

  auto t0 = std::chrono::steady_clock::now();
  auto grid_serial = run_grid(ds, nm, grid, estimators, serial_cfg);
  double serial_grid_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  auto grid_parallel = run_grid(ds, nm, grid, estimators, parallel_cfg);
  double parallel_grid_s = seconds_since(t0);

  std::printf("sensitivity grid (21 cells x 5 estimators, sandwich, n=%zu)\n", ds.n());
  std::printf("  serial   %.3f s\n  parallel %.3f s  (speedup %.2fx)\n", serial_grid_s,
              parallel_grid_s, serial_grid_s / parallel_grid_s);
  std::printf("  results identical: %s\n", same_grid(grid_serial, grid_parallel) ? "yes" : "NO");

  EstimatorClosure closure = [&](const StudyDataset& resampled) {
    NuisanceModels refit = fit_nuisance(resampled, nm.spec);
    return std::vector<double>{estimate_ate(resampled, refit, EstimatorId::AIOW2, {})};
  };
  BootstrapConfig boot;
  boot.replicates = 200;
  boot.seed = 7;
  boot.parallel = false;
  t0 = std::chrono::steady_clock::now();
  auto boot_serial = bootstrap(ds, closure, boot);
  double serial_boot_s = seconds_since(t0);

  boot.parallel = true;
  t0 = std::chrono::steady_clock::now();
  auto boot_parallel = bootstrap(ds, closure, boot);
  double parallel_boot_s = seconds_since(t0);

  bool boot_same = boot_serial.components[0].se == boot_parallel.components[0].se &&
                   boot_serial.components[0].ci_lo == boot_parallel.components[0].ci_lo &&
                   boot_serial.components[0].ci_hi == boot_parallel.components[0].ci_hi;
  std::printf("bootstrap (B=200 replicates, refit per replicate, n=%zu)\n", ds.n());
  std::printf("  serial   %.3f s\n  parallel %.3f s  (speedup %.2fx)\n", serial_boot_s,
              parallel_boot_s, serial_boot_s / parallel_boot_s);
  std::printf("  results identical: %s\n", boot_same ? "yes" : "NO");

  return same_grid(grid_serial, grid_parallel) && boot_same ? 0 : 1;
}
