#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "transport/error.hpp"
#include "transport/estimators.hpp"
#include "transport/inference.hpp"

#include "fixtures.hpp"

using namespace transport;

namespace {

const BiasFunctionSpec kZero{};

// psi = y - mu: the sample mean as a one-parameter system
EstimatingSystem mean_system(std::vector<double> y) {
  auto values = std::make_shared<std::vector<double>>(std::move(y));
  return EstimatingSystem(
      {{"mu", 0, 1}}, values->size(),
      [values](std::size_t i, const Eigen::VectorXd& eta, double* out) {
        out[0] = (*values)[i] - eta(0);
      });
}

std::vector<EstimatorId> all_ids() {
  return {EstimatorId::OM,    EstimatorId::IOW1,  EstimatorId::IOW2,
          EstimatorId::AIOW1, EstimatorId::AIOW2, EstimatorId::BCOutcomeIOW,
          EstimatorId::OMPop, EstimatorId::IPW1,  EstimatorId::IPW2,
          EstimatorId::AIPW1, EstimatorId::AIPW2, EstimatorId::BCOutcomeIPW};
}

}  // namespace

TEST_CASE("normal quantile matches reference values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
  CHECK(normal_quantile(0.95) == doctest::Approx(1.644853627).epsilon(1e-8));
  CHECK(normal_quantile(0.995) == doctest::Approx(2.575829304).epsilon(1e-8));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963985).epsilon(1e-8));
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
}

TEST_CASE("mean-only system solves to the sample mean with the hand sandwich variance") {
  EstimatingSystem sys = mean_system({10.0, 14.0});
  sys.solve_newton(Eigen::VectorXd::Zero(1));
  CHECK(sys.value_of("mu") == doctest::Approx(12.0).epsilon(1e-10));

  SandwichResult sw = sandwich(sys);
  // A = 1, B = ((-2)^2 + 2^2)/2 = 4, Var = 4/2 = 2
  CHECK(sw.se_of("mu") == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  auto [lo, hi] = sw.ci_of("mu");
  CHECK(lo == doctest::Approx(12.0 - 1.959964 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(hi == doctest::Approx(12.0 + 1.959964 * std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("constant data has zero sandwich SE") {
  EstimatingSystem sys = mean_system({3.0, 3.0, 3.0, 3.0});
  sys.solve_newton(Eigen::VectorXd::Zero(1));
  CHECK(sandwich(sys).se_of("mu") == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("set_solution rejects non-solutions") {
  EstimatingSystem sys = mean_system({10.0, 14.0});
  Eigen::VectorXd wrong(1);
  wrong << 5.0;
  CHECK_THROWS_AS(sys.set_solution(wrong), Error);
}

TEST_CASE("micro dataset AIOW2 stack solves to the direct estimate with a sane CI") {
  StudyDataset ds = testutil::d6();
  NuisanceModels nm = testutil::d6_models(ds);
  EstimatingSystem sys = build_estimator_system(ds, nm, EstimatorId::AIOW2, kZero);
  CHECK(sys.value_of("mu1") == doctest::Approx(12.0).epsilon(1e-12));
  CHECK(sys.value_of("mu0") == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(sys.value_of("ate") == doctest::Approx(5.0).epsilon(1e-12));

  SandwichResult sw = sandwich(sys);
  for (const char* block : {"mu1", "mu0", "ate"}) {
    double se = sw.se_of(block);
    CHECK(se > 0.0);
    CHECK(std::isfinite(se));
    auto [lo, hi] = sw.ci_of(block);
    CHECK(lo < sw.estimate_of(block));
    CHECK(hi > sw.estimate_of(block));
  }
}

TEST_CASE("stacked targets equal the direct estimators for every id and bias spec") {
  StudyDataset nonnested = testutil::random_dataset(101, 80, Design::NonNested);
  StudyDataset nested = testutil::random_dataset(101, 80, Design::Nested);
  NuisanceModels nm_nn = fit_nuisance(nonnested, ModelSpec::main_effects({"x1", "x2"}));
  NuisanceModels nm_n = fit_nuisance(nested, ModelSpec::main_effects({"x1", "x2"}));

  Modulation mod;
  mod.covariate = "x2";
  mod.multipliers = {{1.0, 1.0}, {0.0, 0.8}};
  std::vector<BiasFunctionSpec> specs = {
      kZero, {4.0, -2.5, std::nullopt}, {-3.0, 7.0, mod}};

  for (EstimatorId id : all_ids()) {
    const bool pop = is_population_estimator(id);
    const StudyDataset& ds = pop ? nested : nonnested;
    const NuisanceModels& nm = pop ? nm_n : nm_nn;
    for (const auto& spec : specs) {
      CAPTURE(to_string(id), spec.u0, spec.delta);
      EstimatingSystem sys = build_estimator_system(ds, nm, id, spec);
      double mu1 = point_estimate(ds, nm, id, Estimand::MeanA1, spec);
      double mu0 = point_estimate(ds, nm, id, Estimand::MeanA0, spec);
      CHECK(std::abs(sys.value_of("mu1") - mu1) <= 1e-10);
      CHECK(std::abs(sys.value_of("mu0") - mu0) <= 1e-10);
      CHECK(std::abs(sys.value_of("ate") - (mu1 - mu0)) <= 1e-10);
    }
  }
}

TEST_CASE("fixed treatment probability drops the treatment block from the stack") {
  StudyDataset ds = testutil::random_dataset(55, 70);
  ModelSpec spec = ModelSpec::main_effects({"x1"});
  spec.fixed_treatment_probability = 0.5;
  NuisanceModels nm = fit_nuisance(ds, spec);
  EstimatingSystem sys = build_estimator_system(ds, nm, EstimatorId::IOW2, kZero);
  CHECK(sys.find_block("treatment") == nullptr);
  CHECK(sys.find_block("participation") != nullptr);
  SandwichResult sw = sandwich(sys);
  CHECK(sw.se_of("ate") > 0.0);
}

TEST_CASE("naive mode stacks only the target blocks") {
  StudyDataset ds = testutil::random_dataset(56, 70);
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects({"x1", "x2"}));
  EstimatingSystem sys = build_estimator_system(ds, nm, EstimatorId::AIOW2, kZero, false);
  CHECK(sys.find_block("participation") == nullptr);
  CHECK(sys.value_of("ate") ==
        doctest::Approx(estimate_ate(ds, nm, EstimatorId::AIOW2, kZero)).epsilon(1e-10));
  CHECK(sandwich(sys).se_of("ate") > 0.0);
}

TEST_CASE("sandwich covariance is stable under halving the finite-difference step") {
  StudyDataset ds = testutil::random_dataset(77, 150);
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects({"x1", "x2"}));
  EstimatingSystem sys = build_estimator_system(ds, nm, EstimatorId::AIOW2, kZero);
  SandwichResult coarse = sandwich(sys, 0.95, 1e-6);
  SandwichResult fine = sandwich(sys, 0.95, 5e-7);
  for (const char* block : {"mu1", "mu0", "ate"}) {
    double a = coarse.se_of(block);
    double b = fine.se_of(block);
    CHECK(std::abs(a - b) / a < 5e-2);
  }
}

TEST_CASE("bootstrap on constant data gives zero SE and a degenerate CI") {
  std::vector<Row> rows;
  for (int i = 0; i < 12; ++i) {
    Row r;
    r.s = i < 6 ? 1 : 0;
    if (r.s == 1) {
      r.a = i % 2;
      r.y = 4.0;
    }
    rows.push_back(r);
  }
  StudyDataset ds = dataset_from_rows(rows, Design::NonNested, {});
  EstimatorClosure closure = [](const StudyDataset& d) {
    double sum = 0.0;
    double count = 0.0;
    for (const Row& r : d.rows)
      if (r.y) {
        sum += *r.y;
        count += 1.0;
      }
    return std::vector<double>{sum / count};
  };
  BootstrapConfig cfg;
  cfg.replicates = 50;
  cfg.seed = 9;
  BootstrapResult result = bootstrap(ds, closure, cfg);
  CHECK(result.components[0].se == 0.0);
  CHECK(result.components[0].ci_lo == 4.0);
  CHECK(result.components[0].ci_hi == 4.0);
  CHECK(result.replicates_failed == 0);
}

TEST_CASE("bootstrap is deterministic and order-independent") {
  StudyDataset ds = testutil::random_dataset(303, 60);
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects({"x1", "x2"}));
  EstimatorClosure closure = [&](const StudyDataset& d) {
    NuisanceModels refit = fit_nuisance(d, nm.spec);
    return std::vector<double>{estimate_ate(d, refit, EstimatorId::AIOW2, kZero)};
  };
  BootstrapConfig cfg;
  cfg.replicates = 40;
  cfg.seed = 1234;
  cfg.parallel = true;
  BootstrapResult a = bootstrap(ds, closure, cfg);
  BootstrapResult b = bootstrap(ds, closure, cfg);
  cfg.parallel = false;
  BootstrapResult serial = bootstrap(ds, closure, cfg);

  CHECK(a.components[0].se == b.components[0].se);
  CHECK(a.components[0].ci_lo == b.components[0].ci_lo);
  CHECK(a.components[0].se == serial.components[0].se);
  CHECK(a.components[0].ci_lo == serial.components[0].ci_lo);
  CHECK(a.components[0].ci_hi == serial.components[0].ci_hi);
  REQUIRE(a.replicate_values.size() == serial.replicate_values.size());
  for (std::size_t r = 0; r < a.replicate_values.size(); ++r)
    CHECK(a.replicate_values[r][0] == serial.replicate_values[r][0]);
}

TEST_CASE("stratified resampling preserves the stratum sizes in every replicate") {
  StudyDataset ds = testutil::random_dataset(404, 50);
  const std::size_t n1 = ds.n1(), n0 = ds.n0();
  for (int r = 0; r < 25; ++r) {
    StudyDataset res = resample_rows(ds, 77, r, true);
    CHECK(res.n1() == n1);
    CHECK(res.n0() == n0);
    CHECK(res.n() == ds.n());
  }
}

TEST_CASE("failed replicates are excluded, counted, and capped at 20 percent") {
  StudyDataset ds = testutil::random_dataset(505, 40);

  // deterministic partial failure keyed on the resample content
  auto trigger = [](const StudyDataset& d) {
    double y0 = 0.0;
    for (const Row& r : d.rows)
      if (r.y) {
        y0 = *r.y;
        break;
      }
    return std::fmod(std::abs(y0), 1.0) < 0.12;
  };
  int expected_failures = 0;
  const int reps = 30;
  for (int r = 0; r < reps; ++r)
    if (trigger(resample_rows(ds, 88, r, true))) ++expected_failures;
  REQUIRE(expected_failures > 0);

  EstimatorClosure closure = [&](const StudyDataset& d) {
    if (trigger(d)) fail_numeric("test", "simulated numeric failure");
    return std::vector<double>{1.0};
  };
  BootstrapConfig cfg;
  cfg.replicates = reps;
  cfg.seed = 88;
  if (expected_failures > static_cast<int>(0.2 * reps)) {
    CHECK_THROWS_AS(bootstrap(ds, closure, cfg), Error);
  } else {
    BootstrapResult result = bootstrap(ds, closure, cfg);
    CHECK(result.replicates_failed == expected_failures);
  }

  // total failure always errors
  EstimatorClosure always_fail = [](const StudyDataset&) -> std::vector<double> {
    fail_numeric("test", "boom");
  };
  CHECK_THROWS_AS(bootstrap(ds, always_fail, cfg), Error);
}

TEST_CASE("micro dataset sandwich and bootstrap agree loosely") {
  StudyDataset ds = testutil::random_dataset(606, 400);
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects({"x1", "x2"}));
  EstimatingSystem sys = build_estimator_system(ds, nm, EstimatorId::AIOW2, kZero);
  double sw_se = sandwich(sys).se_of("ate");

  EstimatorClosure closure = [&](const StudyDataset& d) {
    NuisanceModels refit = fit_nuisance(d, nm.spec);
    return std::vector<double>{estimate_ate(d, refit, EstimatorId::AIOW2, kZero)};
  };
  BootstrapConfig cfg;
  cfg.replicates = 200;
  cfg.seed = 5;
  BootstrapResult boot = bootstrap(ds, closure, cfg);
  CHECK(boot.components[0].se == doctest::Approx(sw_se).epsilon(0.35));
}
