#include <doctest.h>

#include <cmath>

#include "transport/error.hpp"
#include "transport/estimators.hpp"
#include "transport/simulate.hpp"

using namespace transport;

namespace {

DgpConfig base_config(std::size_t n = 1000, std::uint64_t seed = 7) {
  DgpConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.covariates = {{"x1", CovariateDist::Kind::Normal, 0.0, 1.0, 0.5},
                    {"x2", CovariateDist::Kind::Bernoulli, 0.0, 1.0, 0.4}};
  cfg.participation_intercept = 0.3;
  cfg.participation_coef = {0.7, -0.5};
  cfg.treatment_prob = 0.5;
  cfg.outcome[1] = {85.0, {12.0, 6.0}};
  cfg.outcome[0] = {70.0, {10.0, 6.0}};
  cfg.noise_sd = 8.0;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic given the seed") {
  DgpConfig cfg = base_config(200);
  StudyDataset a = generate(cfg);
  StudyDataset b = generate(cfg);
  REQUIRE(a.n() == b.n());
  for (std::size_t i = 0; i < a.n(); ++i) {
    CHECK(a.rows[i].s == b.rows[i].s);
    CHECK(a.rows[i].a == b.rows[i].a);
    CHECK(a.rows[i].y == b.rows[i].y);
    CHECK(a.rows[i].x == b.rows[i].x);
  }
  StudyDataset c = generate(base_config(200, 8));
  bool any_difference = false;
  for (std::size_t i = 0; i < a.n() && !any_difference; ++i)
    any_difference = a.rows[i].x != c.rows[i].x;
  CHECK(any_difference);
}

TEST_CASE("generated data have the trial missingness pattern") {
  StudyDataset ds = generate(base_config(500));
  CHECK(ds.covariate_names == std::vector<std::string>{"x1", "x2"});
  std::size_t trial = 0;
  for (const auto& row : ds.rows) {
    if (row.s == 1) {
      ++trial;
      CHECK(row.a.has_value());
      CHECK(row.y.has_value());
    } else {
      CHECK_FALSE(row.a.has_value());
      CHECK_FALSE(row.y.has_value());
    }
  }
  CHECK(trial == ds.n1());
  CHECK(trial > 0);
  CHECK(ds.n0() > 0);
}

TEST_CASE("flat participation rule yields about half the rows in the trial") {
  DgpConfig cfg = base_config(10000, 99);
  cfg.participation_intercept = 0.0;
  cfg.participation_coef = {0.0, 0.0};
  StudyDataset ds = generate(cfg);
  double fraction = static_cast<double>(ds.n1()) / static_cast<double>(ds.n());
  CHECK(fraction == doctest::Approx(0.5).epsilon(0.031));  // ~3 binomial SDs at n=1e4
}

TEST_CASE("degenerate configs are rejected") {
  DgpConfig cfg = base_config();
  cfg.noise_sd = 0.0;
  CHECK_THROWS_AS(generate(cfg), Error);

  cfg = base_config();
  cfg.treatment_prob = 1.0;
  CHECK_THROWS_AS(generate(cfg), Error);

  cfg = base_config();
  cfg.participation_coef = {0.0, 0.0};
  cfg.participation_intercept = 40.0;
  CHECK_THROWS_AS(generate(cfg), Error);

  cfg = base_config();
  cfg.participation_coef = {0.7};
  CHECK_THROWS_AS(generate(cfg), Error);
}

TEST_CASE("no-effect config has exactly zero true ATEs") {
  DgpConfig cfg = base_config();
  cfg.outcome[1] = cfg.outcome[0];
  TrueValues truth = true_values(cfg, 200000);
  CHECK(truth.ate_s0 == 0.0);
  CHECK(truth.ate_pop == 0.0);
}

TEST_CASE("constant injected bias produces the stated gaps and delta") {
  DgpConfig cfg = base_config();
  cfg.true_bias = {-2.0, 5.0, std::nullopt};  // u*(0) = -2, u*(1) = 3
  TrueValues truth = true_values(cfg, 200000);
  CHECK(truth.bias_gap_s0[0] == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(truth.bias_gap_s0[1] == doctest::Approx(3.0).epsilon(1e-9));
  // population gap is c_a * Pr[S=0]
  double pr_s0 = truth.bias_gap_pop[1] / 3.0;
  CHECK(truth.bias_gap_pop[0] == doctest::Approx(-2.0 * pr_s0).epsilon(1e-6));
  CHECK(pr_s0 > 0.2);
  CHECK(pr_s0 < 0.8);
}

TEST_CASE("u*=0 truths: trial means are unbiased for the injected conditional means") {
  DgpConfig cfg = base_config();
  TrueValues truth = true_values(cfg, 500000);
  // flat-participation variant: selection ignores X, so the S=0 and
  // whole-population estimands coincide
  DgpConfig flat = cfg;
  flat.participation_coef = {0.0, 0.0};
  TrueValues flat_truth = true_values(flat, 500000);
  CHECK(flat_truth.mean_s0[1] == doctest::Approx(flat_truth.mean_pop[1]).epsilon(1e-10));
  CHECK(flat_truth.mean_s0[0] == doctest::Approx(flat_truth.mean_pop[0]).epsilon(1e-10));
  // with u*=0, E[Y^a] is the closed-form mean of the linear rule
  double expected_pop_a1 = 85.0 + 12.0 * 0.0 + 6.0 * 0.4;
  CHECK(truth.mean_pop[1] == doctest::Approx(expected_pop_a1).epsilon(5e-4));
  CHECK(truth.mc_se_pop[1] > 0.0);
  CHECK(truth.mc_se_s0[1] > 0.0);
}

TEST_CASE("selection shifts the S=0 estimand away from the population one") {
  // participation loads positively on x1, so S=0 has lower x1 and lower means
  DgpConfig cfg = base_config();
  TrueValues truth = true_values(cfg, 500000);
  CHECK(truth.mean_s0[1] < truth.mean_pop[1]);
  CHECK(truth.mean_s0[0] < truth.mean_pop[0]);
}

TEST_CASE("estimators recover the oracle truth on a large sample") {
  DgpConfig cfg = base_config(20000, 31);
  TrueValues truth = true_values(cfg, 2000000);
  StudyDataset ds = generate(cfg);
  NuisanceModels nm = fit_nuisance(ds, ModelSpec::main_effects(ds.covariate_names));
  // loose 3-sigma-ish sanity bound; the acceptance suite does this properly
  double est = estimate_ate(ds, nm, EstimatorId::AIOW2, {});
  CHECK(est == doctest::Approx(truth.ate_s0).epsilon(0.05));
}
