#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"

namespace transport {

struct CovariateDist {
  enum class Kind { Normal, Bernoulli };
  std::string name;
  Kind kind = Kind::Normal;
  double mean = 0.0;  // Normal
  double sd = 1.0;    // Normal
  double p = 0.5;     // Bernoulli
};

struct ArmOutcomeRule {
  double intercept = 0.0;
  std::vector<double> coef;  // one per covariate
};

// Data-generating process with analytically trackable truths. Participation
// is logistic in the covariates; treatment is a constant probability among
// participants; outcomes are per-arm linear means plus Gaussian noise. The
// injected true_bias shifts trial participants' conditional means, realizing
// a controlled violation of mean transportability.
struct DgpConfig {
  std::size_t n = 1000;
  std::vector<CovariateDist> covariates;
  double participation_intercept = 0.0;
  std::vector<double> participation_coef;  // one per covariate
  double treatment_prob = 0.5;
  ArmOutcomeRule outcome[2];  // indexed by arm
  double noise_sd = 1.0;
  BiasFunctionSpec true_bias;  // u*(a, X)
  std::uint64_t seed = 0;
  Design design = Design::NonNested;
};

void check_config(const DgpConfig& cfg);

// Draws a dataset per the config; a and y are blanked on s=0 rows.
// Deterministic given cfg.seed.
StudyDataset generate(const DgpConfig& cfg);

struct TrueValues {
  // potential outcome means, indexed by arm
  double mean_s0[2] = {0, 0};   // E[Y^a | S=0]
  double mean_pop[2] = {0, 0};  // E[Y^a]
  double ate_s0 = 0;
  double ate_pop = 0;
  double mc_se_s0[2] = {0, 0};
  double mc_se_pop[2] = {0, 0};
  // what zero-bias estimators converge to minus the truth
  double bias_gap_s0[2] = {0, 0};   // E[u*(a,X) | S=0]
  double bias_gap_pop[2] = {0, 0};  // E[u*(a,X) (1 - Pr[S=1|X])]
  std::size_t draws = 0;
};

// Oracle truths computed by averaging the known conditional means over a
// large covariate sample (default 1e7 draws), with Monte Carlo SEs for the
// ratio estimands. Deterministic given oracle_seed.
TrueValues true_values(const DgpConfig& cfg, std::size_t draws = 10'000'000,
                       std::uint64_t oracle_seed = 0x5eedcafe);

}  // namespace transport
