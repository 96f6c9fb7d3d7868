#include "transport/simulate.hpp"

#include <cmath>
#include <random>

#include "transport/error.hpp"
#include "transport/glm.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "simulate";

std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), stream, 0x51a7b2c3u};
  return std::mt19937_64(seq);
}

double draw_covariate(const CovariateDist& dist, std::mt19937_64& rng) {
  if (dist.kind == CovariateDist::Kind::Normal) {
    std::normal_distribution<double> normal(dist.mean, dist.sd);
    return normal(rng);
  }
  std::bernoulli_distribution bern(dist.p);
  return bern(rng) ? 1.0 : 0.0;
}

double linear_mean(const ArmOutcomeRule& rule, const std::vector<double>& x) {
  double mean = rule.intercept;
  for (std::size_t j = 0; j < rule.coef.size(); ++j) mean += rule.coef[j] * x[j];
  return mean;
}

std::vector<std::string> covariate_names(const DgpConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& c : cfg.covariates) names.push_back(c.name);
  return names;
}

}  // namespace

void check_config(const DgpConfig& cfg) {
  if (cfg.n < 4) fail_config(kComponent, "n must be at least 4");
  if (cfg.covariates.empty() && !cfg.participation_coef.empty())
    fail_config(kComponent, "participation coefficients without covariates");
  if (cfg.participation_coef.size() != cfg.covariates.size())
    fail_config(kComponent, "participation coefficient count must match covariates");
  for (int arm : {0, 1})
    if (cfg.outcome[arm].coef.size() != cfg.covariates.size())
      fail_config(kComponent, "outcome coefficient count must match covariates");
  if (!(cfg.treatment_prob > 0.0 && cfg.treatment_prob < 1.0))
    fail_config(kComponent, "treatment probability must lie in (0,1)");
  if (!(cfg.noise_sd > 0.0)) fail_config(kComponent, "noise SD must be positive");
  for (const auto& c : cfg.covariates) {
    if (c.kind == CovariateDist::Kind::Normal && !(c.sd > 0.0))
      fail_config(kComponent, "covariate '" + c.name + "' needs positive SD");
    if (c.kind == CovariateDist::Kind::Bernoulli && !(c.p > 0.0 && c.p < 1.0))
      fail_config(kComponent, "covariate '" + c.name + "' needs p in (0,1)");
  }
  // a flat participation rule with an extreme intercept leaves one stratum empty
  bool flat = true;
  for (double c : cfg.participation_coef)
    if (c != 0.0) flat = false;
  double base = expit(cfg.participation_intercept);
  if (flat && (base < 1e-12 || base > 1.0 - 1e-12))
    fail_config(kComponent, "degenerate participation probability");
}

StudyDataset generate(const DgpConfig& cfg) {
  check_config(cfg);
  auto names = covariate_names(cfg);
  const int mod = resolve_modulation(cfg.true_bias, names);

  std::mt19937_64 rng = make_rng(cfg.seed, 1);
  std::normal_distribution<double> noise(0.0, cfg.noise_sd);

  std::vector<Row> rows;
  rows.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Row row;
    row.x.reserve(cfg.covariates.size());
    for (const auto& dist : cfg.covariates) row.x.push_back(draw_covariate(dist, rng));

    double eta = cfg.participation_intercept;
    for (std::size_t j = 0; j < cfg.participation_coef.size(); ++j)
      eta += cfg.participation_coef[j] * row.x[j];
    std::bernoulli_distribution s_draw(expit(eta));
    row.s = s_draw(rng) ? 1 : 0;

    // treatment and outcome realized only in the trial; the injected bias
    // shifts participants' conditional means
    if (row.s == 1) {
      std::bernoulli_distribution a_draw(cfg.treatment_prob);
      int a = a_draw(rng) ? 1 : 0;
      double mean = linear_mean(cfg.outcome[a], row.x) +
                    eval_u(cfg.true_bias, a, row.x, mod);
      row.a = a;
      row.y = mean + noise(rng);
    }
    rows.push_back(std::move(row));
  }
  return dataset_from_rows(std::move(rows), cfg.design, names);
}

TrueValues true_values(const DgpConfig& cfg, std::size_t draws, std::uint64_t oracle_seed) {
  check_config(cfg);
  auto names = covariate_names(cfg);
  const int mod = resolve_modulation(cfg.true_bias, names);

  std::mt19937_64 rng = make_rng(oracle_seed, 2);

  // accumulate E[f(X)] terms for the ratio estimands; s0 terms weight by
  // 1 - Pr[S=1|X]
  double sum_q = 0.0, sum_q2 = 0.0;
  double sum_m_q[2] = {0, 0}, sum_m2_q[2] = {0, 0};
  double sum_m[2] = {0, 0}, sum_m2[2] = {0, 0};
  double sum_u_pi[2] = {0, 0};
  double sum_u_q[2] = {0, 0};
  double cross_mq_q[2] = {0, 0};  // for the ratio delta-method SE

  std::vector<double> x(cfg.covariates.size());
  for (std::size_t i = 0; i < draws; ++i) {
    for (std::size_t j = 0; j < cfg.covariates.size(); ++j)
      x[j] = draw_covariate(cfg.covariates[j], rng);
    double eta = cfg.participation_intercept;
    for (std::size_t j = 0; j < cfg.participation_coef.size(); ++j)
      eta += cfg.participation_coef[j] * x[j];
    const double pi = expit(eta);
    const double q = 1.0 - pi;
    sum_q += q;
    sum_q2 += q * q;
    for (int arm : {0, 1}) {
      double m = linear_mean(cfg.outcome[arm], x);
      double u = eval_u(cfg.true_bias, arm, x, mod);
      sum_m[arm] += m;
      sum_m2[arm] += m * m;
      sum_m_q[arm] += m * q;
      sum_m2_q[arm] += m * m * q * q;
      cross_mq_q[arm] += m * q * q;
      sum_u_pi[arm] += u * pi;
      sum_u_q[arm] += u * q;
    }
  }

  const double nd = static_cast<double>(draws);
  TrueValues truth;
  truth.draws = draws;
  const double mean_q = sum_q / nd;
  if (mean_q <= 0.0) fail_numeric(kComponent, "Pr[S=0] is numerically zero");

  for (int arm : {0, 1}) {
    // E[Y^a | S=0] = E[m_a(X) (1-pi)] / E[1-pi]
    const double num = sum_m_q[arm] / nd;
    truth.mean_s0[arm] = num / mean_q;
    // E[Y^a] = E[m_a(X)] + E[u*(a,X) pi(X)]
    truth.mean_pop[arm] = sum_m[arm] / nd + sum_u_pi[arm] / nd;
    truth.bias_gap_s0[arm] = (sum_u_q[arm] / nd) / mean_q;
    truth.bias_gap_pop[arm] = sum_u_q[arm] / nd;

    // delta-method MC SE for the ratio num/mean_q
    const double var_num = sum_m2_q[arm] / nd - num * num;
    const double var_den = sum_q2 / nd - mean_q * mean_q;
    const double cov_nd = cross_mq_q[arm] / nd - num * mean_q;
    const double r = truth.mean_s0[arm];
    double var_ratio =
        (var_num - 2.0 * r * cov_nd + r * r * var_den) / (mean_q * mean_q);
    truth.mc_se_s0[arm] = std::sqrt(std::max(0.0, var_ratio) / nd);

    double var_pop = sum_m2[arm] / nd - (sum_m[arm] / nd) * (sum_m[arm] / nd);
    truth.mc_se_pop[arm] = std::sqrt(std::max(0.0, var_pop) / nd);
  }
  truth.ate_s0 = truth.mean_s0[1] - truth.mean_s0[0];
  truth.ate_pop = truth.mean_pop[1] - truth.mean_pop[0];
  return truth;
}

}  // namespace transport
