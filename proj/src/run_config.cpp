#include "transport/run_config.hpp"

#include <fstream>

#include "transport/error.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "cli";

using nlohmann::json;

std::vector<std::string> string_list(const json& j, const std::string& what) {
  if (!j.is_array()) fail_config(kComponent, what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) fail_config(kComponent, what + " must contain strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::vector<double> number_list(const json& j, const std::string& what) {
  if (!j.is_array()) fail_config(kComponent, what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : j) {
    if (!item.is_number()) fail_config(kComponent, what + " must contain numbers");
    out.push_back(item.get<double>());
  }
  if (out.empty()) fail_config(kComponent, what + " must not be empty");
  return out;
}

std::vector<std::pair<std::string, std::string>> pair_list(const json& j,
                                                           const std::string& what) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!j.is_array()) fail_config(kComponent, what + " must be an array of 2-element arrays");
  for (const auto& item : j) {
    if (!item.is_array() || item.size() != 2)
      fail_config(kComponent, what + " entries must be [lhs, rhs] pairs");
    out.emplace_back(item[0].get<std::string>(), item[1].get<std::string>());
  }
  return out;
}

Modulation parse_modulation(const json& j) {
  Modulation mod;
  if (!j.contains("covariate"))
    fail_config(kComponent, "bias.modulation needs a covariate name");
  mod.covariate = j.at("covariate").get<std::string>();
  if (j.contains("multipliers")) {
    for (const auto& item : j.at("multipliers")) {
      if (!item.is_array() || item.size() != 2)
        fail_config(kComponent, "modulation multipliers must be [level, multiplier] pairs");
      mod.multipliers.emplace_back(item[0].get<double>(), item[1].get<double>());
    }
  }
  if (j.contains("default")) mod.otherwise = j.at("default").get<double>();
  return mod;
}

DgpConfig parse_dgp(const json& j) {
  DgpConfig dgp;
  dgp.n = j.at("n").get<std::size_t>();
  if (j.contains("seed")) dgp.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("design"))
    dgp.design = j.at("design").get<std::string>() == "nested" ? Design::Nested
                                                               : Design::NonNested;
  for (const auto& c : j.at("covariates")) {
    CovariateDist dist;
    dist.name = c.at("name").get<std::string>();
    std::string kind = c.value("dist", "normal");
    if (kind == "normal") {
      dist.kind = CovariateDist::Kind::Normal;
      dist.mean = c.value("mean", 0.0);
      dist.sd = c.value("sd", 1.0);
    } else if (kind == "bernoulli") {
      dist.kind = CovariateDist::Kind::Bernoulli;
      dist.p = c.value("p", 0.5);
    } else {
      fail_config(kComponent, "unknown covariate distribution '" + kind + "'");
    }
    dgp.covariates.push_back(dist);
  }
  const auto& part = j.at("participation");
  dgp.participation_intercept = part.value("intercept", 0.0);
  if (part.contains("coef"))
    dgp.participation_coef = number_list(part.at("coef"), "participation.coef");
  else
    dgp.participation_coef.assign(dgp.covariates.size(), 0.0);
  dgp.treatment_prob = j.value("treatment_probability", 0.5);
  const auto& outcome = j.at("outcome");
  for (int arm : {0, 1}) {
    const auto& rule = outcome.at(arm == 1 ? "a1" : "a0");
    dgp.outcome[arm].intercept = rule.value("intercept", 0.0);
    if (rule.contains("coef"))
      dgp.outcome[arm].coef = number_list(rule.at("coef"), "outcome coef");
    else
      dgp.outcome[arm].coef.assign(dgp.covariates.size(), 0.0);
  }
  dgp.noise_sd = outcome.value("noise_sd", 1.0);
  if (j.contains("bias") && !j.at("bias").is_null()) {
    const auto& b = j.at("bias");
    dgp.true_bias.u0 = b.value("u0", 0.0);
    dgp.true_bias.delta = b.value("delta", 0.0);
    if (b.contains("modulation") && !b.at("modulation").is_null())
      dgp.true_bias.modulation = parse_modulation(b.at("modulation"));
  }
  return dgp;
}

}  // namespace

RunConfig parse_config_json(const json& j) {
  RunConfig cfg;
  if (j.contains("design")) {
    std::string d = j.at("design").get<std::string>();
    if (d == "non_nested") cfg.design = Design::NonNested;
    else if (d == "nested") cfg.design = Design::Nested;
    else fail_config(kComponent, "design must be 'non_nested' or 'nested'");
  }
  if (j.contains("target")) {
    std::string t = j.at("target").get<std::string>();
    if (t == "non_randomized") cfg.target = TargetPopulation::NonRandomized;
    else if (t == "whole_population") cfg.target = TargetPopulation::WholePopulation;
    else fail_config(kComponent, "target must be 'non_randomized' or 'whole_population'");
  }
  if (cfg.target == TargetPopulation::WholePopulation && cfg.design == Design::NonNested)
    fail_config(kComponent,
                "whole-population target requires a nested design; the non-nested design "
                "identifies only the S=0 estimand");

  if (j.contains("data")) {
    const auto& data = j.at("data");
    cfg.data_path = data.value("path", "");
    if (data.contains("schema")) {
      const auto& schema = data.at("schema");
      cfg.schema.s_column = schema.value("s", "s");
      cfg.schema.a_column = schema.value("a", "a");
      cfg.schema.y_column = schema.value("y", "y");
    }
    if (data.contains("covariates"))
      cfg.schema.covariates = string_list(data.at("covariates"), "data.covariates");
    if (data.contains("exclude"))
      cfg.schema.exclude = string_list(data.at("exclude"), "data.exclude");
    if (data.contains("one_hot"))
      cfg.schema.one_hot = string_list(data.at("one_hot"), "data.one_hot");
    if (data.contains("delimiter")) {
      std::string d = data.at("delimiter").get<std::string>();
      if (d.size() != 1) fail_config(kComponent, "delimiter must be one character");
      cfg.schema.delimiter = d[0];
    }
  }

  if (j.contains("models")) {
    const auto& models = j.at("models");
    if (models.contains("participation"))
      cfg.participation_covariates = string_list(models.at("participation"), "models.participation");
    if (models.contains("treatment"))
      cfg.treatment_covariates = string_list(models.at("treatment"), "models.treatment");
    if (models.contains("outcome"))
      cfg.outcome_covariates = string_list(models.at("outcome"), "models.outcome");
    if (models.contains("treatment_probability") &&
        !models.at("treatment_probability").is_null())
      cfg.fixed_treatment_probability = models.at("treatment_probability").get<double>();
    if (models.contains("interactions")) {
      const auto& inter = models.at("interactions");
      if (inter.contains("participation"))
        cfg.participation_interactions =
            pair_list(inter.at("participation"), "interactions.participation");
      if (inter.contains("treatment"))
        cfg.treatment_interactions = pair_list(inter.at("treatment"), "interactions.treatment");
      if (inter.contains("outcome"))
        cfg.outcome_interactions = pair_list(inter.at("outcome"), "interactions.outcome");
    }
  }

  if (j.contains("estimators"))
    for (const auto& name : j.at("estimators"))
      cfg.estimators.push_back(estimator_from_string(name.get<std::string>()));

  if (j.contains("bias") && !j.at("bias").is_null()) {
    const auto& bias = j.at("bias");
    if (bias.contains("u0")) cfg.u0_values = number_list(bias.at("u0"), "bias.u0");
    if (bias.contains("delta")) cfg.delta_values = number_list(bias.at("delta"), "bias.delta");
    if (bias.contains("modulation") && !bias.at("modulation").is_null())
      cfg.modulation = parse_modulation(bias.at("modulation"));
  }

  if (j.contains("inference")) {
    const auto& inf = j.at("inference");
    if (inf.contains("method"))
      cfg.inference.method = inference_method_from_string(inf.at("method").get<std::string>());
    cfg.inference.level = inf.value("level", 0.95);
    if (!(cfg.inference.level > 0.0 && cfg.inference.level < 1.0))
      fail_config(kComponent, "inference.level must lie in (0,1)");
    cfg.inference.replicates = inf.value("replicates", 500);
    cfg.inference.seed = inf.value("seed", std::uint64_t{0});
    if (inf.contains("stratify_by_s") && !inf.at("stratify_by_s").is_null())
      cfg.inference.stratify_by_s = inf.at("stratify_by_s").get<bool>();
    cfg.inference.nuisance_fixed = inf.value("nuisance_fixed", false);
    cfg.inference.parallel = inf.value("parallel", true);
  }

  if (j.contains("options")) {
    const auto& opts = j.at("options");
    if (opts.contains("weight_truncation_quantile") &&
        !opts.at("weight_truncation_quantile").is_null())
      cfg.options.weight_truncation_quantile =
          opts.at("weight_truncation_quantile").get<double>();
    cfg.positivity_threshold = opts.value("positivity_threshold", 0.01);
    cfg.threads = opts.value("threads", 0);
  }

  if (j.contains("output")) {
    const auto& out = j.at("output");
    cfg.output.dir = out.value("dir", ".");
    cfg.output.basename = out.value("basename", "results");
    cfg.output.csv = out.value("csv", true);
    cfg.output.json = out.value("json", true);
    cfg.output.plot = out.value("plot", false);
  }

  if (j.contains("simulate")) cfg.simulate = parse_dgp(j.at("simulate"));
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_config(kComponent, "cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail_config(kComponent, "config JSON parse error: " + std::string(e.what()));
  }
  return parse_config_json(j);
}

std::vector<EstimatorId> resolve_estimators(const RunConfig& cfg) {
  std::vector<EstimatorId> estimators = cfg.estimators;
  if (estimators.empty()) {
    if (cfg.target == TargetPopulation::WholePopulation)
      estimators = {EstimatorId::OMPop, EstimatorId::IPW1, EstimatorId::IPW2,
                    EstimatorId::AIPW1, EstimatorId::AIPW2};
    else
      estimators = {EstimatorId::OM, EstimatorId::IOW1, EstimatorId::IOW2,
                    EstimatorId::AIOW1, EstimatorId::AIOW2};
  }
  for (EstimatorId id : estimators) {
    if (target_of(id) != cfg.target)
      fail_config(kComponent, "estimator " + to_string(id) + " does not target " +
                                  to_string(cfg.target));
    if (is_population_estimator(id) && cfg.design == Design::NonNested)
      fail_config(kComponent,
                  "whole-population estimators require a nested design; the non-nested "
                  "design identifies only the S=0 estimand");
  }
  return estimators;
}

ModelSpec resolve_models(const RunConfig& cfg, const StudyDataset& ds) {
  ModelSpec spec;
  auto defaulted = [&](const std::optional<std::vector<std::string>>& given) {
    return given.value_or(ds.covariate_names);
  };
  spec.participation.covariates = defaulted(cfg.participation_covariates);
  spec.participation.interactions = cfg.participation_interactions;
  spec.treatment.covariates = defaulted(cfg.treatment_covariates);
  spec.treatment.interactions = cfg.treatment_interactions;
  spec.outcome.covariates = defaulted(cfg.outcome_covariates);
  spec.outcome.interactions = cfg.outcome_interactions;
  spec.fixed_treatment_probability = cfg.fixed_treatment_probability;
  return spec;
}

}  // namespace transport
