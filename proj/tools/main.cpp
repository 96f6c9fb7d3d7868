#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "transport/commands.hpp"
#include "transport/error.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string data;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> bootstrap;
  std::optional<double> level;
  bool plot = false;
  std::optional<int> threads;
  bool serial = false;
};

void add_common(CLI::App* sub, Overrides& ov, bool config_required) {
  auto* c = sub->add_option("-c,--config", ov.config_path, "JSON config file");
  if (config_required) c->required();
  sub->add_option("--data", ov.data, "data CSV path (overrides config)");
  sub->add_option("--out", ov.out_dir, "output directory (overrides config)");
  sub->add_option("--seed", ov.seed, "RNG seed (overrides config)");
  sub->add_option("--bootstrap", ov.bootstrap,
                  "bootstrap replicate count; switches inference to bootstrap");
  sub->add_option("--level", ov.level, "confidence level, e.g. 0.95");
  sub->add_flag("--plot", ov.plot, "emit sensitivity-curve SVG files");
  sub->add_option("--threads", ov.threads, "worker thread count (0 = default)");
  sub->add_flag("--serial", ov.serial, "disable parallel evaluation");
}

transport::RunConfig build_config(const Overrides& ov) {
  transport::RunConfig cfg;
  if (!ov.config_path.empty()) cfg = transport::parse_config_file(ov.config_path);
  if (!ov.data.empty()) cfg.data_path = ov.data;
  if (!ov.out_dir.empty()) cfg.output.dir = ov.out_dir;
  if (ov.seed) {
    cfg.inference.seed = *ov.seed;
    if (cfg.simulate) cfg.simulate->seed = *ov.seed;
  }
  if (ov.bootstrap) {
    cfg.inference.method = transport::InferenceMethod::Bootstrap;
    cfg.inference.replicates = *ov.bootstrap;
  }
  if (ov.level) cfg.inference.level = *ov.level;
  if (ov.plot) cfg.output.plot = true;
  if (ov.threads) cfg.threads = *ov.threads;
  if (ov.serial) cfg.inference.parallel = false;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Extend randomized-trial causal estimates to a target population, with "
      "bias-function sensitivity analysis"};
  app.require_subcommand(1);

  Overrides ov;
  auto* estimate =
      app.add_subcommand("estimate", "base-case potential outcome means and ATE");
  add_common(estimate, ov, false);
  auto* sensitivity =
      app.add_subcommand("sensitivity", "estimators across a (u0, delta) bias grid");
  add_common(sensitivity, ov, false);
  auto* simulate =
      app.add_subcommand("simulate", "draw a synthetic dataset plus oracle truths");
  add_common(simulate, ov, true);
  auto* positivity =
      app.add_subcommand("check-positivity", "participation/treatment positivity report");
  add_common(positivity, ov, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    transport::RunConfig cfg = build_config(ov);
    if (estimate->parsed()) transport::cmd_estimate(cfg);
    else if (sensitivity->parsed()) transport::cmd_sensitivity(cfg);
    else if (simulate->parsed()) transport::cmd_simulate(cfg);
    else if (positivity->parsed()) transport::cmd_check_positivity(cfg);
    return 0;
  } catch (const transport::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == transport::ErrorKind::Numeric ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
