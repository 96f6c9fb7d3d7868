#include "transport/bias.hpp"

#include "transport/error.hpp"

namespace transport {

namespace {
constexpr const char* kComponent = "bias";
}

int resolve_modulation(const BiasFunctionSpec& spec,
                       const std::vector<std::string>& covariate_names) {
  if (!spec.modulation) return -1;
  for (std::size_t i = 0; i < covariate_names.size(); ++i)
    if (covariate_names[i] == spec.modulation->covariate) return static_cast<int>(i);
  fail_config(kComponent, "modulation covariate '" + spec.modulation->covariate +
                              "' is not a dataset covariate");
}

double modulation_multiplier(const BiasFunctionSpec& spec, std::span<const double> x,
                             int mod_index) {
  if (!spec.modulation || mod_index < 0) return 1.0;
  if (static_cast<std::size_t>(mod_index) >= x.size())
    fail_config(kComponent, "covariate vector too short for the modulation rule");
  double value = x[static_cast<std::size_t>(mod_index)];
  for (const auto& [level, multiplier] : spec.modulation->multipliers)
    if (value == level) return multiplier;
  return spec.modulation->otherwise;
}

double eval_u(const BiasFunctionSpec& spec, int arm, std::span<const double> x,
              int mod_index) {
  double m = modulation_multiplier(spec, x, mod_index);
  return arm == 1 ? m * (spec.u0 + spec.delta) : m * spec.u0;
}

double eval_u(const BiasFunctionSpec& spec, int arm, std::span<const double> x,
              const std::vector<std::string>& covariate_names) {
  return eval_u(spec, arm, x, resolve_modulation(spec, covariate_names));
}

double eval_delta(const BiasFunctionSpec& spec, std::span<const double> x, int mod_index) {
  return eval_u(spec, 1, x, mod_index) - eval_u(spec, 0, x, mod_index);
}

double eval_delta(const BiasFunctionSpec& spec, std::span<const double> x,
                  const std::vector<std::string>& covariate_names) {
  return eval_delta(spec, x, resolve_modulation(spec, covariate_names));
}

std::vector<BiasFunctionSpec> make_grid(const std::vector<double>& u0_values,
                                        const std::vector<double>& delta_values,
                                        const std::optional<Modulation>& modulation) {
  if (u0_values.empty()) fail_config(kComponent, "empty u0 list");
  if (delta_values.empty()) fail_config(kComponent, "empty delta list");
  std::vector<BiasFunctionSpec> grid;
  grid.reserve(u0_values.size() * delta_values.size());
  for (double u0 : u0_values)
    for (double delta : delta_values) grid.push_back({u0, delta, modulation});
  return grid;
}

}  // namespace transport
