#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace transport {

// Piecewise-constant multiplier m(x) keyed on a single covariate: an exact
// value match picks its multiplier, anything else gets `otherwise`.
struct Modulation {
  std::string covariate;
  std::vector<std::pair<double, double>> multipliers;  // value -> multiplier
  double otherwise = 1.0;
};

// Sensitivity-analysis bias functions in outcome units:
//   u(0,x) = m(x) * u0,  u(1,x) = m(x) * (u0 + delta),
// so that u(1,x) - u(0,x) = m(x) * delta identically.
struct BiasFunctionSpec {
  double u0 = 0.0;
  double delta = 0.0;
  std::optional<Modulation> modulation;

  bool is_zero() const { return u0 == 0.0 && delta == 0.0; }
  bool is_constant() const { return !modulation.has_value(); }
};

// Resolves the modulation covariate to an index; -1 when unmodulated.
// Throws when the named covariate is absent.
int resolve_modulation(const BiasFunctionSpec& spec,
                       const std::vector<std::string>& covariate_names);

double modulation_multiplier(const BiasFunctionSpec& spec, std::span<const double> x,
                             int mod_index);

double eval_u(const BiasFunctionSpec& spec, int arm, std::span<const double> x,
              int mod_index);
double eval_u(const BiasFunctionSpec& spec, int arm, std::span<const double> x,
              const std::vector<std::string>& covariate_names);

double eval_delta(const BiasFunctionSpec& spec, std::span<const double> x, int mod_index);
double eval_delta(const BiasFunctionSpec& spec, std::span<const double> x,
                  const std::vector<std::string>& covariate_names);

// Cartesian product, u0 outer and delta inner; every cell shares the
// modulation rule.
std::vector<BiasFunctionSpec> make_grid(const std::vector<double>& u0_values,
                                        const std::vector<double>& delta_values,
                                        const std::optional<Modulation>& modulation = {});

}  // namespace transport
