#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "transport/dataset.hpp"

namespace transport {

enum class GlmFamily { Logistic, Linear };

// Intercept plus main effects plus optional pairwise interactions.
struct DesignSpec {
  std::vector<std::string> covariates;
  std::vector<std::pair<std::string, std::string>> interactions;
};

// A DesignSpec resolved against a dataset's covariate layout.
struct ResolvedDesign {
  std::vector<int> main_terms;
  std::vector<std::pair<int, int>> interaction_terms;
  std::vector<std::string> term_names;  // "(Intercept)" first

  std::size_t dim() const { return 1 + main_terms.size() + interaction_terms.size(); }
  void fill_row(std::span<const double> x, double* out) const;
  Eigen::RowVectorXd row(std::span<const double> x) const;
};

ResolvedDesign resolve_design(const DesignSpec& spec,
                              const std::vector<std::string>& covariate_names);

struct Convergence {
  int iterations = 0;
  double final_change = 0.0;
  bool ridge_used = false;
};

struct FittedGlm {
  GlmFamily family = GlmFamily::Linear;
  Eigen::VectorXd coefficients;  // intercept first
  // Present when the fit was built from a dataset via fit_nuisance; raw
  // matrix fits leave it empty and predict() then takes the design row
  // without its leading 1.
  std::optional<ResolvedDesign> design;
  Convergence convergence;

  double linear_predictor(std::span<const double> x) const;
};

struct FixedProbability {
  double value = 0.5;
};

double expit(double eta);

double predict(const FittedGlm& model, std::span<const double> x);
double predict(const FixedProbability& model, std::span<const double> x);

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares. X carries the intercept column explicitly. Throws on rank
// deficiency, perfect separation, and non-convergence.
FittedGlm fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                       const std::vector<std::string>& column_names = {});

// Weighted least squares through a column-pivoted QR decomposition.
FittedGlm fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::optional<Eigen::VectorXd>& weights = std::nullopt,
                     const std::vector<std::string>& column_names = {});

struct ModelSpec {
  DesignSpec participation;
  DesignSpec treatment;
  // When set, the treatment mechanism is taken as known and no model is fit.
  std::optional<double> fixed_treatment_probability;
  DesignSpec outcome;

  static ModelSpec main_effects(const std::vector<std::string>& covariates);
  static ModelSpec intercept_only();
};

// The three nuisance model roles: participation fitted on all rows,
// treatment on s=1 rows (unless fixed), one outcome model per arm on
// s=1, A=a rows.
class NuisanceModels {
 public:
  FittedGlm participation;
  std::variant<FittedGlm, FixedProbability> treatment = FixedProbability{0.5};
  std::array<FittedGlm, 2> outcome_by_arm{};
  ModelSpec spec;  // retained so bootstrap replicates can refit
  std::vector<std::string> warnings;

  double participation_prob(const Row& r) const;       // p(X)
  double treatment_prob(const Row& r, int arm) const;  // e_a(X)
  double outcome_mean(const Row& r, int arm) const;    // g_a(X)
  bool treatment_is_fixed() const {
    return std::holds_alternative<FixedProbability>(treatment);
  }
};

NuisanceModels fit_nuisance(const StudyDataset& ds, const ModelSpec& spec);

}  // namespace transport
