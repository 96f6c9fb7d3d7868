#include "transport/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "transport/error.hpp"

namespace transport {

namespace {

constexpr const char* kComponent = "glm";
constexpr int kMaxIterations = 100;
constexpr double kDevianceTol = 1e-10;
constexpr double kScoreTol = 1e-9;
constexpr double kRidge = 1e-8;

std::string column_label(const std::vector<std::string>& names, Eigen::Index j) {
  if (j < static_cast<Eigen::Index>(names.size())) return names[j];
  return "column " + std::to_string(j);
}

// Columns at or beyond the numerical rank, identified through the pivoting
// permutation.
std::string collinear_columns(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr,
                              const std::vector<std::string>& names) {
  std::ostringstream out;
  const auto& perm = qr.colsPermutation().indices();
  bool first = true;
  for (Eigen::Index k = qr.rank(); k < perm.size(); ++k) {
    if (!first) out << ", ";
    out << column_label(names, perm(k));
    first = false;
  }
  return out.str();
}

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  if (X.rows() < X.cols())
    fail_numeric(kComponent, "fewer rows (" + std::to_string(X.rows()) + ") than columns (" +
                                 std::to_string(X.cols()) + ")");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    fail_numeric(kComponent, "rank-deficient design; collinear columns: " +
                                 collinear_columns(qr, names));
}

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w(i) == 0.0) continue;
    double m = std::clamp(mu(i), 1e-300, 1.0 - 1e-16);
    dev += -2.0 * w(i) * (y(i) == 1.0 ? std::log(m) : std::log1p(-m));
  }
  return dev;
}

}  // namespace

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

ResolvedDesign resolve_design(const DesignSpec& spec,
                              const std::vector<std::string>& covariate_names) {
  ResolvedDesign design;
  design.term_names.push_back("(Intercept)");
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < covariate_names.size(); ++i)
      if (covariate_names[i] == name) return static_cast<int>(i);
    fail_config(kComponent, "unknown covariate '" + name + "'");
  };
  for (const auto& name : spec.covariates) {
    design.main_terms.push_back(index_of(name));
    design.term_names.push_back(name);
  }
  for (const auto& [lhs, rhs] : spec.interactions) {
    design.interaction_terms.emplace_back(index_of(lhs), index_of(rhs));
    design.term_names.push_back(lhs + ":" + rhs);
  }
  return design;
}

void ResolvedDesign::fill_row(std::span<const double> x, double* out) const {
  out[0] = 1.0;
  std::size_t k = 1;
  for (int idx : main_terms) out[k++] = x[static_cast<std::size_t>(idx)];
  for (const auto& [i, j] : interaction_terms)
    out[k++] = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
}

Eigen::RowVectorXd ResolvedDesign::row(std::span<const double> x) const {
  Eigen::RowVectorXd out(dim());
  fill_row(x, out.data());
  return out;
}

double FittedGlm::linear_predictor(std::span<const double> x) const {
  if (design) {
    if (x.size() < design->main_terms.size())
      fail_config(kComponent, "covariate vector shorter than the model design");
    Eigen::RowVectorXd row = design->row(x);
    return row.dot(coefficients);
  }
  if (static_cast<Eigen::Index>(x.size()) + 1 != coefficients.size())
    fail_config(kComponent, "dimension mismatch: got " + std::to_string(x.size()) +
                                " covariates for " + std::to_string(coefficients.size() - 1) +
                                " design terms");
  double eta = coefficients(0);
  for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients(static_cast<Eigen::Index>(j) + 1) * x[j];
  return eta;
}

double predict(const FittedGlm& model, std::span<const double> x) {
  double eta = model.linear_predictor(x);
  return model.family == GlmFamily::Logistic ? expit(eta) : eta;
}

double predict(const FixedProbability& model, std::span<const double>) { return model.value; }

FittedGlm fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const std::optional<Eigen::VectorXd>& weights,
                       const std::vector<std::string>& column_names) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (y.size() != n) fail_config(kComponent, "rows(X) != |y|");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y(i) != 0.0 && y(i) != 1.0)
      fail_data(kComponent, "logistic response must be 0/1");

  Eigen::VectorXd w = weights.value_or(Eigen::VectorXd::Ones(n));
  if (w.size() != n) fail_config(kComponent, "weight vector length mismatch");
  if ((w.array() < 0.0).any()) fail_config(kComponent, "negative weights");
  if (w.sum() <= 0.0) fail_config(kComponent, "weights sum to zero");

  check_rank(X, column_names);

  FittedGlm fit;
  fit.family = GlmFamily::Logistic;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mu = eta.unaryExpr([](double e) { return expit(e); });
  double dev_old = binomial_deviance(y, mu, w);
  bool ridge_used = false;
  // one extra Newton step after the stopping rule fires pushes the
  // coefficients from ~1e-12 to machine precision
  bool polishing = false;

  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    // working response and weights
    Eigen::VectorXd irls_w(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double m = std::clamp(mu(i), 1e-12, 1.0 - 1e-12);
      double v = m * (1.0 - m);
      irls_w(i) = w(i) * v;
      z(i) = eta(i) + (y(i) - m) / v;
    }
    Eigen::VectorXd sw = irls_w.array().sqrt();
    Eigen::MatrixXd Xw = sw.asDiagonal() * X;
    Eigen::VectorXd zw = sw.asDiagonal() * z;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> wqr(Xw);
    Eigen::VectorXd beta_new;
    if (wqr.rank() == p) beta_new = wqr.solve(zw);
    if (wqr.rank() < p || !beta_new.allFinite()) {
      // last-resort ridge retry on the normal equations
      Eigen::MatrixXd xtx = Xw.transpose() * Xw;
      xtx.diagonal().array() += kRidge;
      beta_new = xtx.ldlt().solve(Xw.transpose() * zw);
      ridge_used = true;
      if (!beta_new.allFinite())
        fail_numeric(kComponent, "singular IRLS update; ridge retry failed");
    }

    Eigen::VectorXd eta_new = X * beta_new;
    Eigen::VectorXd mu_new = eta_new.unaryExpr([](double e) { return expit(e); });
    double dev_new = binomial_deviance(y, mu_new, w);

    // step-halving keeps the deviance monotone (up to roundoff)
    const double slack = 1e-9 * (std::abs(dev_old) + 1.0);
    for (int half = 0; half < 30 && !(dev_new <= dev_old + slack); ++half) {
      beta_new = 0.5 * (beta + beta_new);
      eta_new = X * beta_new;
      mu_new = eta_new.unaryExpr([](double e) { return expit(e); });
      dev_new = binomial_deviance(y, mu_new, w);
    }

    double step = (beta_new - beta).lpNorm<Eigen::Infinity>();
    beta = beta_new;
    eta = eta_new;
    mu = mu_new;

    double max_abs_eta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (w(i) > 0.0) max_abs_eta = std::max(max_abs_eta, std::abs(eta(i)));

    Eigen::VectorXd score = X.transpose() * (w.array() * (y - mu).array()).matrix();
    double score_norm = score.lpNorm<Eigen::Infinity>();
    double dev_change = std::abs(dev_new - dev_old);
    dev_old = dev_new;

    const bool plateau = dev_change < kDevianceTol;
    if (max_abs_eta > 30.0 || (plateau && step > 1e-3)) {
      // the iterates are marching to infinity: the MLE does not exist
      Eigen::Index worst = 0;
      beta.cwiseAbs().maxCoeff(&worst);
      fail_numeric(kComponent,
                   "perfect separation detected in direction " +
                       column_label(column_names, worst));
    }
    if (polishing) {
      fit.convergence = {iter, dev_change, ridge_used};
      fit.coefficients = beta;
      return fit;
    }
    polishing = plateau && score_norm < kScoreTol;
  }
  if (polishing) {
    fit.convergence = {kMaxIterations, 0.0, ridge_used};
    fit.coefficients = beta;
    return fit;
  }
  fail_numeric(kComponent, "IRLS did not converge in " + std::to_string(kMaxIterations) +
                               " iterations");
}

FittedGlm fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::optional<Eigen::VectorXd>& weights,
                     const std::vector<std::string>& column_names) {
  const Eigen::Index n = X.rows();
  if (y.size() != n) fail_config(kComponent, "rows(X) != |y|");

  Eigen::VectorXd w = weights.value_or(Eigen::VectorXd::Ones(n));
  if (w.size() != n) fail_config(kComponent, "weight vector length mismatch");
  if ((w.array() < 0.0).any()) fail_config(kComponent, "negative weights");
  if (w.sum() <= 0.0) fail_config(kComponent, "weights sum to zero");

  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  Eigen::VectorXd yw = sw.asDiagonal() * y;

  if (X.rows() < X.cols())
    fail_numeric(kComponent, "fewer rows (" + std::to_string(X.rows()) + ") than columns (" +
                                 std::to_string(X.cols()) + ")");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  if (qr.rank() < X.cols())
    fail_numeric(kComponent, "rank-deficient design; collinear columns: " +
                                 collinear_columns(qr, column_names));

  FittedGlm fit;
  fit.family = GlmFamily::Linear;
  fit.coefficients = qr.solve(yw);
  fit.convergence = {1, 0.0, false};
  return fit;
}

ModelSpec ModelSpec::main_effects(const std::vector<std::string>& covariates) {
  ModelSpec spec;
  spec.participation.covariates = covariates;
  spec.treatment.covariates = covariates;
  spec.outcome.covariates = covariates;
  return spec;
}

ModelSpec ModelSpec::intercept_only() { return ModelSpec{}; }

namespace {

Eigen::MatrixXd design_matrix(const StudyDataset& ds, const ResolvedDesign& design,
                              const std::vector<std::size_t>& row_idx) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(row_idx.size()),
                    static_cast<Eigen::Index>(design.dim()));
  for (std::size_t r = 0; r < row_idx.size(); ++r)
    design.fill_row(ds.rows[row_idx[r]].x, X.row(static_cast<Eigen::Index>(r)).data());
  return X;
}

bool looks_binary(const std::vector<double>& values) {
  for (double v : values)
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

}  // namespace

double NuisanceModels::participation_prob(const Row& r) const {
  return predict(participation, r.x);
}

double NuisanceModels::treatment_prob(const Row& r, int arm) const {
  double e1 = std::holds_alternative<FixedProbability>(treatment)
                  ? std::get<FixedProbability>(treatment).value
                  : predict(std::get<FittedGlm>(treatment), r.x);
  return arm == 1 ? e1 : 1.0 - e1;
}

double NuisanceModels::outcome_mean(const Row& r, int arm) const {
  return predict(outcome_by_arm[static_cast<std::size_t>(arm)], r.x);
}

NuisanceModels fit_nuisance(const StudyDataset& ds, const ModelSpec& spec) {
  NuisanceModels nm;
  nm.spec = spec;

  std::vector<std::size_t> all_rows, trial_rows, arm_rows[2];
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    all_rows.push_back(i);
    if (ds.rows[i].s == 1) {
      trial_rows.push_back(i);
      arm_rows[static_cast<std::size_t>(*ds.rows[i].a)].push_back(i);
    }
  }
  if (trial_rows.empty()) fail_data(kComponent, "no s=1 rows to fit trial models on");

  auto fit_role = [&](const char* role, const DesignSpec& d, GlmFamily family,
                      const std::vector<std::size_t>& idx,
                      auto value_of) -> FittedGlm {
    ResolvedDesign design = resolve_design(d, ds.covariate_names);
    Eigen::MatrixXd X = design_matrix(ds, design, idx);
    Eigen::VectorXd y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r)
      y(static_cast<Eigen::Index>(r)) = value_of(ds.rows[idx[r]]);
    try {
      FittedGlm fit = family == GlmFamily::Logistic
                          ? fit_logistic(X, y, std::nullopt, design.term_names)
                          : fit_linear(X, y, std::nullopt, design.term_names);
      fit.design = design;
      return fit;
    } catch (const Error& e) {
      throw Error(e.kind(), e.component(),
                  std::string(role) + " model: " + std::string(e.what()).substr(
                                          e.component().size() + 2));
    }
  };

  nm.participation = fit_role("participation", spec.participation, GlmFamily::Logistic,
                              all_rows, [](const Row& r) { return double(r.s); });

  if (spec.fixed_treatment_probability) {
    double q = *spec.fixed_treatment_probability;
    if (!(q > 0.0 && q < 1.0))
      fail_config(kComponent, "fixed treatment probability must lie in (0,1)");
    nm.treatment = FixedProbability{q};
  } else {
    nm.treatment = fit_role("treatment", spec.treatment, GlmFamily::Logistic, trial_rows,
                            [](const Row& r) { return double(*r.a); });
  }

  std::vector<double> trial_y;
  for (std::size_t i : trial_rows) trial_y.push_back(*ds.rows[i].y);
  if (looks_binary(trial_y))
    nm.warnings.push_back(
        "outcome takes only 0/1 values; the additive bias corrections here are "
        "intended for continuous outcomes with unbounded support");

  for (int arm : {0, 1}) {
    if (arm_rows[static_cast<std::size_t>(arm)].empty())
      fail_data(kComponent, "no s=1 rows with a=" + std::to_string(arm));
    nm.outcome_by_arm[static_cast<std::size_t>(arm)] =
        fit_role(arm == 1 ? "outcome (a=1)" : "outcome (a=0)", spec.outcome,
                 GlmFamily::Linear, arm_rows[static_cast<std::size_t>(arm)],
                 [](const Row& r) { return *r.y; });
  }
  return nm;
}

}  // namespace transport
