#include "transport/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <random>

#include "transport/error.hpp"
#include "transport/estimators.hpp"

namespace transport {

namespace {
constexpr const char* kComponent = "inference";
}

// Wichura's algorithm AS241 (PPND16).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    fail_config(kComponent, "quantile probability must lie in (0,1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) *
                    r +
                4.5921953931549871457e+4) *
                   r +
               1.3731693765509461125e+4) *
                  r +
              1.9715909503065514427e+3) *
                 r +
             1.3314166789178437745e+2) *
                r +
            3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) *
                    r +
                2.1213794301586595867e+4) *
                   r +
               5.3941960214247511077e+3) *
                  r +
              6.8718700749205790830e+2) *
                 r +
             4.2313330701600911252e+1) *
                r +
            1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) *
                     r +
                 1.27045825245236838258e+0) *
                    r +
                3.64784832476320460504e+0) *
                   r +
               5.76949722146069140550e+0) *
                  r +
              4.63033784615654529590e+0) *
                 r +
             1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) *
                     r +
                 1.48103976427480074590e-1) *
                    r +
                6.89767334985100004550e-1) *
                   r +
               1.67638483018380384940e+0) *
                  r +
              2.05319162663775882187e+0) *
                 r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) *
                     r +
                 2.65321895265761230930e-2) *
                    r +
                2.96560571828504891230e-1) *
                   r +
               1.78482653991729133580e+0) *
                  r +
              5.46378491116411436990e+0) *
                 r +
             6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) *
                     r +
                 7.86869131145613259100e-4) *
                    r +
                1.48753612908506148525e-2) *
                   r +
               1.36929880922735805310e-1) *
                  r +
              5.99832206555887937690e-1) *
                 r +
             1.0);
  }
  return q < 0.0 ? -value : value;
}

EstimatingSystem::EstimatingSystem(std::vector<BlockInfo> blocks, std::size_t n_rows,
                                   PsiFn psi)
    : blocks_(std::move(blocks)), n_rows_(n_rows), psi_(std::move(psi)) {
  for (const auto& b : blocks_) dim_ += b.size;
  if (dim_ <= 0) fail_config(kComponent, "estimating system has no parameters");
  if (n_rows_ == 0) fail_config(kComponent, "estimating system has no rows");
}

const BlockInfo* EstimatingSystem::find_block(const std::string& name) const {
  for (const auto& b : blocks_)
    if (b.name == name) return &b;
  return nullptr;
}

void EstimatingSystem::eval_row(std::size_t i, const Eigen::VectorXd& eta,
                                double* out) const {
  psi_(i, eta, out);
}

Eigen::VectorXd EstimatingSystem::average_psi(const Eigen::VectorXd& eta) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(dim_);
  Eigen::VectorXd row(dim_);
  for (std::size_t i = 0; i < n_rows_; ++i) {
    psi_(i, eta, row.data());
    total += row;
  }
  return total / static_cast<double>(n_rows_);
}

void EstimatingSystem::set_solution(Eigen::VectorXd eta, double tol) {
  if (eta.size() != dim_) fail_config(kComponent, "solution dimension mismatch");
  double norm = average_psi(eta).lpNorm<Eigen::Infinity>();
  if (!(norm <= tol))
    fail_numeric(kComponent, "candidate solution leaves estimating equations unsolved "
                             "(|avg psi| = " +
                                 std::to_string(norm) + ")");
  solution_ = std::move(eta);
  solved_ = true;
}

const Eigen::VectorXd& EstimatingSystem::solution() const {
  if (!solved_) fail_config(kComponent, "system not solved");
  return solution_;
}

double EstimatingSystem::value_of(const std::string& block, int component) const {
  const BlockInfo* b = find_block(block);
  if (b == nullptr) fail_config(kComponent, "unknown block '" + block + "'");
  if (component < 0 || component >= b->size)
    fail_config(kComponent, "component out of range for block '" + block + "'");
  return solution()(b->offset + component);
}

namespace {

Eigen::MatrixXd fd_jacobian(const EstimatingSystem& sys, const Eigen::VectorXd& eta,
                            double fd_step = 1e-6) {
  const int d = sys.dim();
  Eigen::MatrixXd jac(d, d);
  Eigen::VectorXd perturbed = eta;
  for (int j = 0; j < d; ++j) {
    const double h = fd_step * std::max(1.0, std::abs(eta(j)));
    perturbed(j) = eta(j) + h;
    Eigen::VectorXd plus = sys.average_psi(perturbed);
    perturbed(j) = eta(j) - h;
    Eigen::VectorXd minus = sys.average_psi(perturbed);
    perturbed(j) = eta(j);
    jac.col(j) = (plus - minus) / (2.0 * h);
  }
  return jac;
}

}  // namespace

void EstimatingSystem::solve_newton(Eigen::VectorXd init, int max_iter, double tol) {
  if (init.size() != dim_) fail_config(kComponent, "initial point dimension mismatch");
  Eigen::VectorXd eta = std::move(init);
  Eigen::VectorXd resid = average_psi(eta);
  for (int iter = 0; iter < max_iter; ++iter) {
    if (resid.lpNorm<Eigen::Infinity>() < tol) {
      set_solution(std::move(eta), std::max(tol, 1e-8));
      return;
    }
    Eigen::MatrixXd jac = fd_jacobian(*this, eta);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible())
      fail_numeric(kComponent, "singular Jacobian while solving the estimating equations");
    Eigen::VectorXd step = lu.solve(-resid);
    double scale = 1.0;
    for (int half = 0; half < 30; ++half) {
      Eigen::VectorXd candidate = eta + scale * step;
      Eigen::VectorXd cand_resid = average_psi(candidate);
      if (cand_resid.allFinite() &&
          cand_resid.lpNorm<Eigen::Infinity>() < resid.lpNorm<Eigen::Infinity>()) {
        eta = std::move(candidate);
        resid = std::move(cand_resid);
        break;
      }
      scale *= 0.5;
      if (half == 29)
        fail_numeric(kComponent, "Newton step failed to reduce the residual");
    }
  }
  if (resid.lpNorm<Eigen::Infinity>() < tol) {
    set_solution(std::move(eta), std::max(tol, 1e-8));
    return;
  }
  fail_numeric(kComponent, "estimating equations did not converge");
}

// ---------------------------------------------------------------------------
// Estimator system assembly

namespace {

struct SystemData {
  std::size_t n = 0;
  bool nested = false;
  bool include_nuisance = true;
  bool treatment_estimated = true;
  double fixed_e1 = 0.5;
  EstimatorId id = EstimatorId::AIOW2;
  int dim = 0;

  Eigen::MatrixXd xp, xt, xo;
  Eigen::VectorXd s, a1, a0, y, u1, u0;
  // fixed predictions, used when the nuisance blocks are not stacked
  Eigen::VectorXd p_fix, e1_fix, g1_fix, g0_fix;

  int off_beta = -1, off_gamma = -1, off_th1 = -1, off_th0 = -1;
  int off_nu1 = -1, off_nu0 = -1, off_aux1 = -1, off_aux0 = -1;
  int off_mu1 = -1, off_mu0 = -1, off_ate = -1;
  int dp = 0, dt = 0, dm = 0;
};

bool uses_hajek_pair(EstimatorId id) {
  switch (id) {
    case EstimatorId::IOW2:
    case EstimatorId::AIOW2:
    case EstimatorId::IPW2:
    case EstimatorId::AIPW2:
      return true;
    default:
      return false;
  }
}

void eval_system_row(const SystemData& d, std::size_t i, const Eigen::VectorXd& eta,
                     double* out) {
  std::fill(out, out + d.dim, 0.0);
  const double s = d.s(static_cast<Eigen::Index>(i));
  const double q = 1.0 - s;
  const double in1 = d.a1(static_cast<Eigen::Index>(i));
  const double in0 = d.a0(static_cast<Eigen::Index>(i));
  const double y = d.y(static_cast<Eigen::Index>(i));
  const double u1 = d.u1(static_cast<Eigen::Index>(i));
  const double u0 = d.u0(static_cast<Eigen::Index>(i));

  double p, e1, g1, g0;
  if (d.include_nuisance) {
    const auto xp = d.xp.row(static_cast<Eigen::Index>(i));
    p = expit(xp.dot(eta.segment(d.off_beta, d.dp)));
    for (int j = 0; j < d.dp; ++j) out[d.off_beta + j] = (s - p) * xp(j);

    if (d.treatment_estimated) {
      const auto xt = d.xt.row(static_cast<Eigen::Index>(i));
      e1 = expit(xt.dot(eta.segment(d.off_gamma, d.dt)));
      if (s == 1.0)
        for (int j = 0; j < d.dt; ++j) out[d.off_gamma + j] = (in1 - e1) * xt(j);
    } else {
      e1 = d.fixed_e1;
    }

    const auto xo = d.xo.row(static_cast<Eigen::Index>(i));
    g1 = xo.dot(eta.segment(d.off_th1, d.dm));
    g0 = xo.dot(eta.segment(d.off_th0, d.dm));
    if (in1 == 1.0)
      for (int j = 0; j < d.dm; ++j) out[d.off_th1 + j] = (y - g1) * xo(j);
    if (in0 == 1.0)
      for (int j = 0; j < d.dm; ++j) out[d.off_th0 + j] = (y - g0) * xo(j);
  } else {
    p = d.p_fix(static_cast<Eigen::Index>(i));
    e1 = d.e1_fix(static_cast<Eigen::Index>(i));
    g1 = d.g1_fix(static_cast<Eigen::Index>(i));
    g0 = d.g0_fix(static_cast<Eigen::Index>(i));
  }

  const double w1 = in1 == 1.0 ? (d.nested ? 1.0 / (p * e1) : (1.0 - p) / (p * e1)) : 0.0;
  const double w0 =
      in0 == 1.0 ? (d.nested ? 1.0 / (p * (1.0 - e1)) : (1.0 - p) / (p * (1.0 - e1))) : 0.0;

  const double mu1 = eta(d.off_mu1);
  const double mu0 = eta(d.off_mu0);

  switch (d.id) {
    case EstimatorId::OM:
      out[d.off_mu1] = q * (g1 - u1 - mu1);
      out[d.off_mu0] = q * (g0 - u0 - mu0);
      break;
    case EstimatorId::OMPop:
      out[d.off_mu1] = g1 - q * u1 - mu1;
      out[d.off_mu0] = g0 - q * u0 - mu0;
      break;
    case EstimatorId::IOW1:
      out[d.off_mu1] = w1 * y - q * u1 - q * mu1;
      out[d.off_mu0] = w0 * y - q * u0 - q * mu0;
      break;
    case EstimatorId::IPW1:
      out[d.off_mu1] = w1 * y - q * u1 - mu1;
      out[d.off_mu0] = w0 * y - q * u0 - mu0;
      break;
    case EstimatorId::IOW2:
      out[d.off_nu1] = w1 * (y - eta(d.off_nu1));
      out[d.off_nu0] = w0 * (y - eta(d.off_nu0));
      out[d.off_aux1] = q * (u1 - eta(d.off_aux1));
      out[d.off_aux0] = q * (u0 - eta(d.off_aux0));
      out[d.off_mu1] = eta(d.off_nu1) - eta(d.off_aux1) - mu1;
      out[d.off_mu0] = eta(d.off_nu0) - eta(d.off_aux0) - mu0;
      break;
    case EstimatorId::IPW2:
      out[d.off_nu1] = w1 * (y - eta(d.off_nu1));
      out[d.off_nu0] = w0 * (y - eta(d.off_nu0));
      out[d.off_aux1] = q * u1 - eta(d.off_aux1);
      out[d.off_aux0] = q * u0 - eta(d.off_aux0);
      out[d.off_mu1] = eta(d.off_nu1) - eta(d.off_aux1) - mu1;
      out[d.off_mu0] = eta(d.off_nu0) - eta(d.off_aux0) - mu0;
      break;
    case EstimatorId::AIOW1:
      out[d.off_mu1] = w1 * (y - g1) + q * (g1 - u1) - q * mu1;
      out[d.off_mu0] = w0 * (y - g0) + q * (g0 - u0) - q * mu0;
      break;
    case EstimatorId::AIPW1:
      out[d.off_mu1] = w1 * (y - g1) + g1 - q * u1 - mu1;
      out[d.off_mu0] = w0 * (y - g0) + g0 - q * u0 - mu0;
      break;
    case EstimatorId::AIOW2:
      out[d.off_nu1] = w1 * (y - g1 - eta(d.off_nu1));
      out[d.off_nu0] = w0 * (y - g0 - eta(d.off_nu0));
      out[d.off_aux1] = q * (g1 - u1 - eta(d.off_aux1));
      out[d.off_aux0] = q * (g0 - u0 - eta(d.off_aux0));
      out[d.off_mu1] = eta(d.off_nu1) + eta(d.off_aux1) - mu1;
      out[d.off_mu0] = eta(d.off_nu0) + eta(d.off_aux0) - mu0;
      break;
    case EstimatorId::AIPW2:
      out[d.off_nu1] = w1 * (y - g1 - eta(d.off_nu1));
      out[d.off_nu0] = w0 * (y - g0 - eta(d.off_nu0));
      out[d.off_aux1] = g1 - q * u1 - eta(d.off_aux1);
      out[d.off_aux0] = g0 - q * u0 - eta(d.off_aux0);
      out[d.off_mu1] = eta(d.off_nu1) + eta(d.off_aux1) - mu1;
      out[d.off_mu0] = eta(d.off_nu0) + eta(d.off_aux0) - mu0;
      break;
    case EstimatorId::BCOutcomeIOW:
      out[d.off_mu1] = w1 * (y - u1 - mu1);
      out[d.off_mu0] = w0 * (y - u0 - mu0);
      break;
    case EstimatorId::BCOutcomeIPW:
      out[d.off_mu1] = w1 * (y - u1 * (1.0 - p) - mu1);
      out[d.off_mu0] = w0 * (y - u0 * (1.0 - p) - mu0);
      break;
  }
  out[d.off_ate] = mu1 - mu0 - eta(d.off_ate);
}

}  // namespace

EstimatingSystem build_estimator_system(const StudyDataset& ds, const NuisanceModels& nm,
                                        EstimatorId id, const BiasFunctionSpec& bias,
                                        bool include_nuisance) {
  const bool nested = is_population_estimator(id);
  auto data = std::make_shared<SystemData>();
  data->n = ds.n();
  data->nested = nested;
  data->include_nuisance = include_nuisance;
  data->treatment_estimated = include_nuisance && !nm.treatment_is_fixed();
  if (nm.treatment_is_fixed()) data->fixed_e1 = std::get<FixedProbability>(nm.treatment).value;
  data->id = id;

  const Eigen::Index n = static_cast<Eigen::Index>(ds.n());
  data->s.resize(n);
  data->a1.resize(n);
  data->a0.resize(n);
  data->y.resize(n);
  data->u1.resize(n);
  data->u0.resize(n);
  const int mod = resolve_modulation(bias, ds.covariate_names);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& row = ds.rows[static_cast<std::size_t>(i)];
    data->s(i) = row.s;
    data->a1(i) = (row.s == 1 && *row.a == 1) ? 1.0 : 0.0;
    data->a0(i) = (row.s == 1 && *row.a == 0) ? 1.0 : 0.0;
    data->y(i) = row.y ? *row.y : 0.0;
    data->u1(i) = eval_u(bias, 1, row.x, mod);
    data->u0(i) = eval_u(bias, 0, row.x, mod);
  }

  std::vector<BlockInfo> blocks;
  int offset = 0;
  auto add_block = [&](const std::string& name, int size) {
    blocks.push_back({name, offset, size});
    int at = offset;
    offset += size;
    return at;
  };

  if (include_nuisance) {
    if (!nm.participation.design)
      fail_config(kComponent, "nuisance fits must come from fit_nuisance");
    const ResolvedDesign& pd = *nm.participation.design;
    data->dp = static_cast<int>(pd.dim());
    data->xp.resize(n, data->dp);
    for (Eigen::Index i = 0; i < n; ++i)
      pd.fill_row(ds.rows[static_cast<std::size_t>(i)].x, data->xp.row(i).data());
    data->off_beta = add_block("participation", data->dp);

    if (data->treatment_estimated) {
      const ResolvedDesign& td = *std::get<FittedGlm>(nm.treatment).design;
      data->dt = static_cast<int>(td.dim());
      data->xt.resize(n, data->dt);
      for (Eigen::Index i = 0; i < n; ++i)
        td.fill_row(ds.rows[static_cast<std::size_t>(i)].x, data->xt.row(i).data());
      data->off_gamma = add_block("treatment", data->dt);
    }

    const ResolvedDesign& od = *nm.outcome_by_arm[1].design;
    data->dm = static_cast<int>(od.dim());
    data->xo.resize(n, data->dm);
    for (Eigen::Index i = 0; i < n; ++i)
      od.fill_row(ds.rows[static_cast<std::size_t>(i)].x, data->xo.row(i).data());
    data->off_th1 = add_block("outcome1", data->dm);
    data->off_th0 = add_block("outcome0", data->dm);
  } else {
    data->p_fix.resize(n);
    data->e1_fix.resize(n);
    data->g1_fix.resize(n);
    data->g0_fix.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Row& row = ds.rows[static_cast<std::size_t>(i)];
      data->p_fix(i) = nm.participation_prob(row);
      data->e1_fix(i) = nm.treatment_prob(row, 1);
      data->g1_fix(i) = nm.outcome_mean(row, 1);
      data->g0_fix(i) = nm.outcome_mean(row, 0);
    }
  }

  const bool hajek = uses_hajek_pair(id);
  if (hajek) {
    data->off_nu1 = add_block("nu1", 1);
    data->off_nu0 = add_block("nu0", 1);
    data->off_aux1 = add_block("aux1", 1);
    data->off_aux0 = add_block("aux0", 1);
  }
  data->off_mu1 = add_block("mu1", 1);
  data->off_mu0 = add_block("mu0", 1);
  data->off_ate = add_block("ate", 1);
  data->dim = offset;

  auto shared = std::shared_ptr<const SystemData>(data);
  EstimatingSystem sys(std::move(blocks), ds.n(),
                       [shared](std::size_t i, const Eigen::VectorXd& eta, double* out) {
                         eval_system_row(*shared, i, eta, out);
                       });

  // closed-form solution: nuisance blocks at their fits, targets as the
  // direct estimators
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(sys.dim());
  if (include_nuisance) {
    eta.segment(data->off_beta, data->dp) = nm.participation.coefficients;
    if (data->treatment_estimated)
      eta.segment(data->off_gamma, data->dt) = std::get<FittedGlm>(nm.treatment).coefficients;
    eta.segment(data->off_th1, data->dm) = nm.outcome_by_arm[1].coefficients;
    eta.segment(data->off_th0, data->dm) = nm.outcome_by_arm[0].coefficients;
  }

  const double mu1 = point_estimate(ds, nm, id, Estimand::MeanA1, bias);
  const double mu0 = point_estimate(ds, nm, id, Estimand::MeanA0, bias);
  eta(data->off_mu1) = mu1;
  eta(data->off_mu0) = mu0;
  eta(data->off_ate) = mu1 - mu0;

  if (hajek) {
    const double nn = static_cast<double>(ds.n());
    const double n0 = static_cast<double>(ds.n0());
    for (int arm : {0, 1}) {
      const int off_nu = arm == 1 ? data->off_nu1 : data->off_nu0;
      const int off_aux = arm == 1 ? data->off_aux1 : data->off_aux0;
      double w_sum = 0.0, w_num = 0.0, u_sum = 0.0, om_sum = 0.0;
      const bool augmented = id == EstimatorId::AIOW2 || id == EstimatorId::AIPW2;
      for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const Row& row = ds.rows[i];
        const Eigen::Index ei = static_cast<Eigen::Index>(i);
        const double in_arm = arm == 1 ? data->a1(ei) : data->a0(ei);
        const double u_i = arm == 1 ? data->u1(ei) : data->u0(ei);
        double g_i = 0.0;
        if (augmented || !nested) g_i = nm.outcome_mean(row, arm);
        if (in_arm == 1.0) {
          double p = nm.participation_prob(row);
          double e = nm.treatment_prob(row, arm);
          double w = nested ? 1.0 / (p * e) : (1.0 - p) / (p * e);
          w_sum += w;
          w_num += w * (augmented ? (*row.y - g_i) : *row.y);
        }
        if (nested) {
          if (augmented) om_sum += nm.outcome_mean(row, arm);
          if (row.s == 0) {
            u_sum += u_i;
            if (augmented) om_sum -= u_i;
          }
        } else if (row.s == 0) {
          u_sum += u_i;
          om_sum += g_i - u_i;
        }
      }
      if (w_sum <= 0.0)
        fail_numeric(kComponent, "weight sum is zero for arm " + std::to_string(arm));
      eta(off_nu) = w_num / w_sum;
      if (augmented) {
        eta(off_aux) = nested ? om_sum / nn : om_sum / n0;
      } else {
        eta(off_aux) = nested ? u_sum / nn : u_sum / n0;
      }
    }
  }

  sys.set_solution(std::move(eta));
  return sys;
}

double SandwichResult::estimate_of(const std::string& block, int component) const {
  for (const auto& b : blocks)
    if (b.name == block) return estimates(b.offset + component);
  fail_config(kComponent, "unknown block '" + block + "'");
}

double SandwichResult::se_of(const std::string& block, int component) const {
  for (const auto& b : blocks)
    if (b.name == block) return std::sqrt(std::max(0.0, covariance(b.offset + component,
                                                                   b.offset + component)));
  fail_config(kComponent, "unknown block '" + block + "'");
}

std::pair<double, double> SandwichResult::ci_of(const std::string& block, int component) const {
  double est = estimate_of(block, component);
  double se = se_of(block, component);
  return {est - z * se, est + z * se};
}

SandwichResult sandwich(const EstimatingSystem& sys, double level, double fd_step) {
  if (!(level > 0.0 && level < 1.0))
    fail_config(kComponent, "confidence level must lie in (0,1)");
  const Eigen::VectorXd& eta = sys.solution();
  const int d = sys.dim();
  const double n = static_cast<double>(sys.rows());

  Eigen::MatrixXd bread = -fd_jacobian(sys, eta, fd_step);
  if (!bread.allFinite())
    fail_numeric(kComponent, "non-finite derivatives in the estimating system");

  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd row(d);
  for (std::size_t i = 0; i < sys.rows(); ++i) {
    sys.eval_row(i, eta, row.data());
    meat.selfadjointView<Eigen::Lower>().rankUpdate(row);
  }
  meat = Eigen::MatrixXd(meat.selfadjointView<Eigen::Lower>()) / n;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(bread);
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    fail_numeric(kComponent,
                 "estimating-equation Jacobian is numerically singular; consider "
                 "simplifying the nuisance models");
  Eigen::MatrixXd bread_inv = lu.inverse();

  SandwichResult result;
  result.blocks = sys.blocks();
  result.estimates = eta;
  result.covariance = bread_inv * meat * bread_inv.transpose() / n;
  result.covariance = 0.5 * (result.covariance + result.covariance.transpose()).eval();
  result.level = level;
  result.z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  return result;
}

// ---------------------------------------------------------------------------
// Bootstrap

StudyDataset resample_rows(const StudyDataset& ds, std::uint64_t seed, int replicate,
                           bool stratify_by_s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate), 0x9e3779b9u};
  std::mt19937_64 rng(seq);

  StudyDataset out;
  out.design = ds.design;
  out.covariate_names = ds.covariate_names;
  out.rows.reserve(ds.n());

  auto draw_from = [&](const std::vector<std::size_t>& pool, std::size_t count) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (std::size_t k = 0; k < count; ++k) out.rows.push_back(ds.rows[pool[pick(rng)]]);
  };

  if (stratify_by_s) {
    std::vector<std::size_t> trial, target;
    for (std::size_t i = 0; i < ds.rows.size(); ++i)
      (ds.rows[i].s == 1 ? trial : target).push_back(i);
    if (trial.empty() || target.empty())
      fail_data(kComponent, "stratified resampling needs rows in both S strata");
    draw_from(trial, trial.size());
    draw_from(target, target.size());
  } else {
    std::vector<std::size_t> all(ds.n());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    draw_from(all, all.size());
  }
  return out;
}

namespace {

double quantile_type7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail_numeric(kComponent, "quantile of empty sample");
  const double h = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(h);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BootstrapResult bootstrap(const StudyDataset& ds, const EstimatorClosure& estimator,
                          const BootstrapConfig& cfg) {
  if (cfg.replicates < 2) fail_config(kComponent, "bootstrap needs at least 2 replicates");
  const bool stratify = cfg.stratify_by_s.value_or(ds.design == Design::NonNested);

  const int reps = cfg.replicates;
  std::vector<std::vector<double>> values(static_cast<std::size_t>(reps));
  std::vector<char> ok(static_cast<std::size_t>(reps), 0);
  std::exception_ptr hard_error = nullptr;

#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
  for (int r = 0; r < reps; ++r) {
    try {
      StudyDataset resampled = resample_rows(ds, cfg.seed, r, stratify);
      values[static_cast<std::size_t>(r)] = estimator(resampled);
      ok[static_cast<std::size_t>(r)] = 1;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) {
#pragma omp critical
        if (!hard_error) hard_error = std::current_exception();
      }
      // numeric failures (separation, singular fits) are recorded and excluded
    } catch (...) {
#pragma omp critical
      if (!hard_error) hard_error = std::current_exception();
    }
  }
  if (hard_error) std::rethrow_exception(hard_error);

  BootstrapResult result;
  result.replicates_requested = reps;
  for (int r = 0; r < reps; ++r)
    if (ok[static_cast<std::size_t>(r)])
      result.replicate_values.push_back(std::move(values[static_cast<std::size_t>(r)]));
  result.replicates_failed = reps - static_cast<int>(result.replicate_values.size());

  if (result.replicates_failed >
      static_cast<int>(cfg.max_failure_fraction * static_cast<double>(reps)))
    fail_numeric(kComponent, std::to_string(result.replicates_failed) + " of " +
                                 std::to_string(reps) + " bootstrap replicates failed");
  if (result.replicate_values.empty())
    fail_numeric(kComponent, "all bootstrap replicates failed");

  const std::size_t k = result.replicate_values.front().size();
  for (const auto& v : result.replicate_values)
    if (v.size() != k) fail_numeric(kComponent, "inconsistent replicate dimensions");

  const double lo_q = (1.0 - cfg.level) / 2.0;
  const double hi_q = 1.0 - lo_q;
  const double m = static_cast<double>(result.replicate_values.size());
  result.components.resize(k);
  std::vector<double> column(result.replicate_values.size());
  for (std::size_t j = 0; j < k; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < column.size(); ++r) {
      column[r] = result.replicate_values[r][j];
      mean += column[r];
    }
    mean /= m;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    result.components[j].se = m > 1.0 ? std::sqrt(ss / (m - 1.0)) : 0.0;
    std::sort(column.begin(), column.end());
    result.components[j].ci_lo = quantile_type7(column, lo_q);
    result.components[j].ci_hi = quantile_type7(column, hi_q);
  }
  return result;
}

}  // namespace transport
