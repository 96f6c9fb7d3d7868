#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "transport/bias.hpp"
#include "transport/dataset.hpp"
#include "transport/estimate_types.hpp"
#include "transport/glm.hpp"

namespace transport {

// Inverse standard normal CDF (Wichura's AS241, double precision).
double normal_quantile(double p);

struct BlockInfo {
  std::string name;
  int offset = 0;
  int size = 0;
};

// A stacked M-estimation system: named parameter blocks and a per-row
// estimating function psi(O_i; eta) whose average is zero at the solution.
class EstimatingSystem {
 public:
  using PsiFn =
      std::function<void(std::size_t row, const Eigen::VectorXd& eta, double* out)>;

  EstimatingSystem(std::vector<BlockInfo> blocks, std::size_t n_rows, PsiFn psi);

  int dim() const { return dim_; }
  std::size_t rows() const { return n_rows_; }
  const std::vector<BlockInfo>& blocks() const { return blocks_; }
  const BlockInfo* find_block(const std::string& name) const;

  void eval_row(std::size_t i, const Eigen::VectorXd& eta, double* out) const;
  Eigen::VectorXd average_psi(const Eigen::VectorXd& eta) const;

  // Installs a candidate solution; (1/n) sum psi must have max-norm <= tol.
  void set_solution(Eigen::VectorXd eta, double tol = 1e-8);
  const Eigen::VectorXd& solution() const;
  bool solved() const { return solved_; }
  double value_of(const std::string& block, int component = 0) const;

  // Damped Newton with a numerical Jacobian, for systems lacking a closed
  // form. Built estimator systems are solved in closed form instead.
  void solve_newton(Eigen::VectorXd init, int max_iter = 100, double tol = 1e-10);

 private:
  std::vector<BlockInfo> blocks_;
  int dim_ = 0;
  std::size_t n_rows_ = 0;
  PsiFn psi_;
  Eigen::VectorXd solution_;
  bool solved_ = false;
};

// Assembles and solves the full stack for one estimator and bias cell:
// participation/treatment/outcome score blocks (at the supplied fits),
// auxiliary normalization blocks where the estimator needs them, then
// mu1, mu0, ate. With include_nuisance=false only the target blocks enter
// (the "naive" mode: nuisance estimation uncertainty is ignored).
EstimatingSystem build_estimator_system(const StudyDataset& ds, const NuisanceModels& nm,
                                        EstimatorId id, const BiasFunctionSpec& bias,
                                        bool include_nuisance = true);

struct SandwichResult {
  std::vector<BlockInfo> blocks;
  Eigen::VectorXd estimates;
  Eigen::MatrixXd covariance;
  double level = 0.95;
  double z = 1.959964;

  double estimate_of(const std::string& block, int component = 0) const;
  double se_of(const std::string& block, int component = 0) const;
  std::pair<double, double> ci_of(const std::string& block, int component = 0) const;
};

// Empirical sandwich covariance A^{-1} B A^{-T} / n with A from central
// finite differences of the averaged psi (per-coordinate step
// fd_step * max(1, |eta_j|)) and B the outer-product average.
SandwichResult sandwich(const EstimatingSystem& sys, double level = 0.95,
                        double fd_step = 1e-6);

struct BootstrapConfig {
  int replicates = 500;
  std::uint64_t seed = 0;
  // Resample within S strata, preserving n1 and n0; defaults to on for
  // non-nested designs when unset.
  std::optional<bool> stratify_by_s;
  double level = 0.95;
  bool parallel = true;
  double max_failure_fraction = 0.2;
};

struct BootstrapComponent {
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct BootstrapResult {
  std::vector<BootstrapComponent> components;
  int replicates_requested = 0;
  int replicates_failed = 0;
  // successful replicates only, one inner vector per replicate
  std::vector<std::vector<double>> replicate_values;
};

using EstimatorClosure = std::function<std::vector<double>(const StudyDataset&)>;

// Nonparametric bootstrap over the estimator closure (which refits nuisance
// models itself). Replicate r's resample depends only on (seed, r), so
// results do not depend on evaluation order. Replicates that throw a
// numeric error are excluded and counted; more than max_failure_fraction
// failing is an error.
BootstrapResult bootstrap(const StudyDataset& ds, const EstimatorClosure& estimator,
                          const BootstrapConfig& cfg);

// Exposed for tests: the resample for (seed, replicate).
StudyDataset resample_rows(const StudyDataset& ds, std::uint64_t seed, int replicate,
                           bool stratify_by_s);

}  // namespace transport
