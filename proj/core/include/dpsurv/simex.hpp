#pragma once

#include <Eigen/Core>
#include <vector>

#include "dpsurv/cox.hpp"
#include "dpsurv/rng.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

struct SimexConfig {
  // Noise multipliers; must contain 0. Order does not matter.
  std::vector<double> lambda_grid{0.0, 0.5, 1.0, 1.5, 2.0};
  int n_remeasure = 100;  // remeasured datasets per positive lambda
  std::uint64_t seed = 0;
  int n_threads = 1;

  void validate() const;
};

struct SimexFit {
  std::vector<double> lambda;     // sorted ascending, starts at 0
  Eigen::MatrixXd lambda_means;   // L x p mean coefficients per lambda
  Eigen::MatrixXd curve;          // 3 x p quadratic coefficients (1, l, l^2)
  Eigen::VectorXd extrapolated;   // p, the curve evaluated at lambda = -1
  std::vector<int> n_dropped;     // non-converged fits dropped per lambda
  CoxFit naive;                   // the lambda = 0 fit on the observed surrogate
  Eigen::VectorXd bootstrap_se;   // empty unless filled by simex_bootstrap_se
};

// Estimated per-subject variance of the surrogate error, mean(w) / a_i. The
// overall mean count is used, not an area-weighted one.
Eigen::VectorXd error_variance(const SurvivalDataset& data);

// One mean-zero unit-variance pseudo-error xi = y - u with u ~ Gamma(1,1) and
// y ~ Poisson(u). Var(xi) = E[Var(y|u)] = E[u] = 1 exactly, so no rescaling
// constant is applied; the moment tests pin this down empirically.
double pseudo_error(Rng& rng);

// Surrogate w/a perturbed at noise level lambda: w_i/a_i + sqrt(lambda) *
// sigma_i * xi_i. lambda = 0 returns the surrogate untouched.
Eigen::VectorXd remeasure(const SurvivalDataset& data, double lambda,
                          const Eigen::VectorXd& variances, Rng& rng);

// Full SIMEX pass: per lambda, average Cox coefficients over n_remeasure
// perturbed datasets (the lambda = 0 entry is the exact naive fit), fit a
// least-squares quadratic per coefficient, and evaluate it at lambda = -1.
// Non-converged fits are dropped from the per-lambda average; more than 20%
// dropped at any lambda is an error. Covariate order: surrogate first, then z.
SimexFit fit_simex(const SurvivalDataset& data, const SimexConfig& config);
SimexFit fit_simex(const SurvivalDataset& data, const SimexConfig& config,
                   const Eigen::VectorXd& variances);

// Nonparametric bootstrap over subjects; returns the SD of the extrapolated
// coefficients across resamples. Each resample reruns fit_simex with the
// same remeasurement seed, so identical resampled datasets give identical
// fits.
Eigen::VectorXd simex_bootstrap_se(const SurvivalDataset& data, const SimexConfig& config,
                                   int n_resamples, std::uint64_t boot_seed = 1);

// Least-squares quadratic through (lambda, value) points evaluated at `at`;
// exact for inputs lying on a quadratic. Needs >= 3 distinct lambdas.
double quadratic_extrapolate(const std::vector<double>& lambdas,
                             const std::vector<double>& values, double at = -1.0);

}  // namespace dpsurv
