#pragma once

#include <Eigen/Core>

#include "dpsurv/error.hpp"

namespace dpsurv {

// Cox proportional-hazards fit by Newton-Raphson on the Breslow partial
// likelihood. `converged` is false when the iteration cap is reached (e.g.
// monotone likelihood); the best iterate is still returned.
struct CoxFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd covariance;  // inverse information at the final iterate
  bool converged = false;
  int iterations = 0;
  double log_partial_lik = 0.0;

  Eigen::VectorXd se() const;
  Eigen::VectorXd z_scores() const;
  // Two-sided p-values from the standard normal reference.
  Eigen::VectorXd p_values() const;
};

// Breslow-ties partial likelihood, score vector and information matrix at
// beta; shared by the fitter and the finite-difference checks.
void cox_derivatives(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                     const Eigen::VectorXi& event, const Eigen::MatrixXd& covariates,
                     double* log_pl, Eigen::VectorXd* score, Eigen::MatrixXd* info);

double cox_log_partial_lik(const Eigen::VectorXd& beta, const Eigen::VectorXd& time,
                           const Eigen::VectorXi& event, const Eigen::MatrixXd& covariates);

// Newton-Raphson from beta = 0 with step-halving; stops when the max absolute
// score drops below 1e-8 or the relative log-PL change falls below 1e-10.
// Throws `singular` when the information matrix is not invertible at the
// start; flags NotConverged after 50 iterations otherwise.
CoxFit fit_cox(const Eigen::VectorXd& time, const Eigen::VectorXi& event,
               const Eigen::MatrixXd& covariates);

// Martingale residuals delta_i - H0(u_i) exp(eta_i) with the Breslow baseline
// at the fitted coefficients. Residuals sum to zero.
Eigen::VectorXd martingale_residuals(const CoxFit& fit, const Eigen::VectorXd& time,
                                     const Eigen::VectorXi& event,
                                     const Eigen::MatrixXd& covariates);

}  // namespace dpsurv
