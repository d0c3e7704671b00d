#pragma once

#include <Eigen/Core>
#include <vector>

#include "dpsurv/types.hpp"

namespace dpsurv {

// Linear predictors are rejected beyond this magnitude instead of silently
// saturating exp().
inline constexpr double kMaxLinearPredictor = 700.0;

// Subject-by-interval expansion of the survival data over a hazard grid.
// Rows are stored CSR-style per subject and exist exactly for the (i, l)
// pairs with positive exposure e_il = |[tau_l, tau_{l+1}) ∩ [0, u_i]|. The
// event flag of subject i sits on its last row (the interval containing u_i
// under the right-closed event convention), so sum_l d_il = delta_i and
// sum_l e_il = u_i hold exactly.
struct IntervalExpansion {
  Eigen::Index n_subjects = 0;
  Eigen::Index n_intervals = 0;
  std::vector<Eigen::Index> row_start;  // size n_subjects + 1
  std::vector<Eigen::Index> interval;   // per row
  std::vector<double> exposure;         // per row, > 0
  std::vector<int> event;               // per row, 0/1
  // Per subject: interval index carrying the event, -1 when censored.
  std::vector<Eigen::Index> event_interval;

  Eigen::Index n_rows() const { return static_cast<Eigen::Index>(interval.size()); }
};

IntervalExpansion expand_intervals(const SurvivalDataset& data, const HazardGrid& grid);

// Linear predictor eta_i = beta_z' z_i + beta_x * x_i.
Eigen::VectorXd linear_predictor(const SurvivalDataset& data,
                                 const Eigen::VectorXd& beta_z, double beta_x,
                                 const Eigen::VectorXd& x);

// Piecewise-exponential log-likelihood evaluated directly from the grid:
//   sum_i delta_i (log h0(u_i) + eta_i) - H0(u_i) exp(eta_i).
// Throws non_finite_lik when a hazard level is <= 0 or |eta_i| exceeds
// kMaxLinearPredictor.
double loglik_direct(const SurvivalDataset& data, const HazardGrid& grid,
                     const Eigen::VectorXd& beta_z, double beta_x,
                     const Eigen::VectorXd& x);

// The same value assembled from the expansion cells, one Poisson kernel
// d_il ~ Poisson(h_l e_il exp(eta_i)) per row. The data-only offset
// contribution d_il log e_il is dropped along with log(d_il!), so the value
// coincides with loglik_direct rather than merely differing by a constant.
double loglik_poisson_trick(const IntervalExpansion& cells, const SurvivalDataset& data,
                            const HazardGrid& grid, const Eigen::VectorXd& beta_z,
                            double beta_x, const Eigen::VectorXd& x);

// Per-interval conjugate statistics: event counts D_l = sum_i d_il and
// exposure weighted by relative risk, E_l = sum_i e_il exp(eta_i).
struct HazardStats {
  Eigen::VectorXd events;    // D_l
  Eigen::VectorXd exposure;  // E_l
};

HazardStats hazard_sufficient_stats(const IntervalExpansion& cells,
                                    const Eigen::VectorXd& eta);
HazardStats hazard_sufficient_stats(const IntervalExpansion& cells,
                                    const SurvivalDataset& data,
                                    const Eigen::VectorXd& beta_z, double beta_x,
                                    const Eigen::VectorXd& x);

namespace detail {

// Kernel used inside MCMC sweeps: -inf (never a throw) on invalid inputs so
// Metropolis steps can reject out-of-range proposals.
double pe_loglik(const IntervalExpansion& cells, const Eigen::VectorXd& levels,
                 const Eigen::VectorXd& eta) noexcept;

}  // namespace detail

}  // namespace dpsurv
