#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>

#include "dpsurv/error.hpp"

namespace dpsurv {

// Right-censored survival data with a count-valued biomarker. Each subject i
// carries the observed time u_i = min(T_i, C_i), an event indicator, J
// error-free covariates, the observed cell count w_i on a core of area a_i,
// and (in simulations only) the latent true density x_true_i. The surrogate
// for the latent density is w_i / a_i.
//
// Gamma convention used throughout for the latent-density law: (shape, scale),
// so mean = shape*scale and variance = shape*scale^2. Gamma priors on hazard
// levels use (shape, rate) for conjugacy; each field documents its convention.
struct SurvivalDataset {
  Eigen::VectorXd u;      // observed times, > 0
  Eigen::VectorXi delta;  // event indicators, 0/1
  Eigen::MatrixXd z;      // n x J error-free covariates (J may be 0)
  Eigen::VectorXd w;      // biomarker counts, nonnegative integers
  Eigen::VectorXd a;      // core areas, > 0; defaults to 1 when absent
  std::optional<Eigen::VectorXd> x_true;  // latent densities, >= 0

  Eigen::Index n() const { return u.size(); }
  Eigen::Index n_covariates() const { return z.cols(); }

  // Observed density surrogate w/a, elementwise.
  Eigen::VectorXd surrogate() const {
    return w.array() / a.array();
  }
};

// Checks every dataset invariant and returns the dataset unchanged. Throws
// Error with code non_positive_time / negative_count / non_positive_area /
// length_mismatch naming the offending field and index. An empty `a` is
// filled with ones before validation.
SurvivalDataset validate_dataset(SurvivalDataset raw);

enum class KnotPlacement {
  // Inner knots at empirical quantiles of the observed event times, so every
  // interval contains events.
  event_quantiles,
  // [0, max u] split into m+1 equal pieces, the last extended to infinity.
  equal_length,
};

// Piecewise-constant baseline hazard: h0(t) = levels[l] on [knots[l],
// knots[l+1]) with knots[0] = 0 and the final interval [knots[m], inf).
//
// Events landing exactly on an interior knot are attributed to the interval
// they close (right-closed convention); `event_interval` implements that and
// is the convention under which the piecewise-exponential likelihood and its
// Poisson factorization agree exactly.
struct HazardGrid {
  Eigen::VectorXd knots;   // tau_0 = 0 < tau_1 < ... < tau_m
  Eigen::VectorXd levels;  // one hazard value per interval, size knots.size()

  Eigen::Index n_intervals() const { return levels.size(); }

  // Interval index with t in [tau_l, tau_{l+1}). Requires t >= 0.
  Eigen::Index interval_of(double t) const;

  // Interval an event at time t belongs to: interval_of(t), except an exact
  // interior-knot hit falls back to the interval ending at t. Requires t > 0.
  Eigen::Index event_interval(double t) const;

  // Integrated baseline hazard H0(t) = int_0^t h0(s) ds.
  double cumulative_hazard(double t) const;

  void validate() const;
};

// Builds a hazard grid with m inner knots (hence m+1 intervals). Levels are
// initialized to the crude overall hazard sum(delta)/sum(u). Duplicate
// quantile knots are collapsed so knots stay strictly increasing; the grid
// may then have fewer than m inner knots. Throws no_events when no subject
// has an event.
HazardGrid make_hazard_grid(const Eigen::VectorXd& u, const Eigen::VectorXi& delta,
                            int m, KnotPlacement placement = KnotPlacement::event_quantiles);

// Prior family for the biomarker coefficient. The Cauchy variant exists for
// prior-sensitivity analyses; location = mu_x and scale = sqrt(sigma2_x).
enum class BetaXPriorFamily { normal, cauchy };

struct PriorSpec {
  double a_h = 0.01;  // hazard levels ~ Gamma(a_h, rate b_h)
  double b_h = 0.01;
  double mu_beta = 0.0;  // each beta_z ~ N(mu_beta, sigma2_beta)
  double sigma2_beta = 1.0;
  double mu_x = 0.0;  // beta_x ~ N(mu_x, sigma2_x) or Cauchy(mu_x, sqrt(sigma2_x))
  double sigma2_x = 100.0;
  BetaXPriorFamily beta_x_family = BetaXPriorFamily::normal;
  double mu_alpha = 0.0;  // DP concentration ~ LogNormal(mu_alpha, sigma2_alpha)
  double sigma2_alpha = 1.0;
  // Base measure G0 = Gamma(a0, rate eta0) x Gamma(b0, rate gamma0) over the
  // atom shape and the atom *rate* (the inverse scale, the second gamma
  // parameter in the BUGS convention); smaller hyperparameters mean vaguer
  // priors. Atoms are stored as (shape, scale) throughout.
  double a0 = 0.1;
  double eta0 = 0.1;
  double b0 = 0.1;
  double gamma0 = 0.1;

  void validate() const;

  double log_prior_beta_x(double value) const;
  double prior_density_beta_x(double value) const;
};

struct ModelConfig {
  // Inner-knot count of the baseline hazard grid; yields m_intervals + 1
  // hazard intervals, the last one open-ended.
  int m_intervals = 5;
  // DP truncation level K. K = 1 collapses the mixture to a single gamma
  // component (the parametric comparator).
  int k_trunc = 5;
  int n_iter = 200000;  // total sweeps, burn-in included
  int n_burn = 100000;
  int thin = 10;
  std::uint64_t seed = 0;
  KnotPlacement knots = KnotPlacement::event_quantiles;
  bool store_latent_x = false;

  int n_draws() const { return (n_iter - n_burn) / thin; }
  void validate() const;
};

}  // namespace dpsurv
