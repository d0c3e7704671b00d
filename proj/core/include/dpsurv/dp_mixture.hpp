#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "dpsurv/rng.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

// Random-walk Metropolis scale with Robbins-Monro adaptation toward a target
// acceptance rate. Adaptation happens in fixed windows with decaying gain and
// is frozen at the end of burn-in.
struct MhScale {
  double scale = 1.0;
  double target = 0.3;
  bool adapting = true;
  int window = 50;
  long proposals = 0;
  long accepts = 0;

  void tick(bool accepted) {
    ++proposals;
    accepts += accepted ? 1 : 0;
    ++window_proposals_;
    window_accepts_ += accepted ? 1 : 0;
    if (adapting && window_proposals_ >= window) {
      ++blocks_;
      const double rate = static_cast<double>(window_accepts_) / window_proposals_;
      const double gain = 1.0 / std::sqrt(static_cast<double>(blocks_));
      scale *= std::exp(gain * (rate - target));
      window_proposals_ = 0;
      window_accepts_ = 0;
    }
  }

  double acceptance_rate() const {
    return proposals > 0 ? static_cast<double>(accepts) / static_cast<double>(proposals) : 0.0;
  }

  void freeze() { adapting = false; }

 private:
  int window_proposals_ = 0;
  int window_accepts_ = 0;
  int blocks_ = 0;
};

// Truncated stick-breaking mixture of gammas. Atom k is Gamma(atom_shape[k],
// scale atom_scale[k]); pi follows from nu with the remainder mass on the
// last component. Allocations are stored 0-based.
struct DpState {
  Eigen::VectorXd nu;          // K-1 stick fractions in (0,1)
  Eigen::VectorXd pi;          // K weights summing to 1
  Eigen::VectorXd atom_shape;  // K, > 0
  Eigen::VectorXd atom_scale;  // K, > 0
  std::vector<int> alloc;      // one entry per subject, values in 0..K-1
  double alpha = 1.0;          // DP concentration, > 0

  int K() const { return static_cast<int>(pi.size()); }
  void validate() const;
};

// Truncation level for tail mass at most eps: ceil(1 - alpha log eps),
// floored at 2.
int truncation_level(double alpha, double eps);

// pi_k = nu_k prod_{j<k} (1 - nu_j), remainder on component K.
Eigen::VectorXd weights_from_sticks(const Eigen::VectorXd& nu);

// log Gamma(x; shape, scale) density.
double gamma_log_pdf(double x, double shape, double scale);

// Fresh prior draw of the mixture state: sticks from Beta(1, alpha), atom
// shapes and rates from G0 (scales stored as the drawn rates inverted),
// allocations sampled from pi (or uniform when uniform_alloc).
DpState sample_prior_dp_state(int k_trunc, Eigen::Index n, const PriorSpec& prior,
                              Rng& rng, bool uniform_alloc = false);

// Blocked-Gibbs allocation update: c_i ~ Categorical over pi_k * Gamma(x_i;
// atom k), normalized in log space. Throws degenerate_weights when every
// component mass is zero for some subject.
void sample_allocations(const Eigen::VectorXd& x, DpState& state, Rng& rng);

// Conjugate stick update nu_k ~ Beta(1 + n_k, alpha + sum_{j>k} n_j); weights
// recomputed.
void sample_sticks(DpState& state, Rng& rng);

// Random-walk Metropolis on (log shape, log scale) per occupied cluster;
// empty clusters are refreshed with an exact G0 draw. One scale per cluster.
void sample_atoms(const Eigen::VectorXd& x, DpState& state, const PriorSpec& prior,
                  Rng& rng, std::vector<MhScale>& scales);

// Metropolis on log alpha with conditional alpha^{K-1} prod_j (1-nu_j)^{alpha-1}
// times the lognormal prior.
void sample_concentration(DpState& state, const PriorSpec& prior, Rng& rng,
                          MhScale& scale);

// Mixture density sum_k pi_k Gamma(x; a_k, b_k) on a grid of positive points.
Eigen::VectorXd mixture_density(const Eigen::VectorXd& x_grid, const DpState& state);

}  // namespace dpsurv
