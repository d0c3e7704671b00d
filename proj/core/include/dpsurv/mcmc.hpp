#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "dpsurv/dp_mixture.hpp"
#include "dpsurv/rng.hpp"
#include "dpsurv/survival.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

// Everything the Gibbs sweep updates.
struct GibbsState {
  Eigen::VectorXd hazard;  // one level per grid interval, > 0
  Eigen::VectorXd beta_z;  // J
  double beta_x = 0.0;
  Eigen::VectorXd x;  // latent densities, > 0
  DpState dp;
};

// Retained posterior draws of one chain. Rows are draws; parameter blocks are
// kept separate and flattened on demand for CSV export.
struct McmcDraws {
  int chain_id = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd knots;  // grid the chain ran on

  Eigen::VectorXd beta_x;
  Eigen::MatrixXd beta_z;      // S x J
  Eigen::MatrixXd hazard;      // S x (m+1)
  Eigen::VectorXd alpha;
  Eigen::MatrixXd pi;          // S x K
  Eigen::MatrixXd atom_shape;  // S x K
  Eigen::MatrixXd atom_scale;  // S x K
  Eigen::MatrixXd latent_x;    // S x n when stored, else 0 x 0

  Eigen::Index n_draws() const { return beta_x.size(); }
  std::vector<std::string> column_names() const;
  Eigen::MatrixXd to_matrix() const;
};

struct SamplerOptions {
  // Adapt Metropolis scales during burn-in. Disable to run with the fixed
  // initial scales throughout (exactness checks need a time-homogeneous
  // kernel).
  bool adapt = true;
  // Keep the latent densities frozen at their initial values; used to fit
  // the survival block alone when x is observed.
  bool fix_latent_x = false;
  // Let subjects whose conjugate independence proposal keeps getting
  // rejected switch to a log-scale random walk during burn-in.
  bool allow_rw_fallback = true;
  double beta_scale = 0.1;
  double atom_scale = 0.6;
  double alpha_scale = 0.5;
  double latent_rw_scale = 0.5;
  double joint_scale = 0.1;  // log-scale SD of the rescaling move
  double shift_scale = 0.1;  // SD of the beta/baseline shift move
};

// Gamma-conjugate hazard update: level_l ~ Gamma(a_h + D_l, rate b_h + E_l).
Eigen::VectorXd update_hazard(const HazardStats& stats, const PriorSpec& prior, Rng& rng);

// Gibbs-within-Metropolis sampler for the joint survival / measurement /
// mixture model. One sweep updates, in this fixed order:
//   hazard -> beta -> latent x -> allocations -> sticks -> atoms -> alpha.
// All randomness comes from the owned Rng, so a chain is reproducible from
// its seed.
class GibbsSampler {
 public:
  GibbsSampler(SurvivalDataset data, HazardGrid grid, ModelConfig config,
               PriorSpec prior, Rng rng, SamplerOptions options = {});

  void sweep();

  void update_hazard_levels();
  // Componentwise random-walk Metropolis on (beta_z, beta_x) against the
  // piecewise-exponential likelihood plus the prior.
  void update_beta();
  // Per-subject Metropolis-Hastings with the conjugate gamma proposal
  // Gamma(a_c + w_i, rate 1/b_c + a_i); the survival factor enters the
  // acceptance ratio. Subjects flagged for fallback use a log random walk.
  void update_latent_x();
  // Joint rescaling x -> s x, beta_x -> beta_x / s. Every linear predictor is
  // invariant, so the survival likelihood drops out and the measurement
  // model, mixture and priors drive acceptance. This moves along the ridge
  // the componentwise updates cross slowly.
  void update_joint_scale();
  // Joint shift beta_x -> beta_x + d with all hazard levels scaled by
  // exp(-d c), c the fixed mean surrogate density. Slides along the
  // intercept-like ridge between the biomarker coefficient and the baseline.
  void update_beta_hazard_shift();
  void update_allocations();
  void update_sticks();
  void update_atoms();
  void update_concentration();

  // Freezes every adaptive scale and the fallback set.
  void end_adaptation();

  // Replaces the observed data (same subject count and covariates layout);
  // the grid and the parameter state are kept.
  void set_data(SurvivalDataset data);

  // Recomputes the likelihood caches after direct edits to state().
  void refresh_caches();

  McmcDraws run(int chain_id = 0);

  const GibbsState& state() const { return state_; }
  GibbsState& state() { return state_; }
  const SurvivalDataset& data() const { return data_; }
  const HazardGrid& grid() const { return grid_; }
  const IntervalExpansion& cells() const { return cells_; }

  double beta_acceptance_rate(Eigen::Index component) const;
  double latent_acceptance_rate() const;
  double joint_scale_acceptance_rate() const;
  double shift_acceptance_rate() const;
  double atom_acceptance_rate(int cluster) const;
  double alpha_acceptance_rate() const;
  int n_fallback_subjects() const;

 private:
  void rebuild_data_caches();
  void refresh_hazard_caches();
  double survival_loglik(const Eigen::VectorXd& eta) const noexcept;

  SurvivalDataset data_;
  HazardGrid grid_;
  ModelConfig config_;
  PriorSpec prior_;
  Rng rng_;
  SamplerOptions options_;

  GibbsState state_;
  IntervalExpansion cells_;

  // Per-subject caches kept in sync with the state.
  Eigen::VectorXd cumhaz_;       // H0(u_i) under the current levels
  Eigen::VectorXd log_h_event_;  // log h at the event interval, 0 if censored
  Eigen::VectorXd eta_;

  std::vector<MhScale> beta_scales_;  // J components then beta_x
  std::vector<MhScale> atom_scales_;
  MhScale alpha_scale_;
  MhScale joint_scale_;
  MhScale shift_scale_;
  double surrogate_center_ = 0.0;  // fixed at construction

  // Conjugate-proposal monitoring for the latent update.
  long latent_proposals_ = 0;
  long latent_accepts_ = 0;
  std::vector<int> window_rejects_;
  int window_sweeps_ = 0;
  std::vector<char> use_rw_;
  std::vector<MhScale> latent_rw_scales_;
  bool adapting_ = true;
};

McmcDraws run_chain(const SurvivalDataset& data, const ModelConfig& config,
                    const PriorSpec& prior, Rng rng, int chain_id = 0);

struct ParameterDiagnostic {
  std::string name;
  std::optional<double> rhat;  // absent for single-chain runs
  double ess = 0.0;
};

struct MultiChainResult {
  std::vector<McmcDraws> chains;
  std::vector<ParameterDiagnostic> diagnostics;  // beta_x and each beta_z

  // Draws of one scalar parameter pooled across chains.
  Eigen::VectorXd pooled_beta_x() const;
  Eigen::VectorXd pooled_beta_z(Eigen::Index j) const;
};

MultiChainResult run_chains(const SurvivalDataset& data, const ModelConfig& config,
                            const PriorSpec& prior, int n_chains, int n_threads = 0);

// Split-chain potential scale reduction; requires at least two chains.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);

// Multi-chain effective sample size via initial-monotone-sequence summed
// autocorrelations, capped at the total draw count.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

}  // namespace dpsurv
