#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dpsurv/mcmc.hpp"
#include "dpsurv/rng.hpp"
#include "dpsurv/simex.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

struct LatentLaw {
  enum class Kind { gamma, lognormal, uniform };
  Kind kind = Kind::gamma;
  // gamma: (shape, scale); lognormal: (mu, sigma); uniform: (0, upper) with
  // p1 unused.
  double p1 = 1.0;
  double p2 = 1.0;

  double sample(Rng& rng) const;
  double mean() const;
  double variance() const;
  void validate() const;
  std::string label() const;
};

// Lognormal (mu, sigma) matching the mean and variance of Gamma(shape, scale).
std::pair<double, double> lognormal_match(double gamma_shape, double gamma_scale);

struct SimScenario {
  LatentLaw latent;
  double beta_x = 0.5;
  double beta_z = 0.1;
  int n = 100;
  double censor_frac = 0.0;
  int n_reps = 1000;
  double weibull_shape = 1.0;
  double weibull_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Exponential censoring rate calibrated on a pilot sample of event times so
// the expected censored fraction matches scenario.censor_frac.
double calibrate_censoring_rate(const SimScenario& scenario, Rng& rng,
                                int pilot_size = 100000);

// One replicate dataset: z ~ N(0,1), x from the latent law, w ~ Poisson(x a)
// with a = 1, event times from the proportional-hazards Weibull and
// independent exponential censoring. x_true is filled. When censor_frac > 0
// and no rate is supplied, a pilot calibration runs first.
SurvivalDataset generate_dataset(const SimScenario& scenario, Rng& rng,
                                 std::optional<double> censor_rate = std::nullopt);

enum class Estimator { truth, naive, simex, bayes_gamma, dp_mix };

std::string estimator_name(Estimator est);
Estimator parse_estimator(const std::string& name);
std::vector<Estimator> all_estimators();

struct HarnessConfig {
  ModelConfig mcmc;        // Bayesian estimators; bayes_gamma forces k_trunc = 1
  PriorSpec prior;
  SimexConfig simex;       // per-replicate seeds are derived internally
  int n_threads = 1;
};

struct MetricRow {
  Estimator estimator;
  std::string parameter;  // "beta_x" or "beta_z"
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  std::optional<double> bias_mcse;  // absent below 10 usable replicates
  std::optional<double> mse_mcse;
  int n_used = 0;
  int n_failed = 0;
};

struct MetricTable {
  std::vector<MetricRow> rows;
  std::string to_csv() const;
  const MetricRow& row(Estimator est, const std::string& parameter) const;
};

struct ScenarioResult {
  MetricTable metrics;
  // Raw per-replicate estimates, one (n_reps x 2) block of (beta_x, beta_z)
  // per estimator; NaN marks a failed replicate.
  std::vector<Estimator> estimators;
  std::vector<Eigen::MatrixXd> raw_estimates;
  std::string raw_to_csv() const;
};

// Runs every replicate, fitting each requested estimator on the same
// generated dataset; per-replicate failures are recorded and the replicate
// stays in play for the other estimators. Deterministic in scenario.seed for
// any thread count.
ScenarioResult run_scenario(const SimScenario& scenario,
                            const std::vector<Estimator>& estimators,
                            const HarnessConfig& config);

// Monte Carlo standard error by the batch-means method: contiguous equal
// batches (remainder to the last), SD of batch means / sqrt(n_batches).
double batch_means_mcse(const std::vector<double>& values, int n_batches = 10);

struct BfStudyRow {
  int n = 0;
  double log_bf10_q25 = 0.0;
  double log_bf10_median = 0.0;
  double log_bf10_q75 = 0.0;
  int n_reps = 0;
};

// Sampling distribution of the Savage-Dickey Bayes factor across sample
// sizes; data generated with beta_x = 0.5 under the alternative and 0 under
// the null, gamma(2/3, scale 3) latent law, no censoring.
std::vector<BfStudyRow> bf_sampling_study(const std::vector<int>& n_grid,
                                          bool alternative, int n_reps,
                                          const HarnessConfig& config,
                                          std::uint64_t seed);

// Scenario parsing from flat key=value text. Keys: latent_law
// (gamma|lognormal|uniform), latent_shape, latent_scale, latent_mu,
// latent_sigma, latent_upper, beta_x, beta_z, n, censor_frac, n_reps,
// weibull_shape, weibull_scale, seed.
SimScenario scenario_from_keys(const std::map<std::string, std::string>& keys);

}  // namespace dpsurv
