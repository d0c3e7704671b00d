#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpsurv/mcmc.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

// Shortest interval whose endpoints are draws `gap = ceil(level * S)` apart
// in the sorted sample; ties broken toward the smallest lower endpoint.
// Requires at least 100 draws (too_few_draws otherwise) and 0 < level < 1.
std::pair<double, double> hpd_interval(const Eigen::VectorXd& draws, double level);

double silverman_bandwidth(const Eigen::VectorXd& draws);

// Gaussian kernel density estimate at a point.
double kde_density_at(const Eigen::VectorXd& draws, double at, double bandwidth);

// Log of the kernel estimate via log-sum-exp; stays finite far into the
// tails where the plain estimate underflows.
double kde_log_density_at(const Eigen::VectorXd& draws, double at, double bandwidth);

enum class PosteriorDensityEstimator { kde, normal_approx };

struct BayesFactorResult {
  double bf10 = 0.0;      // prior density over posterior density at the test value
  double log_bf10 = 0.0;  // computed in log space; finite even when bf10 overflows
  double posterior_at_value = 0.0;  // may underflow to 0 for extreme evidence
  double prior_at_value = 0.0;
  double bandwidth = 0.0;  // 0 under the normal approximation
};

// Savage-Dickey density ratio for the point null beta_x = test_value,
// oriented as BF10 (values below 1 favor the null). The posterior density is
// estimated by Gaussian KDE with Silverman bandwidth unless overridden.
// Throws zero_density when the estimate underflows; the message reports the
// closest draw distance to the test value.
BayesFactorResult savage_dickey_bf10(
    const Eigen::VectorXd& draws, const PriorSpec& prior, double test_value = 0.0,
    PosteriorDensityEstimator estimator = PosteriorDensityEstimator::kde,
    std::optional<double> bandwidth_override = std::nullopt);

struct SummaryRow {
  std::string param;
  double mean = 0.0;
  double sd = 0.0;
  double hpd_lower = 0.0;
  double hpd_upper = 0.0;
  // Exp-transformed scale for coefficients; bounds are the exponentials of
  // the coefficient bounds.
  std::optional<double> hr, hr_lower, hr_upper;
  std::optional<double> bf10;
};

struct PosteriorSummary {
  std::vector<SummaryRow> rows;
  double level = 0.95;
};

// Coefficient summary across pooled chains: posterior mean, SD, HPD interval,
// hazard ratio, and a Savage-Dickey Bayes factor per coefficient.
PosteriorSummary summarize_posterior(const MultiChainResult& result,
                                     const PriorSpec& prior, double level = 0.95);

struct PriorSensitivityRow {
  std::string prior_label;
  double coef = 0.0;
  double hr = 0.0;
  double hr_lower = 0.0;
  double hr_upper = 0.0;
  double bf10 = 0.0;
};

// One row per (prior, draw set) pair, in input order.
std::vector<PriorSensitivityRow> prior_sensitivity(
    const std::vector<std::pair<PriorSpec, Eigen::VectorXd>>& draw_sets,
    double test_value = 0.0);

// The canned sensitivity protocol: N(0, 0.01), N(0, 1), N(0, 10), N(0, 100)
// and Cauchy(0, 1) priors on beta_x, applied on top of `base`.
std::vector<std::pair<std::string, PriorSpec>> sensitivity_priors(const PriorSpec& base);

}  // namespace dpsurv
