#include "dpsurv/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dpsurv {

std::pair<double, double> hpd_interval(const Eigen::VectorXd& draws, double level) {
  const Eigen::Index s = draws.size();
  if (s < 100)
    throw Error(errc::too_few_draws,
                "need at least 100 draws, got " + std::to_string(s));
  if (!(level > 0.0 && level < 1.0))
    throw Error(errc::invalid_argument, "level must lie in (0,1)");

  std::vector<double> sorted(draws.data(), draws.data() + s);
  std::sort(sorted.begin(), sorted.end());

  auto gap = static_cast<Eigen::Index>(std::ceil(level * static_cast<double>(s)));
  gap = std::clamp<Eigen::Index>(gap, 1, s - 1);

  Eigen::Index best = 0;
  double best_width = sorted[static_cast<std::size_t>(gap)] - sorted[0];
  for (Eigen::Index j = 1; j + gap < s; ++j) {
    const double width =
        sorted[static_cast<std::size_t>(j + gap)] - sorted[static_cast<std::size_t>(j)];
    if (width < best_width) {
      best_width = width;
      best = j;
    }
  }
  return {sorted[static_cast<std::size_t>(best)],
          sorted[static_cast<std::size_t>(best + gap)]};
}

double silverman_bandwidth(const Eigen::VectorXd& draws) {
  const Eigen::Index s = draws.size();
  const double mean = draws.mean();
  const double sd =
      std::sqrt((draws.array() - mean).square().sum() / static_cast<double>(s - 1));

  std::vector<double> sorted(draws.data(), draws.data() + s);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(s - 1);
    const auto lo = static_cast<Eigen::Index>(std::floor(pos));
    const auto hi = std::min<Eigen::Index>(lo + 1, s - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[static_cast<std::size_t>(lo)] +
           frac * (sorted[static_cast<std::size_t>(hi)] - sorted[static_cast<std::size_t>(lo)]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);

  double spread = sd;
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (spread <= 0.0) spread = sd > 0.0 ? sd : 1e-12;
  return 0.9 * spread * std::pow(static_cast<double>(s), -0.2);
}

double kde_density_at(const Eigen::VectorXd& draws, double at, double bandwidth) {
  return std::exp(kde_log_density_at(draws, at, bandwidth));
}

double kde_log_density_at(const Eigen::VectorXd& draws, double at, double bandwidth) {
  const double inv_h = 1.0 / bandwidth;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd exponents(draws.size());
  for (Eigen::Index i = 0; i < draws.size(); ++i) {
    const double z = (at - draws[i]) * inv_h;
    exponents[i] = -0.5 * z * z;
    best = std::max(best, exponents[i]);
  }
  if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Eigen::Index i = 0; i < draws.size(); ++i)
    total += std::exp(exponents[i] - best);
  return best + std::log(total) - std::log(bandwidth) -
         0.5 * std::log(2.0 * std::numbers::pi) -
         std::log(static_cast<double>(draws.size()));
}

BayesFactorResult savage_dickey_bf10(const Eigen::VectorXd& draws,
                                     const PriorSpec& prior, double test_value,
                                     PosteriorDensityEstimator estimator,
                                     std::optional<double> bandwidth_override) {
  if (draws.size() < 2)
    throw Error(errc::too_few_draws, "need at least 2 draws for a density estimate");

  BayesFactorResult result;
  result.prior_at_value = prior.prior_density_beta_x(test_value);

  double log_posterior;
  if (estimator == PosteriorDensityEstimator::kde) {
    result.bandwidth = bandwidth_override.value_or(silverman_bandwidth(draws));
    if (!(result.bandwidth > 0.0))
      throw Error(errc::invalid_argument, "bandwidth must be positive");
    log_posterior = kde_log_density_at(draws, test_value, result.bandwidth);
  } else {
    const double mean = draws.mean();
    const double var = (draws.array() - mean).square().sum() /
                       static_cast<double>(draws.size() - 1);
    result.bandwidth = 0.0;
    const double d = test_value - mean;
    log_posterior =
        -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
  }

  if (!std::isfinite(log_posterior)) {
    const double nearest = (draws.array() - test_value).abs().minCoeff();
    throw Error(errc::zero_density,
                "posterior density underflows at the test value; closest draw is " +
                    std::to_string(nearest) + " away");
  }
  result.posterior_at_value = std::exp(log_posterior);
  result.log_bf10 = prior.log_prior_beta_x(test_value) - log_posterior;
  result.bf10 = std::exp(result.log_bf10);
  return result;
}

namespace {

SummaryRow coefficient_row(const std::string& name, const Eigen::VectorXd& draws,
                           double level, std::optional<double> bf10) {
  SummaryRow row;
  row.param = name;
  row.mean = draws.mean();
  row.sd = std::sqrt((draws.array() - row.mean).square().sum() /
                     static_cast<double>(draws.size() - 1));
  const auto [lo, hi] = hpd_interval(draws, level);
  row.hpd_lower = lo;
  row.hpd_upper = hi;
  row.hr = std::exp(row.mean);
  row.hr_lower = std::exp(lo);
  row.hr_upper = std::exp(hi);
  row.bf10 = bf10;
  return row;
}

}  // namespace

PosteriorSummary summarize_posterior(const MultiChainResult& result,
                                     const PriorSpec& prior, double level) {
  PosteriorSummary summary;
  summary.level = level;

  const Eigen::VectorXd bx = result.pooled_beta_x();
  const double bf_x = savage_dickey_bf10(bx, prior).bf10;
  summary.rows.push_back(coefficient_row("beta_x", bx, level, bf_x));

  // Savage-Dickey for the error-free coefficients under their shared normal
  // prior.
  const Eigen::Index j_cov = result.chains.front().beta_z.cols();
  for (Eigen::Index j = 0; j < j_cov; ++j) {
    const Eigen::VectorXd bz = result.pooled_beta_z(j);
    PriorSpec as_x = prior;
    as_x.mu_x = prior.mu_beta;
    as_x.sigma2_x = prior.sigma2_beta;
    as_x.beta_x_family = BetaXPriorFamily::normal;
    const double bf = savage_dickey_bf10(bz, as_x).bf10;
    summary.rows.push_back(
        coefficient_row("beta_z" + std::to_string(j + 1), bz, level, bf));
  }
  return summary;
}

std::vector<PriorSensitivityRow> prior_sensitivity(
    const std::vector<std::pair<PriorSpec, Eigen::VectorXd>>& draw_sets,
    double test_value) {
  std::vector<PriorSensitivityRow> rows;
  rows.reserve(draw_sets.size());
  for (const auto& [prior, draws] : draw_sets) {
    PriorSensitivityRow row;
    if (prior.beta_x_family == BetaXPriorFamily::normal) {
      row.prior_label = "normal(" + std::to_string(prior.mu_x) + "," +
                        std::to_string(prior.sigma2_x) + ")";
    } else {
      row.prior_label = "cauchy(" + std::to_string(prior.mu_x) + "," +
                        std::to_string(std::sqrt(prior.sigma2_x)) + ")";
    }
    row.coef = draws.mean();
    const auto [lo, hi] = hpd_interval(draws, 0.95);
    row.hr = std::exp(row.coef);
    row.hr_lower = std::exp(lo);
    row.hr_upper = std::exp(hi);
    row.bf10 = savage_dickey_bf10(draws, prior, test_value).bf10;
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::pair<std::string, PriorSpec>> sensitivity_priors(const PriorSpec& base) {
  std::vector<std::pair<std::string, PriorSpec>> out;
  for (const auto& [label, var] : {std::pair<const char*, double>{"0.01", 0.01},
                                   {"1", 1.0},
                                   {"10", 10.0},
                                   {"100", 100.0}}) {
    PriorSpec p = base;
    p.beta_x_family = BetaXPriorFamily::normal;
    p.mu_x = 0.0;
    p.sigma2_x = var;
    out.emplace_back(std::string("normal(0,") + label + ")", p);
  }
  PriorSpec cauchy = base;
  cauchy.beta_x_family = BetaXPriorFamily::cauchy;
  cauchy.mu_x = 0.0;
  cauchy.sigma2_x = 1.0;
  out.emplace_back("cauchy(0,1)", cauchy);
  return out;
}

}  // namespace dpsurv
