#include "dpsurv/simex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "dpsurv/parallel.hpp"

namespace dpsurv {

void SimexConfig::validate() const {
  if (lambda_grid.empty())
    throw Error(errc::invalid_argument, "lambda grid is empty");
  bool has_zero = false;
  for (double l : lambda_grid) {
    if (l < 0.0) throw Error(errc::invalid_argument, "lambda values must be >= 0");
    if (l == 0.0) has_zero = true;
  }
  if (!has_zero)
    throw Error(errc::invalid_argument, "lambda grid must contain 0");
  if (lambda_grid.size() < 3)
    throw Error(errc::invalid_argument, "need at least 3 lambda values for a quadratic");
  if (n_remeasure < 2)
    throw Error(errc::invalid_argument, "need at least 2 remeasurements per lambda");
}

Eigen::VectorXd error_variance(const SurvivalDataset& data) {
  if (data.n() < 1) throw Error(errc::invalid_argument, "empty dataset");
  const double w_bar = data.w.mean();
  return (w_bar / data.a.array()).matrix();
}

double pseudo_error(Rng& rng) {
  const double u = rng.gamma(1.0, 1.0);
  const double y = static_cast<double>(rng.poisson(u));
  return y - u;
}

Eigen::VectorXd remeasure(const SurvivalDataset& data, double lambda,
                          const Eigen::VectorXd& variances, Rng& rng) {
  if (lambda < 0.0) throw Error(errc::invalid_argument, "lambda must be >= 0");
  Eigen::VectorXd surrogate = data.surrogate();
  if (lambda == 0.0) return surrogate;
  const double root = std::sqrt(lambda);
  for (Eigen::Index i = 0; i < surrogate.size(); ++i)
    surrogate[i] += root * std::sqrt(variances[i]) * pseudo_error(rng);
  return surrogate;
}

namespace {

Eigen::MatrixXd with_first_column(const Eigen::VectorXd& first, const Eigen::MatrixXd& rest) {
  Eigen::MatrixXd out(first.size(), rest.cols() + 1);
  out.col(0) = first;
  if (rest.cols() > 0) out.rightCols(rest.cols()) = rest;
  return out;
}

}  // namespace

double quadratic_extrapolate(const std::vector<double>& lambdas,
                             const std::vector<double>& values, double at) {
  if (lambdas.size() != values.size() || lambdas.size() < 3)
    throw Error(errc::invalid_argument, "need >= 3 (lambda, value) pairs");
  const auto n = static_cast<Eigen::Index>(lambdas.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double l = lambdas[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    design(r, 1) = l;
    design(r, 2) = l * l;
    y[r] = values[static_cast<std::size_t>(r)];
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  return coef[0] + coef[1] * at + coef[2] * at * at;
}

SimexFit fit_simex(const SurvivalDataset& data, const SimexConfig& config) {
  return fit_simex(data, config, error_variance(data));
}

SimexFit fit_simex(const SurvivalDataset& data, const SimexConfig& config,
                   const Eigen::VectorXd& variances) {
  config.validate();
  if (variances.size() != data.n())
    throw Error(errc::length_mismatch, "variance vector length mismatch");

  SimexFit fit;
  fit.lambda = config.lambda_grid;
  std::sort(fit.lambda.begin(), fit.lambda.end());
  fit.lambda.erase(std::unique(fit.lambda.begin(), fit.lambda.end()), fit.lambda.end());

  const auto n_lambda = static_cast<Eigen::Index>(fit.lambda.size());
  const Eigen::Index p = data.n_covariates() + 1;
  fit.lambda_means.resize(n_lambda, p);
  fit.n_dropped.assign(static_cast<std::size_t>(n_lambda), 0);

  // lambda = 0 carries no noise: the entry is the naive fit itself.
  fit.naive = fit_cox(data.u, data.delta, with_first_column(data.surrogate(), data.z));
  fit.lambda_means.row(0) = fit.naive.coef.transpose();

  const Rng base(config.seed);
  struct Slot {
    Eigen::VectorXd coef;
    bool ok = false;
  };

  for (Eigen::Index li = 1; li < n_lambda; ++li) {
    const double lambda = fit.lambda[static_cast<std::size_t>(li)];
    std::vector<Slot> slots(static_cast<std::size_t>(config.n_remeasure));
    parallel_for(slots.size(), config.n_threads, [&](std::size_t b) {
      // Substream indexed by (lambda index, remeasurement index) keeps the
      // perturbations independent of scheduling.
      Rng rng = base.child(static_cast<std::uint64_t>(li)).child(b);
      const Eigen::VectorXd perturbed = remeasure(data, lambda, variances, rng);
      try {
        const CoxFit cox = fit_cox(data.u, data.delta, with_first_column(perturbed, data.z));
        if (cox.converged) {
          slots[b].coef = cox.coef;
          slots[b].ok = true;
        }
      } catch (const Error&) {
        // dropped below
      }
    });

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
    int kept = 0;
    for (const auto& slot : slots) {
      if (!slot.ok) continue;
      mean += slot.coef;
      ++kept;
    }
    const int dropped = config.n_remeasure - kept;
    fit.n_dropped[static_cast<std::size_t>(li)] = dropped;
    if (dropped > 0.2 * config.n_remeasure)
      throw Error(errc::singular,
                  "more than 20% of remeasured fits failed at lambda = " +
                      std::to_string(lambda));
    fit.lambda_means.row(li) = (mean / kept).transpose();
  }

  fit.curve.resize(3, p);
  fit.extrapolated.resize(p);
  for (Eigen::Index c = 0; c < p; ++c) {
    Eigen::MatrixXd design(n_lambda, 3);
    Eigen::VectorXd y(n_lambda);
    for (Eigen::Index r = 0; r < n_lambda; ++r) {
      const double l = fit.lambda[static_cast<std::size_t>(r)];
      design(r, 0) = 1.0;
      design(r, 1) = l;
      design(r, 2) = l * l;
      y[r] = fit.lambda_means(r, c);
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    fit.curve.col(c) = coef;
    fit.extrapolated[c] = coef[0] - coef[1] + coef[2];
  }
  return fit;
}

Eigen::VectorXd simex_bootstrap_se(const SurvivalDataset& data, const SimexConfig& config,
                                   int n_resamples, std::uint64_t boot_seed) {
  if (n_resamples < 2)
    throw Error(errc::invalid_argument, "need at least 2 bootstrap resamples");
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.n_covariates() + 1;

  Eigen::MatrixXd estimates(n_resamples, p);
  const Rng boot(boot_seed);
  std::vector<char> failed(static_cast<std::size_t>(n_resamples), 0);

  parallel_for(static_cast<std::size_t>(n_resamples), config.n_threads, [&](std::size_t r) {
    Rng index_rng = boot.child(r);
    SurvivalDataset resample;
    resample.u.resize(n);
    resample.delta.resize(n);
    resample.w.resize(n);
    resample.a.resize(n);
    resample.z.resize(n, data.n_covariates());
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto pick = static_cast<Eigen::Index>(index_rng.uniform_int(static_cast<std::uint64_t>(n)));
      resample.u[i] = data.u[pick];
      resample.delta[i] = data.delta[pick];
      resample.w[i] = data.w[pick];
      resample.a[i] = data.a[pick];
      resample.z.row(i) = data.z.row(pick);
    }
    // Remeasurement noise is tied to config.seed, not the resample index, so
    // identical resamples yield identical fits.
    SimexConfig inner = config;
    inner.n_threads = 1;
    try {
      estimates.row(static_cast<Eigen::Index>(r)) =
          fit_simex(resample, inner).extrapolated.transpose();
    } catch (const Error&) {
      failed[r] = 1;
    }
  });

  Eigen::VectorXd se(p);
  std::vector<Eigen::Index> kept;
  for (Eigen::Index r = 0; r < n_resamples; ++r)
    if (!failed[static_cast<std::size_t>(r)]) kept.push_back(r);
  if (kept.size() < 2)
    throw Error(errc::singular, "bootstrap produced fewer than 2 usable resamples");
  for (Eigen::Index c = 0; c < p; ++c) {
    double mean = 0.0;
    for (const auto r : kept) mean += estimates(r, c);
    mean /= static_cast<double>(kept.size());
    double ss = 0.0;
    for (const auto r : kept) ss += (estimates(r, c) - mean) * (estimates(r, c) - mean);
    se[c] = std::sqrt(ss / static_cast<double>(kept.size() - 1));
  }
  return se;
}

}  // namespace dpsurv
