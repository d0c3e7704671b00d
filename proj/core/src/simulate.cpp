#include "dpsurv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dpsurv/inference.hpp"
#include "dpsurv/io.hpp"
#include "dpsurv/parallel.hpp"

namespace dpsurv {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Reserved substream for the censoring-rate pilot; replicate streams use
// their replicate index.
constexpr std::uint64_t kPilotStream = 0x9E3779B9ULL;
}  // namespace

double LatentLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::gamma:
      return std::max(rng.gamma(p1, p2), 1e-300);
    case Kind::lognormal:
      return rng.lognormal(p1, p2);
    case Kind::uniform:
      return rng.uniform_pos() * p2;
  }
  return 0.0;
}

double LatentLaw::mean() const {
  switch (kind) {
    case Kind::gamma: return p1 * p2;
    case Kind::lognormal: return std::exp(p1 + 0.5 * p2 * p2);
    case Kind::uniform: return 0.5 * p2;
  }
  return 0.0;
}

double LatentLaw::variance() const {
  switch (kind) {
    case Kind::gamma: return p1 * p2 * p2;
    case Kind::lognormal: {
      const double s2 = p2 * p2;
      return (std::exp(s2) - 1.0) * std::exp(2.0 * p1 + s2);
    }
    case Kind::uniform: return p2 * p2 / 12.0;
  }
  return 0.0;
}

void LatentLaw::validate() const {
  switch (kind) {
    case Kind::gamma:
      if (!(p1 > 0.0) || !(p2 > 0.0))
        throw Error(errc::invalid_argument, "gamma latent law needs positive shape and scale");
      break;
    case Kind::lognormal:
      if (!(p2 > 0.0))
        throw Error(errc::invalid_argument, "lognormal latent law needs positive sigma");
      break;
    case Kind::uniform:
      if (!(p2 > 0.0))
        throw Error(errc::invalid_argument, "uniform latent law needs a positive upper bound");
      break;
  }
}

std::string LatentLaw::label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::gamma: out << "gamma(" << p1 << "," << p2 << ")"; break;
    case Kind::lognormal: out << "lognormal(" << p1 << "," << p2 << ")"; break;
    case Kind::uniform: out << "uniform(0," << p2 << ")"; break;
  }
  return out.str();
}

std::pair<double, double> lognormal_match(double gamma_shape, double gamma_scale) {
  if (!(gamma_shape > 0.0) || !(gamma_scale > 0.0))
    throw Error(errc::invalid_argument, "gamma parameters must be positive");
  // Match E = a b and Var = a b^2: Var/E^2 = 1/a fixes sigma, then mu.
  const double sigma2 = std::log1p(1.0 / gamma_shape);
  const double mu = std::log(gamma_shape * gamma_scale) - 0.5 * sigma2;
  return {mu, std::sqrt(sigma2)};
}

void SimScenario::validate() const {
  latent.validate();
  if (n < 1) throw Error(errc::invalid_argument, "n must be >= 1");
  if (!(censor_frac >= 0.0 && censor_frac < 1.0))
    throw Error(errc::invalid_argument, "censor_frac must lie in [0,1)");
  if (n_reps < 1) throw Error(errc::invalid_argument, "n_reps must be >= 1");
  if (!(weibull_shape > 0.0) || !(weibull_scale > 0.0))
    throw Error(errc::invalid_argument, "Weibull parameters must be positive");
}

namespace {

double draw_event_time(const SimScenario& scenario, double eta, Rng& rng) {
  // Proportional hazards with Weibull baseline: H0(t) = (t/scale)^shape, so
  // T = scale * (E * exp(-eta))^(1/shape) with E ~ Exp(1).
  const double e = rng.exponential(1.0);
  return scenario.weibull_scale * std::pow(e * std::exp(-eta), 1.0 / scenario.weibull_shape);
}

}  // namespace

double calibrate_censoring_rate(const SimScenario& scenario, Rng& rng, int pilot_size) {
  std::vector<double> times(static_cast<std::size_t>(pilot_size));
  for (auto& t : times) {
    const double z = rng.normal();
    const double x = scenario.latent.sample(rng);
    const double eta = scenario.beta_z * z + scenario.beta_x * x;
    t = draw_event_time(scenario, eta, rng);
  }

  auto censored_fraction = [&](double rate) {
    double total = 0.0;
    for (double t : times) total += 1.0 - std::exp(-rate * t);
    return total / static_cast<double>(times.size());
  };

  // Bisection on log rate; the censored fraction is monotone in the rate.
  double lo = -40.0, hi = 40.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double frac = censored_fraction(std::exp(mid));
    if (std::fabs(frac - scenario.censor_frac) < 1e-5) return std::exp(mid);
    if (frac < scenario.censor_frac)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

SurvivalDataset generate_dataset(const SimScenario& scenario, Rng& rng,
                                 std::optional<double> censor_rate) {
  scenario.validate();
  double rate = 0.0;
  if (scenario.censor_frac > 0.0) {
    if (censor_rate) {
      rate = *censor_rate;
    } else {
      Rng pilot_rng = rng.child(kPilotStream);
      rate = calibrate_censoring_rate(scenario, pilot_rng);
    }
  }

  const Eigen::Index n = scenario.n;
  SurvivalDataset data;
  data.u.resize(n);
  data.delta.resize(n);
  data.z.resize(n, 1);
  data.w.resize(n);
  data.a = Eigen::VectorXd::Ones(n);
  data.x_true = Eigen::VectorXd(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = rng.normal();
    const double x = scenario.latent.sample(rng);
    const double eta = scenario.beta_z * z + scenario.beta_x * x;
    const double t = draw_event_time(scenario, eta, rng);
    double u = t;
    int event = 1;
    if (scenario.censor_frac > 0.0) {
      const double c = rng.exponential(rate);
      if (c < t) {
        u = c;
        event = 0;
      }
    }
    data.z(i, 0) = z;
    (*data.x_true)[i] = x;
    data.w[i] = static_cast<double>(rng.poisson(x * data.a[i]));
    data.u[i] = std::max(u, 1e-300);
    data.delta[i] = event;
  }
  return data;
}

std::string estimator_name(Estimator est) {
  switch (est) {
    case Estimator::truth: return "true";
    case Estimator::naive: return "naive";
    case Estimator::simex: return "simex";
    case Estimator::bayes_gamma: return "bayes_gamma";
    case Estimator::dp_mix: return "dp_mix";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  for (Estimator est : all_estimators())
    if (estimator_name(est) == name) return est;
  throw Error(errc::invalid_argument,
              "unknown estimator '" + name +
                  "'; valid names: true, naive, simex, bayes_gamma, dp_mix");
}

std::vector<Estimator> all_estimators() {
  return {Estimator::truth, Estimator::naive, Estimator::simex,
          Estimator::bayes_gamma, Estimator::dp_mix};
}

std::string MetricTable::to_csv() const {
  std::ostringstream out;
  out << "estimator,parameter,mean_estimate,bias,bias_mcse,mse,mse_mcse,n_used,n_failed\n";
  for (const auto& row : rows) {
    out << estimator_name(row.estimator) << ',' << row.parameter << ','
        << io::format_double(row.mean_estimate) << ',' << io::format_double(row.bias) << ',';
    out << (row.bias_mcse ? io::format_double(*row.bias_mcse) : "NA") << ','
        << io::format_double(row.mse) << ','
        << (row.mse_mcse ? io::format_double(*row.mse_mcse) : "NA") << ','
        << row.n_used << ',' << row.n_failed << "\n";
  }
  return out.str();
}

const MetricRow& MetricTable::row(Estimator est, const std::string& parameter) const {
  for (const auto& r : rows)
    if (r.estimator == est && r.parameter == parameter) return r;
  throw Error(errc::invalid_argument,
              "no row for " + estimator_name(est) + "/" + parameter);
}

std::string ScenarioResult::raw_to_csv() const {
  std::ostringstream out;
  out << "replicate,estimator,beta_x,beta_z\n";
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const auto& block = raw_estimates[e];
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
      out << r << ',' << estimator_name(estimators[e]) << ','
          << io::format_double(block(r, 0)) << ',' << io::format_double(block(r, 1))
          << "\n";
    }
  }
  return out.str();
}

namespace {

// Stream layout per replicate: child 0 generates the data, child 1 + index
// runs estimator randomness, so every estimator sees the same dataset and an
// estimator's own stream does not depend on which others were requested.
std::uint64_t estimator_stream(Estimator est) {
  return 1 + static_cast<std::uint64_t>(est);
}

std::pair<double, double> fit_frequentist(const SurvivalDataset& data,
                                          const Eigen::VectorXd& covariate) {
  Eigen::MatrixXd design(data.n(), 1 + data.n_covariates());
  design.col(0) = covariate;
  design.rightCols(data.n_covariates()) = data.z;
  const CoxFit fit = fit_cox(data.u, data.delta, design);
  if (!fit.converged)
    throw Error(errc::singular, "Cox fit did not converge");
  return {fit.coef[0], fit.coef.size() > 1 ? fit.coef[1] : kNaN};
}

std::pair<double, double> fit_bayes(const SurvivalDataset& data, const HarnessConfig& config,
                                    bool parametric, Rng rng) {
  ModelConfig model = config.mcmc;
  if (parametric) model.k_trunc = 1;
  const McmcDraws draws = run_chain(data, model, config.prior, rng);
  const double bx = draws.beta_x.mean();
  const double bz = draws.beta_z.cols() > 0 ? draws.beta_z.col(0).mean() : kNaN;
  return {bx, bz};
}

}  // namespace

ScenarioResult run_scenario(const SimScenario& scenario,
                            const std::vector<Estimator>& estimators,
                            const HarnessConfig& config) {
  scenario.validate();
  if (estimators.empty())
    throw Error(errc::invalid_argument, "estimator set is empty");

  const Rng base(scenario.seed);
  std::optional<double> censor_rate;
  if (scenario.censor_frac > 0.0) {
    Rng pilot = base.child(kPilotStream);
    censor_rate = calibrate_censoring_rate(scenario, pilot);
  }

  ScenarioResult result;
  result.estimators = estimators;
  result.raw_estimates.assign(estimators.size(),
                              Eigen::MatrixXd::Constant(scenario.n_reps, 2, kNaN));

  parallel_for(static_cast<std::size_t>(scenario.n_reps), config.n_threads,
               [&](std::size_t rep) {
                 const Rng rep_base = base.child(rep);
                 Rng data_rng = rep_base.child(0);
                 const SurvivalDataset data =
                     generate_dataset(scenario, data_rng, censor_rate);

                 for (std::size_t e = 0; e < estimators.size(); ++e) {
                   const Estimator est = estimators[e];
                   Rng est_rng = rep_base.child(estimator_stream(est));
                   try {
                     std::pair<double, double> estimate{kNaN, kNaN};
                     switch (est) {
                       case Estimator::truth:
                         estimate = fit_frequentist(data, *data.x_true);
                         break;
                       case Estimator::naive:
                         estimate = fit_frequentist(data, data.surrogate());
                         break;
                       case Estimator::simex: {
                         SimexConfig simex = config.simex;
                         simex.seed = est_rng.seed();
                         simex.n_threads = 1;
                         const SimexFit fit = fit_simex(data, simex);
                         estimate = {fit.extrapolated[0], fit.extrapolated[1]};
                         break;
                       }
                       case Estimator::bayes_gamma:
                         estimate = fit_bayes(data, config, true, est_rng);
                         break;
                       case Estimator::dp_mix:
                         estimate = fit_bayes(data, config, false, est_rng);
                         break;
                     }
                     result.raw_estimates[e](static_cast<Eigen::Index>(rep), 0) =
                         estimate.first;
                     result.raw_estimates[e](static_cast<Eigen::Index>(rep), 1) =
                         estimate.second;
                   } catch (const Error&) {
                     // failure recorded by the NaN slot; other estimators
                     // keep the replicate
                   }
                 }
               });

  const double truth_values[2] = {scenario.beta_x, scenario.beta_z};
  const char* names[2] = {"beta_x", "beta_z"};
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    for (int pcol = 0; pcol < 2; ++pcol) {
      MetricRow row;
      row.estimator = estimators[e];
      row.parameter = names[pcol];
      std::vector<double> values;
      values.reserve(static_cast<std::size_t>(scenario.n_reps));
      std::vector<double> sq_errors;
      for (Eigen::Index r = 0; r < scenario.n_reps; ++r) {
        const double v = result.raw_estimates[e](r, pcol);
        if (std::isnan(v)) continue;
        values.push_back(v);
        const double err = v - truth_values[pcol];
        sq_errors.push_back(err * err);
      }
      row.n_used = static_cast<int>(values.size());
      row.n_failed = scenario.n_reps - row.n_used;
      if (!values.empty()) {
        double mean = 0.0, mse = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        for (double s : sq_errors) mse += s;
        mse /= static_cast<double>(sq_errors.size());
        row.mean_estimate = mean;
        row.bias = mean - truth_values[pcol];
        row.mse = mse;
        if (static_cast<int>(values.size()) >= 10) {
          row.bias_mcse = batch_means_mcse(values);
          row.mse_mcse = batch_means_mcse(sq_errors);
        }
      } else {
        row.mean_estimate = kNaN;
        row.bias = kNaN;
        row.mse = kNaN;
      }
      result.metrics.rows.push_back(row);
    }
  }
  return result;
}

double batch_means_mcse(const std::vector<double>& values, int n_batches) {
  const auto n = static_cast<int>(values.size());
  if (n < n_batches)
    throw Error(errc::too_few_values,
                "need at least " + std::to_string(n_batches) + " values, got " +
                    std::to_string(n));
  const int q = n / n_batches;
  std::vector<double> means(static_cast<std::size_t>(n_batches));
  for (int b = 0; b < n_batches; ++b) {
    const int start = b * q;
    const int end = (b == n_batches - 1) ? n : start + q;
    double m = 0.0;
    for (int i = start; i < end; ++i) m += values[static_cast<std::size_t>(i)];
    means[static_cast<std::size_t>(b)] = m / static_cast<double>(end - start);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(n_batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / static_cast<double>(n_batches - 1));
  return sd / std::sqrt(static_cast<double>(n_batches));
}

std::vector<BfStudyRow> bf_sampling_study(const std::vector<int>& n_grid,
                                          bool alternative, int n_reps,
                                          const HarnessConfig& config,
                                          std::uint64_t seed) {
  std::vector<BfStudyRow> rows;
  if (n_grid.empty()) return rows;

  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    SimScenario scenario;
    scenario.latent = {LatentLaw::Kind::gamma, 2.0 / 3.0, 3.0};
    scenario.beta_x = alternative ? 0.5 : 0.0;
    scenario.beta_z = 0.1;
    scenario.n = n_grid[gi];
    scenario.censor_frac = 0.0;
    scenario.n_reps = n_reps;
    scenario.seed = seed + gi;

    const Rng base(scenario.seed);
    std::vector<double> log_bf(static_cast<std::size_t>(n_reps));
    parallel_for(static_cast<std::size_t>(n_reps), config.n_threads, [&](std::size_t rep) {
      const Rng rep_base = base.child(rep);
      Rng data_rng = rep_base.child(0);
      const SurvivalDataset data = generate_dataset(scenario, data_rng);
      Rng fit_rng = rep_base.child(1);
      const McmcDraws draws = run_chain(data, config.mcmc, config.prior, fit_rng);
      log_bf[rep] = savage_dickey_bf10(draws.beta_x, config.prior).log_bf10;
    });

    std::sort(log_bf.begin(), log_bf.end());
    auto quantile = [&](double p) {
      const double pos = p * static_cast<double>(log_bf.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, log_bf.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      return log_bf[lo] + frac * (log_bf[hi] - log_bf[lo]);
    };
    BfStudyRow row;
    row.n = n_grid[gi];
    row.n_reps = n_reps;
    row.log_bf10_q25 = quantile(0.25);
    row.log_bf10_median = quantile(0.5);
    row.log_bf10_q75 = quantile(0.75);
    rows.push_back(row);
  }
  return rows;
}

namespace {

double key_double(const std::map<std::string, std::string>& keys, const std::string& key,
                  double fallback) {
  const auto it = keys.find(key);
  if (it == keys.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw Error(errc::parse_error, "bad numeric value for key '" + key + "'");
  }
}

}  // namespace

SimScenario scenario_from_keys(const std::map<std::string, std::string>& keys) {
  SimScenario scenario;
  const auto law = keys.find("latent_law");
  const std::string kind = law == keys.end() ? "gamma" : law->second;
  if (kind == "gamma") {
    scenario.latent.kind = LatentLaw::Kind::gamma;
    scenario.latent.p1 = key_double(keys, "latent_shape", 1.0);
    scenario.latent.p2 = key_double(keys, "latent_scale", 1.0);
  } else if (kind == "lognormal") {
    scenario.latent.kind = LatentLaw::Kind::lognormal;
    scenario.latent.p1 = key_double(keys, "latent_mu", 0.0);
    scenario.latent.p2 = key_double(keys, "latent_sigma", 1.0);
  } else if (kind == "uniform") {
    scenario.latent.kind = LatentLaw::Kind::uniform;
    scenario.latent.p1 = 0.0;
    scenario.latent.p2 = key_double(keys, "latent_upper", 1.0);
  } else {
    throw Error(errc::parse_error,
                "latent_law must be gamma, lognormal or uniform, got '" + kind + "'");
  }
  scenario.beta_x = key_double(keys, "beta_x", scenario.beta_x);
  scenario.beta_z = key_double(keys, "beta_z", scenario.beta_z);
  scenario.n = static_cast<int>(key_double(keys, "n", scenario.n));
  scenario.censor_frac = key_double(keys, "censor_frac", scenario.censor_frac);
  scenario.n_reps = static_cast<int>(key_double(keys, "n_reps", scenario.n_reps));
  scenario.weibull_shape = key_double(keys, "weibull_shape", scenario.weibull_shape);
  scenario.weibull_scale = key_double(keys, "weibull_scale", scenario.weibull_scale);
  scenario.seed = static_cast<std::uint64_t>(key_double(keys, "seed", 0.0));
  scenario.validate();
  return scenario;
}

}  // namespace dpsurv
