#include <doctest.h>

#include <cmath>
#include <vector>

#include "dpsurv/simex.hpp"
#include "dpsurv/simulate.hpp"
#include "helpers.hpp"

using namespace dpsurv;
using testutil::mean;
using testutil::se_mean;
using testutil::variance;

TEST_SUITE("simex") {

TEST_CASE("error variance is the mean count over the area") {
  SurvivalDataset d;
  d.u = Eigen::VectorXd::Ones(3);
  d.delta = Eigen::VectorXi::Ones(3);
  d.w.resize(3);
  d.w << 2.0, 2.0, 2.0;
  d.a = Eigen::VectorXd::Ones(3);
  d.z.resize(3, 0);
  const Eigen::VectorXd v = error_variance(d);
  for (int i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(2.0));

  d.w << 2.0, 4.0, 6.0;  // mean 4
  d.a << 2.0, 2.0, 2.0;
  const Eigen::VectorXd v2 = error_variance(d);
  for (int i = 0; i < 3; ++i) CHECK(v2[i] == doctest::Approx(2.0));
}

TEST_CASE("estimated variance is consistent for the surrogate error") {
  // Var[w/a - x] = E[x]/a equals mean(w)/a at unit areas, the regime the
  // estimator is built for.
  Rng rng(91);
  const int n = 200000;
  std::vector<double> errors(n), counts(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.gamma(2.0, 1.5);
    const double w = static_cast<double>(rng.poisson(x));
    errors[static_cast<std::size_t>(i)] = w - x;
    counts[static_cast<std::size_t>(i)] = w;
  }
  const double estimate = mean(counts);
  const double empirical = variance(errors);
  CHECK(std::fabs(empirical - estimate) < 4 * testutil::se_variance(errors));
}

TEST_CASE("pseudo-errors have zero mean and unit variance") {
  Rng rng(92);
  const int n = 200000;
  std::vector<double> draws(n);
  for (auto& d : draws) d = pseudo_error(rng);
  CHECK(std::fabs(mean(draws)) < 4 * se_mean(draws));
  CHECK(std::fabs(variance(draws) - 1.0) < 4 * testutil::se_variance(draws));
}

TEST_CASE("pseudo-errors are integer minus continuous, not on a lattice") {
  Rng rng(93);
  int fractional = 0;
  for (int i = 0; i < 1000; ++i) {
    const double xi = pseudo_error(rng);
    if (std::fabs(xi - std::round(xi)) > 1e-9) ++fractional;
  }
  CHECK(fractional == 1000);
}

TEST_CASE("remeasurement at lambda zero returns the surrogate untouched") {
  Rng rng(94);
  SurvivalDataset d = testutil::random_dataset(rng, 20, 1);
  const Eigen::VectorXd variances = error_variance(d);
  Rng noise(5);
  const Eigen::VectorXd out = remeasure(d, 0.0, variances, noise);
  const Eigen::VectorXd surrogate = d.surrogate();
  for (Eigen::Index i = 0; i < out.size(); ++i) CHECK(out[i] == surrogate[i]);
}

TEST_CASE("remeasurement noise variance matches the target at lambda one") {
  Rng rng(95);
  SurvivalDataset d = testutil::random_dataset(rng, 50, 0);
  const Eigen::VectorXd variances = error_variance(d);
  const Eigen::VectorXd surrogate = d.surrogate();

  Rng noise(6);
  std::vector<double> deviations;
  deviations.reserve(50 * 2000);
  for (int rep = 0; rep < 2000; ++rep) {
    const Eigen::VectorXd out = remeasure(d, 1.0, variances, noise);
    for (Eigen::Index i = 0; i < out.size(); ++i)
      deviations.push_back((out[i] - surrogate[i]) / std::sqrt(variances[i]));
  }
  CHECK(std::fabs(variance(deviations) - 1.0) < 5 * testutil::se_variance(deviations));
}

TEST_CASE("remeasurement is reproducible under a fixed seed") {
  Rng rng(96);
  SurvivalDataset d = testutil::random_dataset(rng, 10, 0);
  const Eigen::VectorXd variances = error_variance(d);
  Rng n1(77), n2(77);
  const Eigen::VectorXd a = remeasure(d, 1.5, variances, n1);
  const Eigen::VectorXd b = remeasure(d, 1.5, variances, n2);
  CHECK(a == b);
}

TEST_CASE("quadratic extrapolation is exact on exact quadratics") {
  CHECK(quadratic_extrapolate({0.0, 1.0, 2.0}, {1.0, 2.0, 5.0}, -1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
  Rng rng(97);
  for (int trial = 0; trial < 50; ++trial) {
    const double c0 = rng.normal(), c1 = rng.normal(), c2 = rng.normal();
    std::vector<double> lambdas, values;
    for (double l : {0.0, 0.5, 1.0, 1.5, 2.0}) {
      lambdas.push_back(l);
      values.push_back(c0 + c1 * l + c2 * l * l);
    }
    const double at = -1.0;
    const double expected = c0 + c1 * at + c2 * at * at;
    CHECK(quadratic_extrapolate(lambdas, values, at) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("config validation demands a grid anchored at zero") {
  SimexConfig config;
  config.lambda_grid = {0.5, 1.0, 2.0};
  CHECK_THROWS_AS(config.validate(), Error);
  config.lambda_grid = {0.0, 1.0};
  CHECK_THROWS_AS(config.validate(), Error);  // too few for a quadratic
  config.lambda_grid = {0.0, 0.5, 1.0};
  config.n_remeasure = 1;
  CHECK_THROWS_AS(config.validate(), Error);
}

TEST_CASE("lambda zero entry equals the naive fit exactly") {
  Rng rng(98);
  SurvivalDataset d = testutil::random_dataset(rng, 60, 1, 0.2);
  SimexConfig config;
  config.n_remeasure = 20;
  config.seed = 12;
  const SimexFit fit = fit_simex(d, config);
  for (Eigen::Index c = 0; c < fit.naive.coef.size(); ++c)
    CHECK(fit.lambda_means(0, c) == fit.naive.coef[c]);
  CHECK(fit.lambda.front() == 0.0);
  CHECK(fit.n_dropped[0] == 0);
}

TEST_CASE("zero injected error makes extrapolation collapse to the naive fit") {
  Rng rng(99);
  SurvivalDataset d = testutil::random_dataset(rng, 50, 1, 0.2);
  d.w = (d.x_true->array().round().max(0.0)).matrix();  // w/a == x exactly
  d.a = Eigen::VectorXd::Ones(50);
  const Eigen::VectorXd zero_var = Eigen::VectorXd::Zero(50);
  SimexConfig config;
  config.n_remeasure = 10;
  const SimexFit fit = fit_simex(d, config, zero_var);
  for (Eigen::Index c = 0; c < fit.extrapolated.size(); ++c)
    CHECK(fit.extrapolated[c] == doctest::Approx(fit.naive.coef[c]).epsilon(1e-8));
}

TEST_CASE("permuting the lambda grid changes nothing") {
  Rng rng(100);
  SurvivalDataset d = testutil::random_dataset(rng, 40, 1, 0.1);
  SimexConfig config;
  config.n_remeasure = 15;
  config.seed = 9;
  const SimexFit a = fit_simex(d, config);
  config.lambda_grid = {2.0, 0.5, 0.0, 1.5, 1.0};
  const SimexFit b = fit_simex(d, config);
  CHECK(a.extrapolated == b.extrapolated);
}

TEST_CASE("bootstrap over identical subjects has zero spread") {
  SurvivalDataset d;
  const int n = 25;
  d.u = Eigen::VectorXd::Ones(n);
  d.delta = Eigen::VectorXi::Ones(n);
  d.w = Eigen::VectorXd::Constant(n, 3.0);
  d.a = Eigen::VectorXd::Ones(n);
  d.z.resize(n, 0);
  SimexConfig config;
  config.n_remeasure = 8;
  config.seed = 21;
  const Eigen::VectorXd se = simex_bootstrap_se(d, config, 2, 5);
  CHECK(se[0] == 0.0);
}

}  // TEST_SUITE

TEST_SUITE("simex_long") {

TEST_CASE("extrapolated estimates land on the reference desk value") {
  // Scenario 2 without censoring at 150 replicates; the reference mean of
  // 0.4342 carries a Monte Carlo error quoted at 1000 replicates.
  SimScenario scenario;
  scenario.latent = {LatentLaw::Kind::gamma, 2.0 / 3.0, 3.0};
  scenario.n = 100;
  scenario.censor_frac = 0.0;
  scenario.n_reps = 150;
  scenario.seed = 7100;
  HarnessConfig config;
  config.n_threads = 2;
  config.simex.n_remeasure = 100;
  const ScenarioResult result = run_scenario(scenario, {Estimator::simex}, config);
  const auto& row = result.metrics.row(Estimator::simex, "beta_x");
  const double scale = std::sqrt(1000.0 / 150.0);
  INFO("simex mean ", row.mean_estimate);
  CHECK(std::fabs(row.mean_estimate - 0.4342) < 3.0 * scale * 0.0029);
  CHECK(row.n_failed == 0);
}

TEST_CASE("bootstrap standard errors calibrate against the replicate spread") {
  // Scenario-2 style data; compare bootstrap SEs with the Monte Carlo SD of
  // the extrapolated estimator and check CI coverage.
  SimScenario scenario;
  scenario.latent = {LatentLaw::Kind::gamma, 2.0 / 3.0, 3.0};
  scenario.n = 100;
  scenario.censor_frac = 0.0;
  scenario.seed = 7000;

  const int reps = 120;
  const Rng base(scenario.seed);
  std::vector<double> estimates(reps), ses(reps);
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng data_rng = base.child(static_cast<std::uint64_t>(rep)).child(0);
    const SurvivalDataset data = generate_dataset(scenario, data_rng);
    SimexConfig config;
    config.n_remeasure = 30;
    config.seed = base.child(static_cast<std::uint64_t>(rep)).child(1).seed();
    config.n_threads = 2;
    const SimexFit fit = fit_simex(data, config);
    const Eigen::VectorXd se = simex_bootstrap_se(data, config, 50, config.seed + 1);
    estimates[static_cast<std::size_t>(rep)] = fit.extrapolated[0];
    ses[static_cast<std::size_t>(rep)] = se[0];
    const double lo = fit.extrapolated[0] - 1.96 * se[0];
    const double hi = fit.extrapolated[0] + 1.96 * se[0];
    covered += (lo <= 0.5 && 0.5 <= hi) ? 1 : 0;
  }

  const double mc_sd = std::sqrt(variance(estimates));
  const double mean_se = mean(ses);
  INFO("mc sd ", mc_sd, " mean bootstrap se ", mean_se, " coverage ",
       covered * 100.0 / reps, "%");
  CHECK(mean_se > mc_sd / 2.0);
  CHECK(mean_se < mc_sd * 2.0);
  CHECK(covered >= static_cast<int>(0.85 * reps));
  CHECK(covered <= static_cast<int>(0.99 * reps) + 1);
}

}  // TEST_SUITE
