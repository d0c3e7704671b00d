#include <benchmark/benchmark.h>

#include "dpsurv/cox.hpp"
#include "dpsurv/mcmc.hpp"
#include "dpsurv/simulate.hpp"
#include "dpsurv/survival.hpp"

namespace {

dpsurv::SurvivalDataset scenario2_data(int n) {
  dpsurv::SimScenario scenario;
  scenario.latent = {dpsurv::LatentLaw::Kind::gamma, 2.0 / 3.0, 3.0};
  scenario.n = n;
  scenario.censor_frac = 0.2;
  scenario.seed = 7;
  dpsurv::Rng rng(scenario.seed);
  return dpsurv::generate_dataset(scenario, rng, 0.28);
}

void bm_loglik_direct(benchmark::State& state) {
  const auto data = scenario2_data(static_cast<int>(state.range(0)));
  const auto grid = dpsurv::make_hazard_grid(data.u, data.delta, 5);
  Eigen::VectorXd beta_z(1);
  beta_z << 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dpsurv::loglik_direct(data, grid, beta_z, 0.5, *data.x_true));
  }
}
BENCHMARK(bm_loglik_direct)->Arg(100)->Arg(1000);

void bm_gibbs_sweep(benchmark::State& state) {
  const auto data = scenario2_data(static_cast<int>(state.range(0)));
  dpsurv::ModelConfig config;
  config.m_intervals = 5;
  config.k_trunc = 5;
  config.n_iter = 10;
  config.n_burn = 0;
  config.thin = 1;
  const auto grid = dpsurv::make_hazard_grid(data.u, data.delta, 5,
                                             dpsurv::KnotPlacement::equal_length);
  dpsurv::GibbsSampler sampler(data, grid, config, dpsurv::PriorSpec{}, dpsurv::Rng(1));
  for (auto _ : state) sampler.sweep();
}
BENCHMARK(bm_gibbs_sweep)->Arg(100)->Arg(700);

void bm_cox_fit(benchmark::State& state) {
  const auto data = scenario2_data(static_cast<int>(state.range(0)));
  Eigen::MatrixXd covs(data.n(), 2);
  covs.col(0) = data.surrogate();
  covs.col(1) = data.z.col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpsurv::fit_cox(data.u, data.delta, covs));
  }
}
BENCHMARK(bm_cox_fit)->Arg(100)->Arg(1000);

void bm_rng_gamma(benchmark::State& state) {
  dpsurv::Rng rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(rng.gamma(0.7, 2.0));
}
BENCHMARK(bm_rng_gamma);

}  // namespace

BENCHMARK_MAIN();
