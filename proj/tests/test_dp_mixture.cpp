#include <doctest.h>

#include <cmath>
#include <vector>

#include "dpsurv/dp_mixture.hpp"
#include "dpsurv/rng.hpp"
#include "helpers.hpp"

using namespace dpsurv;
using testutil::mean;
using testutil::se_mean;
using testutil::variance;

namespace {

DpState two_component_state(double pi1, double a1, double b1, double a2, double b2) {
  DpState state;
  state.nu = Eigen::VectorXd::Constant(1, pi1);
  state.pi.resize(2);
  state.pi << pi1, 1.0 - pi1;
  state.atom_shape.resize(2);
  state.atom_shape << a1, a2;
  state.atom_scale.resize(2);
  state.atom_scale << b1, b2;
  state.alpha = 1.0;
  return state;
}

double gamma_logpdf_reference(double x, double shape, double scale) {
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) -
         std::lgamma(shape);
}

}  // namespace

TEST_SUITE("dp_mixture") {

TEST_CASE("truncation level follows the tail-mass rule") {
  CHECK(truncation_level(1.0, 0.01) == 6);
  CHECK(truncation_level(1e-9, 0.5) == 2);
  CHECK(truncation_level(1.0, std::exp(-4.0)) == 5);
  CHECK_THROWS_AS(truncation_level(0.0, 0.5), Error);
  CHECK_THROWS_AS(truncation_level(1.0, 1.5), Error);
}

TEST_CASE("repeated halving sticks") {
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(4, 0.5);
  const Eigen::VectorXd pi = weights_from_sticks(nu);
  REQUIRE(pi.size() == 5);
  CHECK(pi[0] == doctest::Approx(0.5));
  CHECK(pi[1] == doctest::Approx(0.25));
  CHECK(pi[2] == doctest::Approx(0.125));
  CHECK(pi[3] == doctest::Approx(0.0625));
  CHECK(pi[4] == doctest::Approx(0.0625));
}

TEST_CASE("degenerate stick pushes all mass to the first weight") {
  Eigen::VectorXd nu = Eigen::VectorXd::Constant(3, 1.0 - 1e-12);
  const Eigen::VectorXd pi = weights_from_sticks(nu);
  CHECK(pi[0] == doctest::Approx(1.0));
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("random sticks always land on the simplex") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_int(10));
    Eigen::VectorXd nu(k - 1);
    for (Eigen::Index j = 0; j < nu.size(); ++j) nu[j] = rng.uniform_pos();
    const Eigen::VectorXd pi = weights_from_sticks(nu);
    CHECK(std::fabs(pi.sum() - 1.0) <= 1e-12);
    CHECK(pi.minCoeff() >= 0.0);
  }
}

TEST_CASE("identical atoms allocate by the weights alone") {
  Rng rng(32);
  DpState state = two_component_state(0.3, 2.0, 1.0, 2.0, 1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.7);
  const int trials = 20000;
  int first = 0;
  for (int t = 0; t < trials; ++t) {
    sample_allocations(x, state, rng);
    first += state.alloc[0] == 0 ? 1 : 0;
  }
  const double freq = static_cast<double>(first) / trials;
  const double sd = std::sqrt(0.3 * 0.7 / trials);
  CHECK(std::fabs(freq - 0.3) < 4 * sd);
}

TEST_CASE("all weight on one component pins the allocations") {
  Rng rng(33);
  DpState state = two_component_state(0.5, 2.0, 1.0, 9.0, 0.3);
  state.pi << 1.0, 0.0;
  Eigen::VectorXd x(3);
  x << 0.2, 1.0, 6.0;
  sample_allocations(x, state, rng);
  for (int c : state.alloc) CHECK(c == 0);
}

TEST_CASE("separated atoms match the brute-force posterior probability") {
  Rng rng(34);
  DpState state = two_component_state(0.3, 2.0, 0.5, 10.0, 1.0);
  const double x_val = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, x_val);

  const double l1 = std::log(0.3) + gamma_logpdf_reference(x_val, 2.0, 0.5);
  const double l2 = std::log(0.7) + gamma_logpdf_reference(x_val, 10.0, 1.0);
  const double p1 = 1.0 / (1.0 + std::exp(l2 - l1));

  const int trials = 20000;
  int first = 0;
  for (int t = 0; t < trials; ++t) {
    sample_allocations(x, state, rng);
    first += state.alloc[0] == 0 ? 1 : 0;
  }
  const double freq = static_cast<double>(first) / trials;
  const double sd = std::sqrt(p1 * (1.0 - p1) / trials);
  CHECK(std::fabs(freq - p1) < 4 * sd);
}

TEST_CASE("sticks with no data reproduce their prior") {
  Rng rng(35);
  DpState state = two_component_state(0.5, 1.0, 1.0, 1.0, 1.0);
  state.nu.resize(3);
  state.pi.resize(4);
  state.atom_shape = Eigen::VectorXd::Ones(4);
  state.atom_scale = Eigen::VectorXd::Ones(4);
  state.alpha = 2.0;
  state.alloc.clear();

  std::vector<double> nu1(100000);
  for (auto& v : nu1) {
    sample_sticks(state, rng);
    v = state.nu[0];
  }
  // Beta(1, alpha) has mean 1/(1+alpha) and variance alpha/((1+a)^2 (2+a)).
  const double m = 1.0 / 3.0;
  const double sd = std::sqrt(2.0 / (9.0 * 4.0) / 100000.0);
  CHECK(std::fabs(mean(nu1) - m) < 4 * sd);
}

TEST_CASE("concentrated allocations drive the first stick toward one") {
  Rng rng(36);
  DpState state = two_component_state(0.5, 1.0, 1.0, 1.0, 1.0);
  const int n = 50;
  state.alloc.assign(n, 0);
  state.alpha = 0.05;

  std::vector<double> nu1(100000);
  for (auto& v : nu1) {
    sample_sticks(state, rng);
    v = state.nu[0];
  }
  // Beta(1 + n, alpha) mean.
  const double expected = (1.0 + n) / (1.0 + n + state.alpha);
  CHECK(std::fabs(mean(nu1) - expected) < 4 * se_mean(nu1));
  CHECK(mean(nu1) > 0.99);
}

TEST_CASE("stick means track the conjugate beta for mixed counts") {
  Rng rng(37);
  DpState state;
  state.nu = Eigen::VectorXd::Constant(2, 0.5);
  state.pi = weights_from_sticks(state.nu);
  state.atom_shape = Eigen::VectorXd::Ones(3);
  state.atom_scale = Eigen::VectorXd::Ones(3);
  state.alpha = 1.5;
  state.alloc = {0, 0, 0, 1, 1, 2, 2, 2, 2};  // counts 3, 2, 4

  std::vector<double> nu1(100000), nu2(100000);
  for (std::size_t t = 0; t < nu1.size(); ++t) {
    sample_sticks(state, rng);
    nu1[t] = state.nu[0];
    nu2[t] = state.nu[1];
  }
  const double m1 = (1.0 + 3.0) / (1.0 + 3.0 + state.alpha + 6.0);
  const double m2 = (1.0 + 2.0) / (1.0 + 2.0 + state.alpha + 4.0);
  CHECK(std::fabs(mean(nu1) - m1) < 4 * se_mean(nu1));
  CHECK(std::fabs(mean(nu2) - m2) < 4 * se_mean(nu2));
}

TEST_CASE("empty clusters are refreshed from the base measure") {
  Rng rng(38);
  PriorSpec prior;  // G0: Gamma(0.1, rate 0.1) on the shape and on the rate
  DpState state = two_component_state(0.5, 5.0, 5.0, 5.0, 5.0);
  state.alloc = {0, 0};  // cluster 1 stays empty
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  std::vector<MhScale> scales;

  std::vector<double> shape_draws(100000), rate_draws(100000);
  for (std::size_t t = 0; t < shape_draws.size(); ++t) {
    sample_atoms(x, state, prior, rng, scales);
    shape_draws[t] = state.atom_shape[1];
    rate_draws[t] = 1.0 / state.atom_scale[1];
  }
  // Gamma(0.1, rate 0.1): mean 1, variance 10 for the shape and the rate.
  CHECK(std::fabs(mean(shape_draws) - 1.0) < 4 * se_mean(shape_draws));
  CHECK(std::fabs(variance(shape_draws) - 10.0) < 4 * testutil::se_variance(shape_draws));
  CHECK(std::fabs(mean(rate_draws) - 1.0) < 4 * se_mean(rate_draws));
  CHECK(std::fabs(variance(rate_draws) - 10.0) < 4 * testutil::se_variance(rate_draws));
}

TEST_CASE("single well-populated cluster concentrates near the truth") {
  Rng rng(39);
  PriorSpec prior;
  const int n = 400;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::max(rng.gamma(2.0, 1.0), 1e-12);

  DpState state;
  state.nu.resize(0);
  state.pi = Eigen::VectorXd::Ones(1);
  state.atom_shape = Eigen::VectorXd::Ones(1);
  state.atom_scale = Eigen::VectorXd::Ones(1);
  state.alpha = 1.0;
  state.alloc.assign(n, 0);

  std::vector<MhScale> scales(1);
  scales[0].scale = 0.3;
  const int burn = 5000, keep = 20000;
  for (int t = 0; t < burn; ++t) sample_atoms(x, state, prior, rng, scales);
  scales[0].freeze();
  std::vector<double> a_draws, b_draws;
  a_draws.reserve(keep);
  b_draws.reserve(keep);
  for (int t = 0; t < keep; ++t) {
    sample_atoms(x, state, prior, rng, scales);
    a_draws.push_back(state.atom_shape[0]);
    b_draws.push_back(state.atom_scale[0]);
  }
  const double a_sd = std::sqrt(variance(a_draws));
  const double b_sd = std::sqrt(variance(b_draws));
  CHECK(std::fabs(mean(a_draws) - 2.0) < 3 * a_sd);
  CHECK(std::fabs(mean(b_draws) - 1.0) < 3 * b_sd);
}

TEST_CASE("atom proposals land in a workable acceptance band") {
  Rng rng(40);
  PriorSpec prior;
  const int n = 100;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::max(rng.gamma(2.0 / 3.0, 3.0), 1e-12);

  DpState state;
  state.nu.resize(0);
  state.pi = Eigen::VectorXd::Ones(1);
  state.atom_shape = Eigen::VectorXd::Ones(1);
  state.atom_scale = Eigen::VectorXd::Ones(1);
  state.alpha = 1.0;
  state.alloc.assign(n, 0);

  std::vector<MhScale> scales(1);
  scales[0].scale = 0.6;
  for (int t = 0; t < 2000; ++t) sample_atoms(x, state, prior, rng, scales);
  scales[0].freeze();
  scales[0].proposals = 0;
  scales[0].accepts = 0;
  for (int t = 0; t < 4000; ++t) sample_atoms(x, state, prior, rng, scales);
  CHECK(scales[0].acceptance_rate() >= 0.1);
  CHECK(scales[0].acceptance_rate() <= 0.6);
}

TEST_CASE("alpha draws calibrate against their prior draws") {
  // nu drawn from Beta(1, alpha = 1); 95% posterior intervals should cover
  // the truth in at least 90 of 100 replications.
  Rng rng(41);
  const int k = 20;
  int covered = 0;
  for (int rep = 0; rep < 100; ++rep) {
    DpState state;
    state.nu.resize(k - 1);
    for (Eigen::Index j = 0; j < state.nu.size(); ++j)
      state.nu[j] = std::clamp(rng.beta(1.0, 1.0), 1e-12, 1.0 - 1e-12);
    state.pi = weights_from_sticks(state.nu);
    state.atom_shape = Eigen::VectorXd::Ones(k);
    state.atom_scale = Eigen::VectorXd::Ones(k);
    state.alpha = 1.0;

    PriorSpec prior;  // lognormal(0, 1) on alpha
    MhScale scale;
    scale.scale = 0.5;
    std::vector<double> draws;
    draws.reserve(2000);
    for (int t = 0; t < 1000; ++t) sample_concentration(state, prior, rng, scale);
    scale.freeze();
    for (int t = 0; t < 2000; ++t) {
      sample_concentration(state, prior, rng, scale);
      draws.push_back(state.alpha);
    }
    std::sort(draws.begin(), draws.end());
    const double lo = draws[static_cast<std::size_t>(0.025 * draws.size())];
    const double hi = draws[static_cast<std::size_t>(0.975 * draws.size()) - 1];
    covered += (lo <= 1.0 && 1.0 <= hi) ? 1 : 0;
  }
  CHECK(covered >= 90);
}

TEST_CASE("vanishing prior variance pins alpha at its prior mode") {
  Rng rng(42);
  DpState state = two_component_state(0.5, 1.0, 1.0, 1.0, 1.0);
  PriorSpec prior;
  prior.mu_alpha = 0.7;
  prior.sigma2_alpha = 1e-12;
  state.alpha = std::exp(prior.mu_alpha);
  MhScale scale;
  for (int t = 0; t < 5000; ++t) {
    sample_concentration(state, prior, rng, scale);
    CHECK(std::fabs(state.alpha - std::exp(0.7)) < 1e-3);
  }
}

TEST_CASE("sticks near one pull alpha below its prior mean, quadrature agrees") {
  Rng rng(43);
  const int k = 6;
  DpState state;
  state.nu = Eigen::VectorXd::Constant(k - 1, 1.0 - 1e-3);
  state.pi = weights_from_sticks(state.nu);
  state.atom_shape = Eigen::VectorXd::Ones(k);
  state.atom_scale = Eigen::VectorXd::Ones(k);
  state.alpha = 1.0;

  PriorSpec prior;  // lognormal(0,1): prior mean exp(1/2)

  // Brute-force posterior mean of alpha by quadrature over the conditional.
  double sum_log1m = 0.0;
  for (Eigen::Index j = 0; j < state.nu.size(); ++j)
    sum_log1m += std::log1p(-state.nu[j]);
  auto log_density = [&](double a) {
    const double la = std::log(a);
    return (k - 1) * la + (a - 1.0) * sum_log1m - 0.5 * la * la - la;
  };
  double mass = 0.0, first = 0.0;
  const int grid_n = 200000;
  const double upper = 50.0;
  for (int g = 0; g < grid_n; ++g) {
    const double a = (g + 0.5) * upper / grid_n;
    const double f = std::exp(log_density(a));
    mass += f;
    first += a * f;
  }
  const double quadrature_mean = first / mass;
  const double prior_mean = std::exp(0.5);
  CHECK(quadrature_mean < prior_mean);

  MhScale scale;
  scale.scale = 0.5;
  for (int t = 0; t < 2000; ++t) sample_concentration(state, prior, rng, scale);
  scale.freeze();
  std::vector<double> draws(60000);
  for (auto& d : draws) {
    sample_concentration(state, prior, rng, scale);
    d = state.alpha;
  }
  // Autocorrelated chain: compare with a generous multiple of the naive SE.
  CHECK(std::fabs(mean(draws) - quadrature_mean) < 20 * se_mean(draws));
  CHECK(mean(draws) < prior_mean);
}

TEST_CASE("single-atom mixture density is the plain gamma") {
  DpState state;
  state.nu.resize(0);
  state.pi = Eigen::VectorXd::Ones(1);
  state.atom_shape = Eigen::VectorXd::Constant(1, 2.0);
  state.atom_scale = Eigen::VectorXd::Constant(1, 1.5);
  state.alpha = 1.0;

  Eigen::VectorXd grid(3);
  grid << 0.5, 1.0, 4.0;
  const Eigen::VectorXd density = mixture_density(grid, state);
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    CHECK(density[g] ==
          doctest::Approx(std::exp(gamma_logpdf_reference(grid[g], 2.0, 1.5))));
}

TEST_CASE("two equal atoms give the hand-summed bimodal density") {
  DpState state = two_component_state(0.5, 2.0, 1.0, 10.0, 1.0);
  Eigen::VectorXd grid(4);
  grid << 0.5, 1.0, 5.0, 9.0;
  const Eigen::VectorXd density = mixture_density(grid, state);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const double expected = 0.5 * std::exp(gamma_logpdf_reference(grid[g], 2.0, 1.0)) +
                            0.5 * std::exp(gamma_logpdf_reference(grid[g], 10.0, 1.0));
    CHECK(density[g] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mixture density integrates to one") {
  DpState state = two_component_state(0.65, 2.0, 1.0, 8.0, 0.7);
  const int grid_n = 20000;
  const double upper = 60.0;
  Eigen::VectorXd grid(grid_n);
  for (int g = 0; g < grid_n; ++g) grid[g] = (g + 0.5) * upper / grid_n;
  const Eigen::VectorXd density = mixture_density(grid, state);
  const double integral = density.sum() * upper / grid_n;
  CHECK(std::fabs(integral - 1.0) < 1e-3);
}

TEST_CASE("mixture density is invariant to label permutation") {
  DpState state = two_component_state(0.3, 2.0, 1.0, 10.0, 0.5);
  DpState permuted = state;
  permuted.pi << state.pi[1], state.pi[0];
  permuted.atom_shape << state.atom_shape[1], state.atom_shape[0];
  permuted.atom_scale << state.atom_scale[1], state.atom_scale[0];

  Eigen::VectorXd grid(5);
  grid << 0.1, 0.7, 2.0, 5.0, 12.0;
  const Eigen::VectorXd d1 = mixture_density(grid, state);
  const Eigen::VectorXd d2 = mixture_density(grid, permuted);
  for (Eigen::Index g = 0; g < grid.size(); ++g)
    CHECK(d1[g] == doctest::Approx(d2[g]).epsilon(1e-14));
}

TEST_CASE("full update sweep keeps the simplex invariant") {
  Rng rng(44);
  PriorSpec prior;
  DpState state = sample_prior_dp_state(5, 40, prior, rng);
  Eigen::VectorXd x(40);
  for (int i = 0; i < 40; ++i) x[i] = std::max(rng.gamma(1.5, 2.0), 1e-12);
  std::vector<MhScale> scales;
  MhScale alpha_scale;
  for (int t = 0; t < 500; ++t) {
    sample_allocations(x, state, rng);
    sample_sticks(state, rng);
    sample_atoms(x, state, prior, rng, scales);
    sample_concentration(state, prior, rng, alpha_scale);
    CHECK(std::fabs(state.pi.sum() - 1.0) <= 1e-12);
    CHECK(state.alpha > 0.0);
    CHECK_NOTHROW(state.validate());
  }
}

TEST_CASE("with no data the sweep leaves the prior invariant") {
  Rng rng(45);
  PriorSpec prior;  // alpha ~ lognormal(0, 1)
  const int k = 3;
  DpState state = sample_prior_dp_state(k, 0, prior, rng);
  Eigen::VectorXd x;  // empty

  std::vector<MhScale> scales;
  MhScale alpha_scale;
  const int sweeps = 100000;
  std::vector<double> nu_chain(sweeps), alpha_chain(sweeps), atom_chain(sweeps);
  for (int t = 0; t < sweeps; ++t) {
    sample_allocations(x, state, rng);
    sample_sticks(state, rng);
    sample_atoms(x, state, prior, rng, scales);
    sample_concentration(state, prior, rng, alpha_scale);
    nu_chain[static_cast<std::size_t>(t)] = state.nu[0];
    alpha_chain[static_cast<std::size_t>(t)] = state.alpha;
    atom_chain[static_cast<std::size_t>(t)] = state.atom_shape[0];
  }

  // Directly simulated prior draws with the same generator.
  std::vector<double> nu_prior(sweeps), alpha_prior(sweeps), atom_prior(sweeps);
  for (int t = 0; t < sweeps; ++t) {
    const double a = rng.lognormal(0.0, 1.0);
    alpha_prior[static_cast<std::size_t>(t)] = a;
    nu_prior[static_cast<std::size_t>(t)] = rng.beta(1.0, a);
    atom_prior[static_cast<std::size_t>(t)] = rng.gamma(prior.a0, 1.0 / prior.eta0);
  }

  // The alpha chain is a Metropolis walk; use a generous autocorrelation
  // allowance on its standard error.
  auto combined = [&](const std::vector<double>& chain, const std::vector<double>& prior_draws,
                      double chain_inflation) {
    const double se1 = se_mean(chain) * chain_inflation;
    const double se2 = se_mean(prior_draws);
    return std::sqrt(se1 * se1 + se2 * se2);
  };
  CHECK(std::fabs(mean(nu_chain) - mean(nu_prior)) < 4 * combined(nu_chain, nu_prior, 4.0));
  CHECK(std::fabs(mean(alpha_chain) - mean(alpha_prior)) <
        4 * combined(alpha_chain, alpha_prior, 8.0));
  CHECK(std::fabs(mean(atom_chain) - mean(atom_prior)) <
        4 * combined(atom_chain, atom_prior, 1.0));
}

TEST_CASE("degenerate masses raise DegenerateWeights") {
  Rng rng(46);
  DpState state = two_component_state(0.5, 1.0, 1.0, 1.0, 1.0);
  state.pi << 0.0, 0.0;  // force impossible masses
  Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS(sample_allocations(x, state, rng), Error);
}

}  // TEST_SUITE
