#include <doctest.h>

#include <algorithm>
#include <vector>

#include "dpsurv/rng.hpp"
#include "dpsurv/types.hpp"
#include "helpers.hpp"

using namespace dpsurv;

namespace {

SurvivalDataset minimal_dataset() {
  SurvivalDataset d;
  d.u = Eigen::VectorXd::Constant(1, 1.0);
  d.delta = Eigen::VectorXi::Constant(1, 1);
  d.w = Eigen::VectorXd::Constant(1, 3.0);
  d.a = Eigen::VectorXd::Constant(1, 1.0);
  return d;
}

}  // namespace

TEST_SUITE("types") {

TEST_CASE("minimal valid record is accepted unchanged") {
  const SurvivalDataset d = validate_dataset(minimal_dataset());
  CHECK(d.n() == 1);
  CHECK(d.u[0] == 1.0);
  CHECK(d.delta[0] == 1);
  CHECK(d.w[0] == 3.0);
  CHECK(d.surrogate()[0] == 3.0);
}

TEST_CASE("zero time is rejected with field and index") {
  SurvivalDataset d = minimal_dataset();
  d.u[0] = 0.0;
  try {
    validate_dataset(d);
    FAIL("expected NonPositiveTime");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_positive_time);
    CHECK(std::string(e.what()).find("time[0]") != std::string::npos);
  }
}

TEST_CASE("non-integer count is rejected") {
  SurvivalDataset d = minimal_dataset();
  d.w[0] = 2.5;
  try {
    validate_dataset(d);
    FAIL("expected NegativeCount");
  } catch (const Error& e) {
    CHECK(e.code() == errc::negative_count);
  }
}

TEST_CASE("negative count and non-positive area are rejected") {
  SurvivalDataset d = minimal_dataset();
  d.w[0] = -1.0;
  CHECK_THROWS_AS(validate_dataset(d), Error);
  d = minimal_dataset();
  d.a[0] = 0.0;
  try {
    validate_dataset(d);
    FAIL("expected NonPositiveArea");
  } catch (const Error& e) {
    CHECK(e.code() == errc::non_positive_area);
  }
}

TEST_CASE("length mismatch names the offending field") {
  SurvivalDataset d = minimal_dataset();
  d.w.resize(2);
  d.w << 1.0, 2.0;
  try {
    validate_dataset(d);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == errc::length_mismatch);
    CHECK(std::string(e.what()).find("w") != std::string::npos);
  }
}

TEST_CASE("missing areas default to one") {
  SurvivalDataset d = minimal_dataset();
  d.a.resize(0);
  const SurvivalDataset v = validate_dataset(d);
  CHECK(v.a.size() == 1);
  CHECK(v.a[0] == 1.0);
}

TEST_CASE("x_true must be nonnegative and match length") {
  SurvivalDataset d = minimal_dataset();
  d.x_true = Eigen::VectorXd::Constant(1, -0.5);
  CHECK_THROWS_AS(validate_dataset(d), Error);
}

TEST_CASE("median knot for five event times") {
  Eigen::VectorXd u(5);
  u << 1, 2, 3, 4, 5;
  Eigen::VectorXi delta = Eigen::VectorXi::Ones(5);
  const HazardGrid grid = make_hazard_grid(u, delta, 1);
  REQUIRE(grid.knots.size() == 2);
  CHECK(grid.knots[0] == 0.0);
  CHECK(grid.knots[1] == doctest::Approx(3.0));
}

TEST_CASE("degenerate event times give the crude hazard") {
  Eigen::VectorXd u = Eigen::VectorXd::Ones(4);
  Eigen::VectorXi delta = Eigen::VectorXi::Ones(4);
  const HazardGrid grid = make_hazard_grid(u, delta, 1);
  REQUIRE(grid.knots.size() == 2);
  CHECK(grid.knots[0] == 0.0);
  CHECK(grid.knots[1] == 1.0);
  for (Eigen::Index l = 0; l < grid.levels.size(); ++l)
    CHECK(grid.levels[l] == doctest::Approx(1.0));
}

TEST_CASE("five inner knots sit at the event-time sextile quantiles") {
  Rng rng(11);
  const int n = 100;
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.exponential(1.0);
  Eigen::VectorXi delta = Eigen::VectorXi::Ones(n);

  const HazardGrid grid = make_hazard_grid(u, delta, 5);
  REQUIRE(grid.knots.size() == 6);

  // Independent quantile computation on the sorted event times.
  std::vector<double> sorted(u.data(), u.data() + n);
  std::sort(sorted.begin(), sorted.end());
  for (int l = 1; l <= 5; ++l) {
    const double p = l / 6.0;
    const double pos = p * (n - 1);
    const auto lo = static_cast<int>(pos);
    const double expected = sorted[lo] + (pos - lo) * (sorted[lo + 1] - sorted[lo]);
    CHECK(grid.knots[l] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("equal-length knots divide the observed range") {
  Eigen::VectorXd u(4);
  u << 1.0, 2.0, 5.0, 12.0;
  Eigen::VectorXi delta = Eigen::VectorXi::Ones(4);
  const HazardGrid grid = make_hazard_grid(u, delta, 2, KnotPlacement::equal_length);
  REQUIRE(grid.knots.size() == 3);
  CHECK(grid.knots[1] == doctest::Approx(4.0));
  CHECK(grid.knots[2] == doctest::Approx(8.0));
}

TEST_CASE("knots are strictly increasing for any input with events") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform_int(40));
    Eigen::VectorXd u(n);
    Eigen::VectorXi delta(n);
    for (int i = 0; i < n; ++i) {
      // coarse values force duplicate quantiles regularly
      u[i] = (1.0 + rng.uniform_int(5)) * 0.5;
      delta[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    delta[0] = 1;
    const int m = 1 + static_cast<int>(rng.uniform_int(6));
    const HazardGrid grid = make_hazard_grid(u, delta, m);
    for (Eigen::Index l = 1; l < grid.knots.size(); ++l)
      CHECK(grid.knots[l] > grid.knots[l - 1]);
    CHECK(grid.levels.size() == grid.knots.size());
  }
}

TEST_CASE("no events is an error") {
  Eigen::VectorXd u = Eigen::VectorXd::Ones(3);
  Eigen::VectorXi delta = Eigen::VectorXi::Zero(3);
  try {
    make_hazard_grid(u, delta, 2);
    FAIL("expected NoEvents");
  } catch (const Error& e) {
    CHECK(e.code() == errc::no_events);
  }
}

TEST_CASE("cumulative hazard integrates the step function") {
  HazardGrid grid;
  grid.knots.resize(3);
  grid.knots << 0.0, 1.0, 3.0;
  grid.levels.resize(3);
  grid.levels << 2.0, 0.5, 1.0;
  CHECK(grid.cumulative_hazard(0.5) == doctest::Approx(1.0));
  CHECK(grid.cumulative_hazard(1.0) == doctest::Approx(2.0));
  CHECK(grid.cumulative_hazard(2.0) == doctest::Approx(2.5));
  CHECK(grid.cumulative_hazard(5.0) == doctest::Approx(2.0 + 1.0 + 2.0));
}

TEST_CASE("event interval uses the right-closed convention at knots") {
  HazardGrid grid;
  grid.knots.resize(3);
  grid.knots << 0.0, 1.0, 3.0;
  grid.levels = Eigen::VectorXd::Ones(3);
  CHECK(grid.interval_of(1.0) == 1);
  CHECK(grid.event_interval(1.0) == 0);
  CHECK(grid.event_interval(1.5) == 1);
  CHECK(grid.event_interval(3.0) == 1);
  CHECK(grid.event_interval(3.5) == 2);
}

TEST_CASE("prior and model config validation") {
  PriorSpec prior;
  CHECK_NOTHROW(prior.validate());
  prior.sigma2_x = 0.0;
  CHECK_THROWS_AS(prior.validate(), Error);

  ModelConfig config;
  CHECK_NOTHROW(config.validate());
  config.thin = 0;
  CHECK_THROWS_AS(config.validate(), Error);
  config = ModelConfig{};
  config.n_burn = config.n_iter + 1;
  CHECK_THROWS_AS(config.validate(), Error);
  config = ModelConfig{};
  config.k_trunc = 1;  // parametric comparator stays allowed
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("cauchy prior density at zero is 1/pi for unit scale") {
  PriorSpec prior;
  prior.beta_x_family = BetaXPriorFamily::cauchy;
  prior.mu_x = 0.0;
  prior.sigma2_x = 1.0;
  CHECK(prior.prior_density_beta_x(0.0) ==
        doctest::Approx(1.0 / 3.14159265358979323846).epsilon(1e-12));
}

}  // TEST_SUITE
