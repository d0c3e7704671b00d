#include "dpsurv/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace dpsurv {

namespace {

std::string at_index(const char* field, Eigen::Index i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

// Linearly interpolated empirical quantile (R type 7) of a sorted vector.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<Eigen::Index>(sorted.size());
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const auto lo = static_cast<Eigen::Index>(std::floor(pos));
  const auto hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

SurvivalDataset validate_dataset(SurvivalDataset raw) {
  const Eigen::Index n = raw.u.size();
  if (raw.delta.size() != n)
    throw Error(errc::length_mismatch,
                "delta has length " + std::to_string(raw.delta.size()) +
                    ", expected " + std::to_string(n));
  if (raw.w.size() != n)
    throw Error(errc::length_mismatch,
                "w has length " + std::to_string(raw.w.size()) + ", expected " +
                    std::to_string(n));
  if (raw.a.size() == 0) {
    raw.a = Eigen::VectorXd::Ones(n);
  } else if (raw.a.size() != n) {
    throw Error(errc::length_mismatch,
                "area has length " + std::to_string(raw.a.size()) +
                    ", expected " + std::to_string(n));
  }
  if (raw.z.size() != 0 && raw.z.rows() != n)
    throw Error(errc::length_mismatch,
                "z has " + std::to_string(raw.z.rows()) + " rows, expected " +
                    std::to_string(n));
  if (raw.z.size() == 0) raw.z.resize(n, 0);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(raw.u[i] > 0.0) || !std::isfinite(raw.u[i]))
      throw Error(errc::non_positive_time, at_index("time", i) + " = " + std::to_string(raw.u[i]));
    if (raw.delta[i] != 0 && raw.delta[i] != 1)
      throw Error(errc::invalid_argument, at_index("event", i) + " must be 0 or 1");
    if (!(raw.w[i] >= 0.0) || raw.w[i] != std::floor(raw.w[i]) || !std::isfinite(raw.w[i]))
      throw Error(errc::negative_count,
                  at_index("w", i) + " = " + std::to_string(raw.w[i]) +
                      " is not a nonnegative integer");
    if (!(raw.a[i] > 0.0) || !std::isfinite(raw.a[i]))
      throw Error(errc::non_positive_area, at_index("area", i) + " = " + std::to_string(raw.a[i]));
  }
  if (raw.x_true) {
    if (raw.x_true->size() != n)
      throw Error(errc::length_mismatch,
                  "x_true has length " + std::to_string(raw.x_true->size()) +
                      ", expected " + std::to_string(n));
    for (Eigen::Index i = 0; i < n; ++i)
      if (!((*raw.x_true)[i] >= 0.0))
        throw Error(errc::invalid_argument, at_index("x_true", i) + " must be >= 0");
  }
  return raw;
}

Eigen::Index HazardGrid::interval_of(double t) const {
  // knots are strictly increasing with knots[0] == 0; last interval open.
  Eigen::Index lo = 0;
  Eigen::Index hi = knots.size();  // one past the last knot
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    if (t >= knots[mid])
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

Eigen::Index HazardGrid::event_interval(double t) const {
  const Eigen::Index l = interval_of(t);
  if (l > 0 && t == knots[l]) return l - 1;
  return l;
}

double HazardGrid::cumulative_hazard(double t) const {
  double total = 0.0;
  const Eigen::Index m1 = n_intervals();
  for (Eigen::Index l = 0; l < m1; ++l) {
    const double left = knots[l];
    if (t <= left) break;
    const double right = (l + 1 < m1) ? std::min(knots[l + 1], t) : t;
    total += levels[l] * (right - left);
  }
  return total;
}

void HazardGrid::validate() const {
  if (knots.size() == 0 || knots[0] != 0.0)
    throw Error(errc::invalid_argument, "first knot must be exactly 0");
  for (Eigen::Index l = 1; l < knots.size(); ++l)
    if (!(knots[l] > knots[l - 1]))
      throw Error(errc::invalid_argument, "knots must be strictly increasing");
  if (levels.size() != knots.size())
    throw Error(errc::length_mismatch, "levels count must equal knots count");
  for (Eigen::Index l = 0; l < levels.size(); ++l)
    if (!(levels[l] > 0.0))
      throw Error(errc::invalid_argument, "hazard levels must be positive");
}

HazardGrid make_hazard_grid(const Eigen::VectorXd& u, const Eigen::VectorXi& delta,
                            int m, KnotPlacement placement) {
  if (m < 1) throw Error(errc::invalid_argument, "need at least one inner knot");
  if (u.size() != delta.size())
    throw Error(errc::length_mismatch, "u and delta lengths differ");

  double event_sum = 0.0;
  std::vector<double> event_times;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (delta[i] == 1) {
      event_times.push_back(u[i]);
      event_sum += 1.0;
    }
  }
  if (event_times.empty()) throw Error(errc::no_events, "dataset has no events");

  std::vector<double> inner;
  inner.reserve(static_cast<std::size_t>(m));
  if (placement == KnotPlacement::event_quantiles) {
    std::sort(event_times.begin(), event_times.end());
    for (int l = 1; l <= m; ++l)
      inner.push_back(quantile_sorted(event_times, static_cast<double>(l) / (m + 1)));
  } else {
    const double top = u.maxCoeff();
    for (int l = 1; l <= m; ++l)
      inner.push_back(top * static_cast<double>(l) / (m + 1));
  }

  // Collapse duplicates and anything at or below zero.
  std::vector<double> knots{0.0};
  for (double k : inner)
    if (k > knots.back()) knots.push_back(k);

  HazardGrid grid;
  grid.knots = Eigen::Map<const Eigen::VectorXd>(knots.data(), static_cast<Eigen::Index>(knots.size()));
  const double crude = event_sum / u.sum();
  grid.levels = Eigen::VectorXd::Constant(grid.knots.size(), crude);
  grid.validate();
  return grid;
}

void PriorSpec::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw Error(errc::invalid_argument, std::string(name) + " must be > 0");
  };
  positive(a_h, "a_h");
  positive(b_h, "b_h");
  positive(sigma2_beta, "sigma2_beta");
  positive(sigma2_x, "sigma2_x");
  positive(sigma2_alpha, "sigma2_alpha");
  positive(a0, "a0");
  positive(eta0, "eta0");
  positive(b0, "b0");
  positive(gamma0, "gamma0");
}

double PriorSpec::log_prior_beta_x(double value) const {
  if (beta_x_family == BetaXPriorFamily::normal) {
    const double d = value - mu_x;
    return -0.5 * std::log(2.0 * std::numbers::pi * sigma2_x) - 0.5 * d * d / sigma2_x;
  }
  const double scale = std::sqrt(sigma2_x);
  const double t = (value - mu_x) / scale;
  return -std::log(std::numbers::pi * scale * (1.0 + t * t));
}

double PriorSpec::prior_density_beta_x(double value) const {
  return std::exp(log_prior_beta_x(value));
}

void ModelConfig::validate() const {
  if (m_intervals < 1) throw Error(errc::invalid_argument, "m_intervals must be >= 1");
  if (k_trunc < 1) throw Error(errc::invalid_argument, "k_trunc must be >= 1");
  if (n_iter <= 0) throw Error(errc::invalid_argument, "n_iter must be > 0");
  if (n_burn < 0 || n_burn > n_iter)
    throw Error(errc::invalid_argument, "n_burn must lie in [0, n_iter]");
  if (thin < 1) throw Error(errc::invalid_argument, "thin must be >= 1");
}

}  // namespace dpsurv
