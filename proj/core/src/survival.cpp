#include "dpsurv/survival.hpp"

#include <cmath>
#include <limits>

namespace dpsurv {

IntervalExpansion expand_intervals(const SurvivalDataset& data, const HazardGrid& grid) {
  const Eigen::Index n = data.n();
  const Eigen::Index m1 = grid.n_intervals();

  IntervalExpansion out;
  out.n_subjects = n;
  out.n_intervals = m1;
  out.row_start.assign(static_cast<std::size_t>(n) + 1, 0);
  out.event_interval.assign(static_cast<std::size_t>(n), -1);

  for (Eigen::Index i = 0; i < n; ++i) {
    out.row_start[static_cast<std::size_t>(i)] = out.n_rows();
    const double u = data.u[i];
    for (Eigen::Index l = 0; l < m1; ++l) {
      const double left = grid.knots[l];
      if (u <= left) break;
      const double right = (l + 1 < m1) ? std::min(grid.knots[l + 1], u) : u;
      const double e = right - left;
      if (e <= 0.0) continue;
      out.interval.push_back(l);
      out.exposure.push_back(e);
      out.event.push_back(0);
    }
    if (data.delta[i] == 1) {
      // Last row holds the sliver of exposure ending at u_i.
      out.event.back() = 1;
      out.event_interval[static_cast<std::size_t>(i)] = out.interval.back();
    }
  }
  out.row_start[static_cast<std::size_t>(n)] = out.n_rows();
  return out;
}

Eigen::VectorXd linear_predictor(const SurvivalDataset& data,
                                 const Eigen::VectorXd& beta_z, double beta_x,
                                 const Eigen::VectorXd& x) {
  Eigen::VectorXd eta = beta_x * x;
  if (beta_z.size() > 0) eta += data.z * beta_z;
  return eta;
}

namespace {

void check_levels(const Eigen::VectorXd& levels) {
  for (Eigen::Index l = 0; l < levels.size(); ++l)
    if (!(levels[l] > 0.0) || !std::isfinite(levels[l]))
      throw Error(errc::non_finite_lik, "hazard level " + std::to_string(l) + " is not positive");
}

void check_eta(const Eigen::VectorXd& eta) {
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (!(std::fabs(eta[i]) <= kMaxLinearPredictor))
      throw Error(errc::non_finite_lik,
                  "linear predictor for subject " + std::to_string(i) +
                      " exceeds " + std::to_string(kMaxLinearPredictor));
}

}  // namespace

double loglik_direct(const SurvivalDataset& data, const HazardGrid& grid,
                     const Eigen::VectorXd& beta_z, double beta_x,
                     const Eigen::VectorXd& x) {
  check_levels(grid.levels);
  const Eigen::VectorXd eta = linear_predictor(data, beta_z, beta_x, x);
  check_eta(eta);

  double total = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double risk = std::exp(eta[i]);
    total -= grid.cumulative_hazard(data.u[i]) * risk;
    if (data.delta[i] == 1)
      total += std::log(grid.levels[grid.event_interval(data.u[i])]) + eta[i];
  }
  return total;
}

double loglik_poisson_trick(const IntervalExpansion& cells, const SurvivalDataset& data,
                            const HazardGrid& grid, const Eigen::VectorXd& beta_z,
                            double beta_x, const Eigen::VectorXd& x) {
  check_levels(grid.levels);
  const Eigen::VectorXd eta = linear_predictor(data, beta_z, beta_x, x);
  check_eta(eta);
  return detail::pe_loglik(cells, grid.levels, eta);
}

namespace detail {

double pe_loglik(const IntervalExpansion& cells, const Eigen::VectorXd& levels,
                 const Eigen::VectorXd& eta) noexcept {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < levels.size(); ++l)
    if (!(levels[l] > 0.0)) return neg_inf;

  // The Poisson cells of one subject share the factor exp(eta_i); summing
  // h_l e_il per subject before scaling keeps the value equal to the direct
  // evaluation down to the last bit instead of merely within rounding.
  double total = 0.0;
  for (Eigen::Index i = 0; i < cells.n_subjects; ++i) {
    if (!(std::fabs(eta[i]) <= kMaxLinearPredictor)) return neg_inf;
    const double risk = std::exp(eta[i]);
    double hazard_mass = 0.0;
    Eigen::Index event_at = -1;
    for (Eigen::Index r = cells.row_start[static_cast<std::size_t>(i)];
         r < cells.row_start[static_cast<std::size_t>(i) + 1]; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      hazard_mass += levels[cells.interval[ri]] * cells.exposure[ri];
      if (cells.event[ri]) event_at = cells.interval[ri];
    }
    total -= hazard_mass * risk;
    if (event_at >= 0) total += std::log(levels[event_at]) + eta[i];
  }
  return total;
}

}  // namespace detail

HazardStats hazard_sufficient_stats(const IntervalExpansion& cells,
                                    const Eigen::VectorXd& eta) {
  HazardStats stats;
  stats.events = Eigen::VectorXd::Zero(cells.n_intervals);
  stats.exposure = Eigen::VectorXd::Zero(cells.n_intervals);
  for (Eigen::Index i = 0; i < cells.n_subjects; ++i) {
    const double risk = std::exp(eta[i]);
    for (Eigen::Index r = cells.row_start[static_cast<std::size_t>(i)];
         r < cells.row_start[static_cast<std::size_t>(i) + 1]; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      stats.exposure[cells.interval[ri]] += cells.exposure[ri] * risk;
      if (cells.event[ri]) stats.events[cells.interval[ri]] += 1.0;
    }
  }
  return stats;
}

HazardStats hazard_sufficient_stats(const IntervalExpansion& cells,
                                    const SurvivalDataset& data,
                                    const Eigen::VectorXd& beta_z, double beta_x,
                                    const Eigen::VectorXd& x) {
  return hazard_sufficient_stats(cells, linear_predictor(data, beta_z, beta_x, x));
}

}  // namespace dpsurv
