#include "dpsurv/dp_mixture.hpp"

#include <algorithm>
#include <limits>

namespace dpsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void DpState::validate() const {
  const int k = K();
  if (k < 1) throw Error(errc::invalid_argument, "mixture needs at least one component");
  if (nu.size() != k - 1)
    throw Error(errc::length_mismatch, "nu must have K-1 entries");
  for (Eigen::Index j = 0; j < nu.size(); ++j)
    if (!(nu[j] > 0.0 && nu[j] < 1.0))
      throw Error(errc::invalid_argument, "stick fractions must lie in (0,1)");
  if (atom_shape.size() != k || atom_scale.size() != k)
    throw Error(errc::length_mismatch, "atom vectors must have K entries");
  for (int j = 0; j < k; ++j)
    if (!(atom_shape[j] > 0.0 && atom_scale[j] > 0.0))
      throw Error(errc::invalid_argument, "atom parameters must be positive");
  if (!(alpha > 0.0)) throw Error(errc::invalid_argument, "alpha must be positive");
  if (std::fabs(pi.sum() - 1.0) > 1e-12)
    throw Error(errc::invalid_argument, "weights must sum to 1");
  for (int c : alloc)
    if (c < 0 || c >= k)
      throw Error(errc::invalid_argument, "allocation outside 0..K-1");
}

int truncation_level(double alpha, double eps) {
  if (!(alpha > 0.0)) throw Error(errc::invalid_argument, "alpha must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(errc::invalid_argument, "eps must lie in (0,1)");
  // Nudge below exact integers so K = 1 - alpha log(eps) is not rounded up by
  // floating-point noise.
  const double k = std::ceil(1.0 - alpha * std::log(eps) - 1e-9);
  return std::max(2, static_cast<int>(k));
}

Eigen::VectorXd weights_from_sticks(const Eigen::VectorXd& nu) {
  const Eigen::Index k = nu.size() + 1;
  Eigen::VectorXd pi(k);
  double remaining = 1.0;
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    pi[j] = nu[j] * remaining;
    remaining *= 1.0 - nu[j];
  }
  pi[k - 1] = remaining;
  return pi;
}

double gamma_log_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - shape * std::log(scale) -
         std::lgamma(shape);
}

DpState sample_prior_dp_state(int k_trunc, Eigen::Index n, const PriorSpec& prior,
                              Rng& rng, bool uniform_alloc) {
  DpState state;
  state.alpha = rng.lognormal(prior.mu_alpha, std::sqrt(prior.sigma2_alpha));
  state.nu.resize(k_trunc - 1);
  for (Eigen::Index j = 0; j < state.nu.size(); ++j) {
    double v = rng.beta(1.0, state.alpha);
    state.nu[j] = std::clamp(v, 1e-12, 1.0 - 1e-12);
  }
  state.pi = weights_from_sticks(state.nu);
  state.atom_shape.resize(k_trunc);
  state.atom_scale.resize(k_trunc);
  for (int k = 0; k < k_trunc; ++k) {
    state.atom_shape[k] = std::max(rng.gamma(prior.a0, 1.0 / prior.eta0), 1e-300);
    state.atom_scale[k] =
        1.0 / std::clamp(rng.gamma(prior.b0, 1.0 / prior.gamma0), 1e-12, 1e300);
  }
  state.alloc.resize(static_cast<std::size_t>(n));
  for (auto& c : state.alloc) {
    if (uniform_alloc || k_trunc == 1) {
      c = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k_trunc)));
    } else {
      double target = rng.uniform();
      double cum = 0.0;
      c = k_trunc - 1;
      for (int k = 0; k < k_trunc; ++k) {
        cum += state.pi[k];
        if (target < cum) {
          c = k;
          break;
        }
      }
    }
  }
  return state;
}

void sample_allocations(const Eigen::VectorXd& x, DpState& state, Rng& rng) {
  const int k_trunc = state.K();
  state.alloc.resize(static_cast<std::size_t>(x.size()));
  if (k_trunc == 1) {
    std::fill(state.alloc.begin(), state.alloc.end(), 0);
    return;
  }

  // Per-component constants hoisted out of the subject loop.
  Eigen::VectorXd log_pi(k_trunc), shape_m1(k_trunc), inv_scale(k_trunc), norm(k_trunc);
  for (int k = 0; k < k_trunc; ++k) {
    log_pi[k] = state.pi[k] > 0.0 ? std::log(state.pi[k]) : kNegInf;
    shape_m1[k] = state.atom_shape[k] - 1.0;
    inv_scale[k] = 1.0 / state.atom_scale[k];
    norm[k] = state.atom_shape[k] * std::log(state.atom_scale[k]) +
              std::lgamma(state.atom_shape[k]);
  }

  Eigen::VectorXd logp(k_trunc), p(k_trunc);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    double best = kNegInf;
    for (int k = 0; k < k_trunc; ++k) {
      logp[k] = log_pi[k] + shape_m1[k] * lx - x[i] * inv_scale[k] - norm[k];
      best = std::max(best, logp[k]);
    }
    if (!(best > kNegInf) || std::isnan(best))
      throw Error(errc::degenerate_weights,
                  "all component masses vanish for subject " + std::to_string(i));
    double sum = 0.0;
    for (int k = 0; k < k_trunc; ++k) {
      p[k] = std::exp(logp[k] - best);
      sum += p[k];
    }
    double target = rng.uniform() * sum;
    int chosen = k_trunc - 1;
    double cum = 0.0;
    for (int k = 0; k < k_trunc; ++k) {
      cum += p[k];
      if (target < cum) {
        chosen = k;
        break;
      }
    }
    state.alloc[static_cast<std::size_t>(i)] = chosen;
  }
}

void sample_sticks(DpState& state, Rng& rng) {
  const int k_trunc = state.K();
  if (k_trunc == 1) return;

  Eigen::VectorXi counts = Eigen::VectorXi::Zero(k_trunc);
  for (int c : state.alloc) counts[c] += 1;

  // tail[k] = number allocated beyond component k.
  double tail = 0.0;
  for (int k = k_trunc - 1; k >= 1; --k) tail += counts[k];
  for (int k = 0; k < k_trunc - 1; ++k) {
    const double v = rng.beta(1.0 + counts[k], state.alpha + tail);
    state.nu[k] = std::clamp(v, 1e-12, 1.0 - 1e-12);
    tail -= counts[k + 1];
  }
  state.pi = weights_from_sticks(state.nu);
}

namespace {

struct ClusterStats {
  double n = 0.0;
  double sum_x = 0.0;
  double sum_log_x = 0.0;
};

// log p(x members | a, b) + log G0(a, b), up to constants in the data.
double atom_log_target(double a, double b, const ClusterStats& s, const PriorSpec& prior) {
  double value = (a - 1.0) * s.sum_log_x - s.sum_x / b -
                 s.n * (a * std::log(b) + std::lgamma(a));
  value += (prior.a0 - 1.0) * std::log(a) - prior.eta0 * a;
  value += -(prior.b0 + 1.0) * std::log(b) - prior.gamma0 / b;
  return value;
}

}  // namespace

void sample_atoms(const Eigen::VectorXd& x, DpState& state, const PriorSpec& prior,
                  Rng& rng, std::vector<MhScale>& scales) {
  const int k_trunc = state.K();
  if (static_cast<int>(scales.size()) != k_trunc)
    scales.resize(static_cast<std::size_t>(k_trunc));

  std::vector<ClusterStats> stats(static_cast<std::size_t>(k_trunc));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto& s = stats[static_cast<std::size_t>(state.alloc[static_cast<std::size_t>(i)])];
    s.n += 1.0;
    s.sum_x += x[i];
    s.sum_log_x += std::log(x[i]);
  }

  for (int k = 0; k < k_trunc; ++k) {
    const auto& s = stats[static_cast<std::size_t>(k)];
    if (s.n == 0.0) {
      // Refresh empty clusters from the base measure.
      state.atom_shape[k] = std::max(rng.gamma(prior.a0, 1.0 / prior.eta0), 1e-300);
      state.atom_scale[k] =
          1.0 / std::clamp(rng.gamma(prior.b0, 1.0 / prior.gamma0), 1e-12, 1e300);
      continue;
    }
    auto& mh = scales[static_cast<std::size_t>(k)];
    const double a = state.atom_shape[k];
    const double b = state.atom_scale[k];
    const double a_new = a * std::exp(mh.scale * rng.normal());
    const double b_new = b * std::exp(mh.scale * rng.normal());
    // Jacobian of the log transform: + log a + log b on each side.
    const double log_ratio = atom_log_target(a_new, b_new, s, prior) -
                             atom_log_target(a, b, s, prior) +
                             std::log(a_new) - std::log(a) +
                             std::log(b_new) - std::log(b);
    const bool accept = std::isfinite(log_ratio) && std::log(rng.uniform_pos()) < log_ratio;
    if (accept) {
      state.atom_shape[k] = a_new;
      state.atom_scale[k] = b_new;
    }
    mh.tick(accept);
  }
}

void sample_concentration(DpState& state, const PriorSpec& prior, Rng& rng,
                          MhScale& scale) {
  double sum_log1m = 0.0;
  for (Eigen::Index j = 0; j < state.nu.size(); ++j)
    sum_log1m += std::log1p(-state.nu[j]);
  const double k_minus_1 = static_cast<double>(state.K() - 1);
  const double sd_alpha = std::sqrt(prior.sigma2_alpha);

  auto log_target = [&](double log_a) {
    const double a = std::exp(log_a);
    // Includes the log-alpha Jacobian; the lognormal prior on alpha becomes a
    // normal density in log_a.
    const double z = (log_a - prior.mu_alpha) / sd_alpha;
    return k_minus_1 * log_a + (a - 1.0) * sum_log1m - 0.5 * z * z;
  };

  const double log_a = std::log(state.alpha);
  const double log_a_new = log_a + scale.scale * rng.normal();
  const double log_ratio = log_target(log_a_new) - log_target(log_a);
  const bool accept = std::isfinite(log_ratio) && std::log(rng.uniform_pos()) < log_ratio;
  if (accept) state.alpha = std::exp(log_a_new);
  scale.tick(accept);
}

Eigen::VectorXd mixture_density(const Eigen::VectorXd& x_grid, const DpState& state) {
  Eigen::VectorXd density = Eigen::VectorXd::Zero(x_grid.size());
  for (Eigen::Index g = 0; g < x_grid.size(); ++g) {
    if (!(x_grid[g] > 0.0))
      throw Error(errc::invalid_argument, "density grid values must be positive");
    double total = 0.0;
    for (int k = 0; k < state.K(); ++k)
      total += state.pi[k] *
               std::exp(gamma_log_pdf(x_grid[g], state.atom_shape[k], state.atom_scale[k]));
    density[g] = total;
  }
  return density;
}

}  // namespace dpsurv
