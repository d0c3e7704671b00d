#include "dpsurv/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dpsurv/parallel.hpp"

namespace dpsurv {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLatentFloor = 1e-300;
// Conjugate-proposal rejection monitoring: subjects rejected on more than 95%
// of the last 200 burn-in proposals switch to a random walk.
constexpr int kFallbackWindow = 200;
constexpr double kFallbackRate = 0.05;
}  // namespace

std::vector<std::string> McmcDraws::column_names() const {
  std::vector<std::string> names;
  names.emplace_back("beta_x");
  for (Eigen::Index j = 0; j < beta_z.cols(); ++j)
    names.push_back("beta_z" + std::to_string(j + 1));
  for (Eigen::Index l = 0; l < hazard.cols(); ++l)
    names.push_back("h" + std::to_string(l));
  names.emplace_back("alpha");
  for (Eigen::Index k = 0; k < pi.cols(); ++k)
    names.push_back("pi" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < atom_shape.cols(); ++k)
    names.push_back("atom_shape" + std::to_string(k + 1));
  for (Eigen::Index k = 0; k < atom_scale.cols(); ++k)
    names.push_back("atom_scale" + std::to_string(k + 1));
  for (Eigen::Index i = 0; i < latent_x.cols(); ++i)
    names.push_back("x" + std::to_string(i + 1));
  return names;
}

Eigen::MatrixXd McmcDraws::to_matrix() const {
  const Eigen::Index s = n_draws();
  const Eigen::Index p = 1 + beta_z.cols() + hazard.cols() + 1 + pi.cols() +
                         atom_shape.cols() + atom_scale.cols() + latent_x.cols();
  Eigen::MatrixXd out(s, p);
  Eigen::Index c = 0;
  out.col(c++) = beta_x;
  for (Eigen::Index j = 0; j < beta_z.cols(); ++j) out.col(c++) = beta_z.col(j);
  for (Eigen::Index l = 0; l < hazard.cols(); ++l) out.col(c++) = hazard.col(l);
  out.col(c++) = alpha;
  for (Eigen::Index k = 0; k < pi.cols(); ++k) out.col(c++) = pi.col(k);
  for (Eigen::Index k = 0; k < atom_shape.cols(); ++k) out.col(c++) = atom_shape.col(k);
  for (Eigen::Index k = 0; k < atom_scale.cols(); ++k) out.col(c++) = atom_scale.col(k);
  for (Eigen::Index i = 0; i < latent_x.cols(); ++i) out.col(c++) = latent_x.col(i);
  return out;
}

Eigen::VectorXd update_hazard(const HazardStats& stats, const PriorSpec& prior, Rng& rng) {
  Eigen::VectorXd levels(stats.events.size());
  for (Eigen::Index l = 0; l < levels.size(); ++l) {
    const double shape = prior.a_h + stats.events[l];
    const double rate = prior.b_h + stats.exposure[l];
    levels[l] = std::max(rng.gamma(shape, 1.0 / rate), 1e-300);
  }
  return levels;
}

GibbsSampler::GibbsSampler(SurvivalDataset data, HazardGrid grid, ModelConfig config,
                           PriorSpec prior, Rng rng, SamplerOptions options)
    : data_(std::move(data)),
      grid_(std::move(grid)),
      config_(config),
      prior_(prior),
      rng_(rng),
      options_(options) {
  config_.validate();
  prior_.validate();
  grid_.validate();

  const Eigen::Index n = data_.n();
  const Eigen::Index j_cov = data_.n_covariates();

  state_.hazard = grid_.levels;
  state_.beta_z = Eigen::VectorXd::Zero(j_cov);
  state_.beta_x = 0.0;
  state_.x = ((data_.w.array() + 0.5) / data_.a.array()).matrix();
  state_.dp = sample_prior_dp_state(config_.k_trunc, n, prior_, rng_,
                                    /*uniform_alloc=*/true);

  beta_scales_.assign(static_cast<std::size_t>(j_cov) + 1, MhScale{});
  for (auto& s : beta_scales_) s.scale = options_.beta_scale;
  atom_scales_.assign(static_cast<std::size_t>(config_.k_trunc), MhScale{});
  for (auto& s : atom_scales_) s.scale = options_.atom_scale;
  alpha_scale_.scale = options_.alpha_scale;

  joint_scale_.scale = options_.joint_scale;
  shift_scale_.scale = options_.shift_scale;
  surrogate_center_ = n > 0 ? state_.x.mean() : 0.0;

  use_rw_.assign(static_cast<std::size_t>(n), 0);
  latent_rw_scales_.assign(static_cast<std::size_t>(n), MhScale{});
  for (auto& s : latent_rw_scales_) s.scale = options_.latent_rw_scale;
  window_rejects_.assign(static_cast<std::size_t>(n), 0);

  adapting_ = options_.adapt;
  if (!adapting_) end_adaptation();

  rebuild_data_caches();
}

void GibbsSampler::rebuild_data_caches() {
  cells_ = expand_intervals(data_, grid_);
  refresh_caches();
}

void GibbsSampler::refresh_caches() {
  refresh_hazard_caches();
  eta_ = linear_predictor(data_, state_.beta_z, state_.beta_x, state_.x);
}

void GibbsSampler::refresh_hazard_caches() {
  const Eigen::Index n = data_.n();
  cumhaz_.resize(n);
  log_h_event_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    for (Eigen::Index r = cells_.row_start[static_cast<std::size_t>(i)];
         r < cells_.row_start[static_cast<std::size_t>(i) + 1]; ++r) {
      const auto ri = static_cast<std::size_t>(r);
      total += state_.hazard[cells_.interval[ri]] * cells_.exposure[ri];
    }
    cumhaz_[i] = total;
    const Eigen::Index ev = cells_.event_interval[static_cast<std::size_t>(i)];
    log_h_event_[i] = ev >= 0 ? std::log(state_.hazard[ev]) : 0.0;
  }
}

double GibbsSampler::survival_loglik(const Eigen::VectorXd& eta) const noexcept {
  double total = 0.0;
  for (Eigen::Index i = 0; i < data_.n(); ++i) {
    if (!(std::fabs(eta[i]) <= kMaxLinearPredictor)) return kNegInf;
    total -= cumhaz_[i] * std::exp(eta[i]);
    if (data_.delta[i] == 1) total += log_h_event_[i] + eta[i];
  }
  return total;
}

void GibbsSampler::update_hazard_levels() {
  const HazardStats stats = hazard_sufficient_stats(cells_, eta_);
  state_.hazard = dpsurv::update_hazard(stats, prior_, rng_);
  refresh_hazard_caches();
}

void GibbsSampler::update_beta() {
  const Eigen::Index j_cov = state_.beta_z.size();
  double loglik = survival_loglik(eta_);

  for (Eigen::Index comp = 0; comp <= j_cov; ++comp) {
    auto& mh = beta_scales_[static_cast<std::size_t>(comp)];
    const bool is_beta_x = comp == j_cov;

    const double current = is_beta_x ? state_.beta_x : state_.beta_z[comp];
    const double proposed = current + mh.scale * rng_.normal();
    const double shift = proposed - current;

    Eigen::VectorXd eta_new = eta_;
    if (is_beta_x)
      eta_new.array() += shift * state_.x.array();
    else
      eta_new.array() += shift * data_.z.col(comp).array();

    const double prop_loglik = survival_loglik(eta_new);
    double log_ratio = prop_loglik - loglik;
    if (is_beta_x) {
      log_ratio += prior_.log_prior_beta_x(proposed) - prior_.log_prior_beta_x(current);
    } else {
      const double d_new = proposed - prior_.mu_beta;
      const double d_old = current - prior_.mu_beta;
      log_ratio += (d_old * d_old - d_new * d_new) / (2.0 * prior_.sigma2_beta);
    }

    const bool accept =
        std::isfinite(log_ratio) ? std::log(rng_.uniform_pos()) < log_ratio
                                 : log_ratio > 0.0;
    if (accept) {
      if (is_beta_x)
        state_.beta_x = proposed;
      else
        state_.beta_z[comp] = proposed;
      eta_.swap(eta_new);
      loglik = prop_loglik;
    }
    mh.tick(accept);
  }
}

void GibbsSampler::update_latent_x() {
  if (options_.fix_latent_x) return;
  const Eigen::Index n = data_.n();

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const int k = state_.dp.alloc[iu];
    const double a_k = state_.dp.atom_shape[k];
    const double b_k = state_.dp.atom_scale[k];
    const double shape = a_k + data_.w[i];
    const double rate = 1.0 / b_k + data_.a[i];

    const double x_cur = state_.x[i];
    const double eta_cur = eta_[i];
    bool accept = false;
    double x_new, eta_new;

    if (!use_rw_[iu]) {
      // Independence proposal from the measurement-model conditional; the
      // survival factor is all that survives in the ratio.
      x_new = std::max(rng_.gamma(shape, 1.0 / rate), kLatentFloor);
      eta_new = eta_cur + state_.beta_x * (x_new - x_cur);
      if (std::fabs(eta_new) <= kMaxLinearPredictor) {
        const double log_ratio =
            data_.delta[i] * state_.beta_x * (x_new - x_cur) -
            cumhaz_[i] * (std::exp(eta_new) - std::exp(eta_cur));
        accept = std::isfinite(log_ratio) && std::log(rng_.uniform_pos()) < log_ratio;
      }
      ++latent_proposals_;
      latent_accepts_ += accept ? 1 : 0;
      if (adapting_) window_rejects_[iu] += accept ? 0 : 1;
    } else {
      auto& mh = latent_rw_scales_[iu];
      x_new = std::max(x_cur * std::exp(mh.scale * rng_.normal()), kLatentFloor);
      eta_new = eta_cur + state_.beta_x * (x_new - x_cur);
      if (std::fabs(eta_new) <= kMaxLinearPredictor) {
        // Full conditional in log space plus the log-scale Jacobian, which
        // turns the (shape - 1) exponent into shape.
        const double log_ratio =
            shape * (std::log(x_new) - std::log(x_cur)) - rate * (x_new - x_cur) +
            data_.delta[i] * state_.beta_x * (x_new - x_cur) -
            cumhaz_[i] * (std::exp(eta_new) - std::exp(eta_cur));
        accept = std::isfinite(log_ratio) && std::log(rng_.uniform_pos()) < log_ratio;
      }
      mh.tick(accept);
      ++latent_proposals_;
      latent_accepts_ += accept ? 1 : 0;
    }

    if (accept) {
      state_.x[i] = x_new;
      eta_[i] = eta_new;
    }
  }

  if (adapting_ && options_.allow_rw_fallback) {
    ++window_sweeps_;
    if (window_sweeps_ >= kFallbackWindow) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        if (!use_rw_[iu] &&
            window_rejects_[iu] > (1.0 - kFallbackRate) * window_sweeps_)
          use_rw_[iu] = 1;
        window_rejects_[iu] = 0;
      }
      window_sweeps_ = 0;
    }
  }
}

void GibbsSampler::update_joint_scale() {
  if (options_.fix_latent_x) return;
  const Eigen::Index n = data_.n();
  if (n == 0) return;

  const double log_s = joint_scale_.scale * rng_.normal();
  const double s = std::exp(log_s);
  const double beta_new = state_.beta_x / s;
  const int k_trunc = state_.dp.K();

  // Map (beta_x, x, atom scales) -> (beta_x/s, s x, s b). Linear predictors
  // are invariant so the survival factor drops out, and the gamma mixture is
  // a scale family so its density change cancels against the x Jacobian.
  // What remains: the Poisson measurement terms, the base measure on the
  // atom scales, the beta_x prior, and the residual Jacobian s^(K-1).
  double log_ratio = (static_cast<double>(k_trunc) - 1.0) * log_s;
  log_ratio += prior_.log_prior_beta_x(beta_new) - prior_.log_prior_beta_x(state_.beta_x);
  for (Eigen::Index i = 0; i < n; ++i)
    log_ratio += data_.w[i] * log_s - (s - 1.0) * state_.x[i] * data_.a[i];
  for (int k = 0; k < k_trunc; ++k)
    log_ratio += -(prior_.b0 + 1.0) * log_s -
                 prior_.gamma0 * (1.0 / s - 1.0) / state_.dp.atom_scale[k];

  const bool accept = std::isfinite(log_ratio) && std::log(rng_.uniform_pos()) < log_ratio;
  if (accept) {
    state_.x *= s;
    for (Eigen::Index i = 0; i < n; ++i)
      state_.x[i] = std::max(state_.x[i], kLatentFloor);
    state_.dp.atom_scale *= s;
    state_.beta_x = beta_new;
  }
  joint_scale_.tick(accept);
}

void GibbsSampler::update_beta_hazard_shift() {
  const Eigen::Index n = data_.n();
  if (n == 0) return;
  const double c = surrogate_center_;

  const double shift = shift_scale_.scale * rng_.normal();
  const double beta_new = state_.beta_x + shift;
  const double level_factor = std::exp(-shift * c);

  // Survival difference with eta_i' = eta_i + shift * x_i and every level
  // scaled by exp(-shift c).
  double log_ratio = 0.0;
  bool valid = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double eta_new = eta_[i] + shift * state_.x[i];
    if (!(std::fabs(eta_new) <= kMaxLinearPredictor)) {
      valid = false;
      break;
    }
    log_ratio -= cumhaz_[i] * (level_factor * std::exp(eta_new) - std::exp(eta_[i]));
    if (data_.delta[i] == 1) log_ratio += shift * (state_.x[i] - c);
  }
  if (valid) {
    // Gamma priors on the rescaled levels plus the Jacobian of the level map.
    const double m1 = static_cast<double>(state_.hazard.size());
    log_ratio += (prior_.a_h - 1.0) * (-shift * c) * m1 -
                 prior_.b_h * (level_factor - 1.0) * state_.hazard.sum();
    log_ratio += -shift * c * m1;
    log_ratio +=
        prior_.log_prior_beta_x(beta_new) - prior_.log_prior_beta_x(state_.beta_x);
  }

  const bool accept = valid && std::isfinite(log_ratio) &&
                      std::log(rng_.uniform_pos()) < log_ratio;
  if (accept) {
    state_.beta_x = beta_new;
    state_.hazard *= level_factor;
    eta_ += shift * state_.x;
    cumhaz_ *= level_factor;
    const double log_factor = -shift * c;
    for (Eigen::Index i = 0; i < n; ++i)
      if (cells_.event_interval[static_cast<std::size_t>(i)] >= 0)
        log_h_event_[i] += log_factor;
  }
  shift_scale_.tick(accept);
}

void GibbsSampler::update_allocations() {
  sample_allocations(state_.x, state_.dp, rng_);
}

void GibbsSampler::update_sticks() {
  sample_sticks(state_.dp, rng_);
}

void GibbsSampler::update_atoms() {
  sample_atoms(state_.x, state_.dp, prior_, rng_, atom_scales_);
}

void GibbsSampler::update_concentration() {
  sample_concentration(state_.dp, prior_, rng_, alpha_scale_);
}

void GibbsSampler::sweep() {
  update_hazard_levels();
  update_beta();
  update_latent_x();
  update_joint_scale();
  update_beta_hazard_shift();
  update_allocations();
  update_sticks();
  update_atoms();
  update_concentration();
}

void GibbsSampler::end_adaptation() {
  adapting_ = false;
  for (auto& s : beta_scales_) s.freeze();
  for (auto& s : atom_scales_) s.freeze();
  for (auto& s : latent_rw_scales_) s.freeze();
  alpha_scale_.freeze();
  joint_scale_.freeze();
  shift_scale_.freeze();
}

void GibbsSampler::set_data(SurvivalDataset data) {
  if (data.n() != data_.n() || data.n_covariates() != data_.n_covariates())
    throw Error(errc::invalid_argument, "replacement data must match the original layout");
  data_ = std::move(data);
  rebuild_data_caches();
}

McmcDraws GibbsSampler::run(int chain_id) {
  const int n_draws = config_.n_draws();
  const Eigen::Index j_cov = data_.n_covariates();
  const Eigen::Index m1 = grid_.n_intervals();
  const int k_trunc = config_.k_trunc;

  McmcDraws draws;
  draws.chain_id = chain_id;
  draws.seed = rng_.seed();
  draws.knots = grid_.knots;
  draws.beta_x.resize(n_draws);
  draws.beta_z.resize(n_draws, j_cov);
  draws.hazard.resize(n_draws, m1);
  draws.alpha.resize(n_draws);
  draws.pi.resize(n_draws, k_trunc);
  draws.atom_shape.resize(n_draws, k_trunc);
  draws.atom_scale.resize(n_draws, k_trunc);
  if (config_.store_latent_x)
    draws.latent_x.resize(n_draws, data_.n());

  int stored = 0;
  for (int t = 1; t <= config_.n_iter; ++t) {
    if (t == config_.n_burn + 1) end_adaptation();
    sweep();
    if (t > config_.n_burn && (t - config_.n_burn) % config_.thin == 0 &&
        stored < n_draws) {
      draws.beta_x[stored] = state_.beta_x;
      draws.beta_z.row(stored) = state_.beta_z.transpose();
      draws.hazard.row(stored) = state_.hazard.transpose();
      draws.alpha[stored] = state_.dp.alpha;
      draws.pi.row(stored) = state_.dp.pi.transpose();
      draws.atom_shape.row(stored) = state_.dp.atom_shape.transpose();
      draws.atom_scale.row(stored) = state_.dp.atom_scale.transpose();
      if (config_.store_latent_x)
        draws.latent_x.row(stored) = state_.x.transpose();
      ++stored;
    }
  }
  return draws;
}

double GibbsSampler::beta_acceptance_rate(Eigen::Index component) const {
  return beta_scales_[static_cast<std::size_t>(component)].acceptance_rate();
}

double GibbsSampler::latent_acceptance_rate() const {
  return latent_proposals_ > 0
             ? static_cast<double>(latent_accepts_) / static_cast<double>(latent_proposals_)
             : 0.0;
}

double GibbsSampler::joint_scale_acceptance_rate() const {
  return joint_scale_.acceptance_rate();
}

double GibbsSampler::shift_acceptance_rate() const {
  return shift_scale_.acceptance_rate();
}

double GibbsSampler::atom_acceptance_rate(int cluster) const {
  return atom_scales_[static_cast<std::size_t>(cluster)].acceptance_rate();
}

double GibbsSampler::alpha_acceptance_rate() const {
  return alpha_scale_.acceptance_rate();
}

int GibbsSampler::n_fallback_subjects() const {
  int count = 0;
  for (char flag : use_rw_) count += flag ? 1 : 0;
  return count;
}

McmcDraws run_chain(const SurvivalDataset& data, const ModelConfig& config,
                    const PriorSpec& prior, Rng rng, int chain_id) {
  const SurvivalDataset validated = validate_dataset(data);
  const HazardGrid grid =
      make_hazard_grid(validated.u, validated.delta, config.m_intervals, config.knots);
  GibbsSampler sampler(validated, grid, config, prior, rng);
  return sampler.run(chain_id);
}

MultiChainResult run_chains(const SurvivalDataset& data, const ModelConfig& config,
                            const PriorSpec& prior, int n_chains, int n_threads) {
  if (n_chains < 1) throw Error(errc::invalid_argument, "n_chains must be >= 1");

  MultiChainResult result;
  result.chains.resize(static_cast<std::size_t>(n_chains));
  Rng base(config.seed);
  parallel_for(static_cast<std::size_t>(n_chains), n_threads, [&](std::size_t c) {
    result.chains[c] = run_chain(data, config, prior, base.child(c), static_cast<int>(c));
  });

  const Eigen::Index j_cov = result.chains.front().beta_z.cols();
  auto diag_for = [&](const std::string& name,
                      const std::function<Eigen::VectorXd(const McmcDraws&)>& extract) {
    std::vector<Eigen::VectorXd> per_chain;
    per_chain.reserve(result.chains.size());
    for (const auto& chain : result.chains) per_chain.push_back(extract(chain));
    ParameterDiagnostic d;
    d.name = name;
    if (n_chains >= 2) d.rhat = split_rhat(per_chain);
    d.ess = effective_sample_size(per_chain);
    return d;
  };

  result.diagnostics.push_back(
      diag_for("beta_x", [](const McmcDraws& c) { return c.beta_x; }));
  for (Eigen::Index j = 0; j < j_cov; ++j)
    result.diagnostics.push_back(diag_for(
        "beta_z" + std::to_string(j + 1),
        [j](const McmcDraws& c) -> Eigen::VectorXd { return c.beta_z.col(j); }));
  return result;
}

Eigen::VectorXd MultiChainResult::pooled_beta_x() const {
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.n_draws();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    out.segment(at, c.n_draws()) = c.beta_x;
    at += c.n_draws();
  }
  return out;
}

Eigen::VectorXd MultiChainResult::pooled_beta_z(Eigen::Index j) const {
  Eigen::Index total = 0;
  for (const auto& c : chains) total += c.n_draws();
  Eigen::VectorXd out(total);
  Eigen::Index at = 0;
  for (const auto& c : chains) {
    out.segment(at, c.n_draws()) = c.beta_z.col(j);
    at += c.n_draws();
  }
  return out;
}

namespace {

// Halve every chain so within-chain drift registers as between-chain spread.
std::vector<Eigen::VectorXd> split_halves(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> halves;
  halves.reserve(chains.size() * 2);
  for (const auto& chain : chains) {
    const Eigen::Index half = chain.size() / 2;
    if (half < 2) continue;
    halves.push_back(chain.head(half));
    halves.push_back(chain.tail(half));
  }
  return halves;
}

double chain_mean(const Eigen::VectorXd& v) { return v.mean(); }

double chain_var(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  const auto halves = split_halves(chains);
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto m = static_cast<double>(halves.size());
  const auto n = static_cast<double>(halves.front().size());

  double grand = 0.0;
  for (const auto& h : halves) grand += chain_mean(h);
  grand /= m;

  double b = 0.0, w = 0.0;
  for (const auto& h : halves) {
    const double mu = chain_mean(h);
    b += (mu - grand) * (mu - grand);
    w += chain_var(h);
  }
  b *= n / (m - 1.0);
  w /= m;
  if (w <= 0.0) return 1.0;
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  const auto m = static_cast<double>(chains.size());
  const Eigen::Index n = chains.front().size();
  const double total = m * static_cast<double>(n);
  if (n < 4) return total;

  double w = 0.0;
  double b = 0.0;
  double grand = 0.0;
  for (const auto& c : chains) grand += chain_mean(c);
  grand /= m;
  for (const auto& c : chains) {
    w += chain_var(c);
    const double mu = chain_mean(c);
    b += (mu - grand) * (mu - grand);
  }
  w /= m;
  if (w <= 0.0) return total;
  b = chains.size() > 1 ? b * static_cast<double>(n) / (m - 1.0) : 0.0;
  const double var_plus =
      (static_cast<double>(n) - 1.0) / static_cast<double>(n) * w +
      (chains.size() > 1 ? b / static_cast<double>(n) : 0.0);

  // Mean autocovariance across chains at each lag.
  const Eigen::Index max_lag = n - 1;
  std::vector<double> rho(static_cast<std::size_t>(max_lag), 0.0);
  std::vector<Eigen::VectorXd> centered;
  centered.reserve(chains.size());
  for (const auto& c : chains) centered.push_back(c.array() - chain_mean(c));

  auto acov = [&](Eigen::Index lag) {
    double s = 0.0;
    for (const auto& c : centered) {
      double dot = 0.0;
      for (Eigen::Index t = 0; t + lag < n; ++t) dot += c[t] * c[t + lag];
      s += dot / static_cast<double>(n);
    }
    return s / m;
  };

  // Geyer initial monotone sequence over paired lags.
  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (Eigen::Index lag = 1; lag + 1 < max_lag; lag += 2) {
    const double rho_a = 1.0 - (w - acov(lag)) / var_plus;
    const double rho_b = 1.0 - (w - acov(lag + 1)) / var_plus;
    double pair = rho_a + rho_b;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  const double ess = total / tau;
  return std::clamp(ess, 1.0, total);
}

}  // namespace dpsurv
