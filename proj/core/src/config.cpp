#include "dpsurv/config.hpp"

#include <set>

namespace dpsurv {

namespace {

const std::set<std::string>& model_key_set() {
  static const std::set<std::string> keys{"m_intervals", "k_trunc", "knots", "n_iter",
                                          "n_burn", "thin", "seed", "store_latent_x"};
  return keys;
}

const std::set<std::string>& prior_key_set() {
  static const std::set<std::string> keys{"a_h", "b_h", "mu_beta", "sigma2_beta",
                                          "mu_x", "sigma2_x", "beta_x_prior",
                                          "mu_alpha", "sigma2_alpha", "a0", "eta0",
                                          "b0", "gamma0"};
  return keys;
}

const std::set<std::string>& simex_key_set() {
  static const std::set<std::string> keys{"lambda_grid", "simex_b", "seed"};
  return keys;
}

const std::set<std::string>& scenario_key_set() {
  static const std::set<std::string> keys{
      "latent_law", "latent_shape", "latent_scale", "latent_mu", "latent_sigma",
      "latent_upper", "beta_x", "beta_z", "n", "censor_frac", "n_reps",
      "weibull_shape", "weibull_scale", "seed"};
  return keys;
}

double to_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(errc::parse_error, "bad numeric value '" + value + "' for key '" + key + "'");
  }
}

void reject_unknown(const std::map<std::string, std::string>& keys,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : keys)
    if (!known.count(key))
      throw Error(errc::parse_error, "unknown config key '" + key + "'");
}

}  // namespace

ModelConfig model_config_from_keys(const std::map<std::string, std::string>& keys) {
  reject_unknown(keys, model_key_set());
  ModelConfig config;
  if (auto it = keys.find("m_intervals"); it != keys.end())
    config.m_intervals = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("k_trunc"); it != keys.end())
    config.k_trunc = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("n_iter"); it != keys.end())
    config.n_iter = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("n_burn"); it != keys.end())
    config.n_burn = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("thin"); it != keys.end())
    config.thin = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("seed"); it != keys.end())
    config.seed = static_cast<std::uint64_t>(to_double(it->second, it->first));
  if (auto it = keys.find("store_latent_x"); it != keys.end())
    config.store_latent_x = to_double(it->second, it->first) != 0.0;
  if (auto it = keys.find("knots"); it != keys.end()) {
    if (it->second == "quantiles")
      config.knots = KnotPlacement::event_quantiles;
    else if (it->second == "equal_length")
      config.knots = KnotPlacement::equal_length;
    else
      throw Error(errc::parse_error, "knots must be 'quantiles' or 'equal_length'");
  }
  config.validate();
  return config;
}

PriorSpec prior_from_keys(const std::map<std::string, std::string>& keys) {
  reject_unknown(keys, prior_key_set());
  PriorSpec prior;
  auto set = [&](const char* key, double& field) {
    if (auto it = keys.find(key); it != keys.end()) field = to_double(it->second, key);
  };
  set("a_h", prior.a_h);
  set("b_h", prior.b_h);
  set("mu_beta", prior.mu_beta);
  set("sigma2_beta", prior.sigma2_beta);
  set("mu_x", prior.mu_x);
  set("sigma2_x", prior.sigma2_x);
  set("mu_alpha", prior.mu_alpha);
  set("sigma2_alpha", prior.sigma2_alpha);
  set("a0", prior.a0);
  set("eta0", prior.eta0);
  set("b0", prior.b0);
  set("gamma0", prior.gamma0);
  if (auto it = keys.find("beta_x_prior"); it != keys.end()) {
    if (it->second == "normal")
      prior.beta_x_family = BetaXPriorFamily::normal;
    else if (it->second == "cauchy")
      prior.beta_x_family = BetaXPriorFamily::cauchy;
    else
      throw Error(errc::parse_error, "beta_x_prior must be 'normal' or 'cauchy'");
  }
  prior.validate();
  return prior;
}

SimexConfig simex_config_from_keys(const std::map<std::string, std::string>& keys) {
  reject_unknown(keys, simex_key_set());
  SimexConfig config;
  if (auto it = keys.find("lambda_grid"); it != keys.end()) {
    config.lambda_grid.clear();
    std::string rest = it->second;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string token = rest.substr(0, comma);
      config.lambda_grid.push_back(to_double(token, "lambda_grid"));
      if (comma == std::string::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  if (auto it = keys.find("simex_b"); it != keys.end())
    config.n_remeasure = static_cast<int>(to_double(it->second, it->first));
  if (auto it = keys.find("seed"); it != keys.end())
    config.seed = static_cast<std::uint64_t>(to_double(it->second, it->first));
  config.validate();
  return config;
}

const char* model_config_key_help() {
  return "model config keys: m_intervals (inner knots, default 5), k_trunc (DP "
         "truncation, default 5; 1 = single gamma component), knots "
         "(quantiles|equal_length), n_iter (total sweeps incl. burn-in, default "
         "200000), n_burn (default 100000), thin (default 10), seed, "
         "store_latent_x (0|1)";
}

const char* prior_key_help() {
  return "prior keys: a_h, b_h (hazard gamma shape/rate, default 0.01/0.01), "
         "mu_beta, sigma2_beta (default 0/1), mu_x, sigma2_x (default 0/100), "
         "beta_x_prior (normal|cauchy), mu_alpha, sigma2_alpha (default 0/1), "
         "a0, eta0, b0, gamma0 (base measure, default 0.1 each)";
}

const char* simex_key_help() {
  return "simex keys: lambda_grid (comma separated, must include 0, default "
         "0,0.5,1,1.5,2), simex_b (remeasurements per lambda, default 100), seed";
}

const char* scenario_key_help() {
  return "scenario keys: latent_law (gamma|lognormal|uniform), latent_shape, "
         "latent_scale, latent_mu, latent_sigma, latent_upper, beta_x (default "
         "0.5), beta_z (default 0.1), n (default 100), censor_frac (default 0), "
         "n_reps (default 1000), weibull_shape, weibull_scale (default 1/1), seed";
}

bool is_model_config_key(const std::string& key) { return model_key_set().count(key) > 0; }
bool is_prior_key(const std::string& key) { return prior_key_set().count(key) > 0; }
bool is_simex_key(const std::string& key) { return simex_key_set().count(key) > 0; }
bool is_scenario_key(const std::string& key) { return scenario_key_set().count(key) > 0; }

}  // namespace dpsurv
