#pragma once

#include <map>
#include <string>

#include "dpsurv/simex.hpp"
#include "dpsurv/types.hpp"

namespace dpsurv {

// Key=value parsing for the CLI config files. Unknown keys raise parse_error
// so typos do not silently fall back to defaults. The documented key lists
// back the CLI --help output.

// Keys: m_intervals, k_trunc, knots (quantiles|equal_length), n_iter, n_burn,
// thin, seed, store_latent_x (0|1).
ModelConfig model_config_from_keys(const std::map<std::string, std::string>& keys);

// Keys: a_h, b_h, mu_beta, sigma2_beta, mu_x, sigma2_x, beta_x_prior
// (normal|cauchy), mu_alpha, sigma2_alpha, a0, eta0, b0, gamma0.
PriorSpec prior_from_keys(const std::map<std::string, std::string>& keys);

// Keys: lambda_grid (comma-separated, must include 0), simex_b, seed.
SimexConfig simex_config_from_keys(const std::map<std::string, std::string>& keys);

const char* model_config_key_help();
const char* prior_key_help();
const char* simex_key_help();
const char* scenario_key_help();

// Key ownership, for callers that split one flat file across parsers.
bool is_model_config_key(const std::string& key);
bool is_prior_key(const std::string& key);
bool is_simex_key(const std::string& key);
bool is_scenario_key(const std::string& key);

}  // namespace dpsurv
