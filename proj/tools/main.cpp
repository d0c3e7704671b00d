#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "dpsurv/config.hpp"
#include "dpsurv/inference.hpp"
#include "dpsurv/io.hpp"
#include "dpsurv/mcmc.hpp"
#include "dpsurv/parallel.hpp"
#include "dpsurv/simex.hpp"
#include "dpsurv/simulate.hpp"
#include "dpsurv/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitConvergence = 3;

bool is_input_error(dpsurv::errc code) {
  switch (code) {
    case dpsurv::errc::parse_error:
    case dpsurv::errc::invalid_argument:
    case dpsurv::errc::non_positive_time:
    case dpsurv::errc::negative_count:
    case dpsurv::errc::non_positive_area:
    case dpsurv::errc::length_mismatch:
    case dpsurv::errc::no_events:
    case dpsurv::errc::too_few_values:
    case dpsurv::errc::too_few_draws:
      return true;
    default:
      return false;
  }
}

struct SplitConfig {
  std::map<std::string, std::string> model;
  std::map<std::string, std::string> prior;
  std::map<std::string, std::string> simex;
  std::map<std::string, std::string> scenario;
};

// One flat file feeds several parsers; `seed` is shared.
SplitConfig split_config(const std::map<std::string, std::string>& keys,
                         bool allow_scenario) {
  SplitConfig split;
  for (const auto& [key, value] : keys) {
    bool known = false;
    if (dpsurv::is_model_config_key(key)) {
      split.model[key] = value;
      known = true;
    }
    if (dpsurv::is_prior_key(key)) {
      split.prior[key] = value;
      known = true;
    }
    if (dpsurv::is_simex_key(key)) {
      split.simex[key] = value;
      known = true;
    }
    if (allow_scenario && dpsurv::is_scenario_key(key)) {
      split.scenario[key] = value;
      known = true;
    }
    if (!known)
      throw dpsurv::Error(dpsurv::errc::parse_error, "unknown config key '" + key + "'");
  }
  return split;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed,
                           std::optional<std::uint64_t> config_seed) {
  if (flag_seed) return *flag_seed;
  if (config_seed) return *config_seed;
  std::random_device device;
  const std::uint64_t seed =
      (static_cast<std::uint64_t>(device()) << 32) ^ device();
  std::cout << "seed: " << seed << " (generated; pass --seed to reproduce)\n";
  return seed;
}

std::optional<std::uint64_t> config_seed_of(const std::map<std::string, std::string>& keys) {
  const auto it = keys.find("seed");
  if (it == keys.end()) return std::nullopt;
  return static_cast<std::uint64_t>(std::stoull(it->second));
}

dpsurv::SurvivalDataset load_dataset(const std::string& path) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json")
    return dpsurv::io::read_dataset_json(path);
  return dpsurv::io::read_dataset_csv(path);
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    const std::string& config_path, const std::string& input_path,
                    std::uint64_t seed, double duration_seconds,
                    const json& settings) {
  json manifest;
  manifest["subcommand"] = subcommand;
  manifest["config"] = config_path;
  manifest["input"] = input_path;
  manifest["output_dir"] = out_dir.string();
  manifest["seed"] = seed;
  manifest["version"] = dpsurv::kVersion;
  manifest["duration_seconds"] = duration_seconds;
  manifest["settings"] = settings;
  dpsurv::io::write_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::string csv_field(double v) { return dpsurv::io::format_double(v); }

void write_draws_csv(const fs::path& path, const dpsurv::MultiChainResult& result) {
  std::ostringstream out;
  const auto names = result.chains.front().column_names();
  out << "chain,draw";
  for (const auto& name : names) out << ',' << name;
  out << "\n";
  for (const auto& chain : result.chains) {
    const Eigen::MatrixXd m = chain.to_matrix();
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
      out << chain.chain_id << ',' << s;
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << csv_field(m(s, c));
      out << "\n";
    }
  }
  dpsurv::io::write_file(path.string(), out.str());
}

void write_summary_csv(const fs::path& path, const dpsurv::PosteriorSummary& summary) {
  std::ostringstream out;
  out << "param,coef,hr,hr_lower,hr_upper,bf10\n";
  for (const auto& row : summary.rows) {
    out << row.param << ',' << csv_field(row.mean) << ',' << csv_field(*row.hr) << ','
        << csv_field(*row.hr_lower) << ',' << csv_field(*row.hr_upper) << ','
        << csv_field(*row.bf10) << "\n";
  }
  dpsurv::io::write_file(path.string(), out.str());
}

void print_summary(const dpsurv::PosteriorSummary& summary) {
  std::cout << std::left << std::setw(12) << "param" << std::right << std::setw(10)
            << "coef" << std::setw(10) << "hr" << std::setw(10) << "hr_lower"
            << std::setw(10) << "hr_upper" << std::setw(12) << "bf10" << "\n";
  for (const auto& row : summary.rows) {
    std::cout << std::left << std::setw(12) << row.param << std::right << std::fixed
              << std::setprecision(4) << std::setw(10) << row.mean << std::setw(10)
              << *row.hr << std::setw(10) << *row.hr_lower << std::setw(10)
              << *row.hr_upper << std::setprecision(4) << std::setw(12) << *row.bf10
              << "\n";
    std::cout.unsetf(std::ios::fixed);
  }
}

json model_settings_json(const dpsurv::ModelConfig& config) {
  json j;
  j["m_intervals"] = config.m_intervals;
  j["k_trunc"] = config.k_trunc;
  j["n_iter"] = config.n_iter;
  j["n_burn"] = config.n_burn;
  j["thin"] = config.thin;
  j["knots"] = config.knots == dpsurv::KnotPlacement::equal_length ? "equal_length"
                                                                   : "quantiles";
  j["store_latent_x"] = config.store_latent_x;
  return j;
}

struct FitArgs {
  std::string data_path;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int chains = 1;
  int threads = 0;
  bool prior_sensitivity = false;
};

int cmd_fit(const FitArgs& args) {
  const auto started = std::chrono::steady_clock::now();
  const dpsurv::SurvivalDataset data = load_dataset(args.data_path);

  std::map<std::string, std::string> keys;
  if (!args.config_path.empty()) keys = dpsurv::io::read_key_values(args.config_path);
  const SplitConfig split = split_config(keys, false);
  dpsurv::ModelConfig model = dpsurv::model_config_from_keys(split.model);
  const dpsurv::PriorSpec prior = dpsurv::prior_from_keys(split.prior);
  model.seed = resolve_seed(args.seed, config_seed_of(split.model));

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);

  const dpsurv::MultiChainResult result =
      dpsurv::run_chains(data, model, prior, args.chains, args.threads);
  const dpsurv::PosteriorSummary summary = dpsurv::summarize_posterior(result, prior);

  write_draws_csv(out_dir / "posterior-draws.csv", result);
  write_summary_csv(out_dir / "summary.csv", summary);
  print_summary(summary);

  std::ostringstream diag;
  diag << "param,rhat,ess\n";
  for (const auto& d : result.diagnostics) {
    diag << d.name << ','
         << (d.rhat ? csv_field(*d.rhat) : std::string("NA")) << ','
         << csv_field(d.ess) << "\n";
  }
  dpsurv::io::write_file((out_dir / "diagnostics.csv").string(), diag.str());

  if (args.prior_sensitivity) {
    std::vector<std::pair<dpsurv::PriorSpec, Eigen::VectorXd>> draw_sets;
    std::vector<std::string> labels;
    const auto priors = dpsurv::sensitivity_priors(prior);
    dpsurv::Rng seeder(model.seed);
    for (std::size_t i = 0; i < priors.size(); ++i) {
      dpsurv::ModelConfig refit = model;
      refit.seed = seeder.child(1000 + i).seed();
      const dpsurv::MultiChainResult rerun =
          dpsurv::run_chains(data, refit, priors[i].second, args.chains, args.threads);
      draw_sets.emplace_back(priors[i].second, rerun.pooled_beta_x());
      labels.push_back(priors[i].first);
    }
    const auto rows = dpsurv::prior_sensitivity(draw_sets, 0.0);
    std::ostringstream out;
    out << "prior,coef,hr,hr_lower,hr_upper,bf10\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << labels[i] << ',' << csv_field(rows[i].coef) << ',' << csv_field(rows[i].hr)
          << ',' << csv_field(rows[i].hr_lower) << ',' << csv_field(rows[i].hr_upper)
          << ',' << csv_field(rows[i].bf10) << "\n";
    }
    dpsurv::io::write_file((out_dir / "prior-sensitivity.csv").string(), out.str());
  }

  double max_rhat = 0.0;
  for (const auto& d : result.diagnostics)
    if (d.rhat) max_rhat = std::max(max_rhat, *d.rhat);

  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json settings = model_settings_json(model);
  settings["chains"] = args.chains;
  settings["prior_sensitivity"] = args.prior_sensitivity;
  settings["max_rhat"] = max_rhat;
  write_manifest(out_dir, "fit", args.config_path, args.data_path, model.seed,
                 duration, settings);

  if (args.chains >= 2 && max_rhat > 1.05) {
    std::cerr << "warning: max split-chain rhat " << max_rhat
              << " exceeds 1.05; treat the posterior summaries with caution\n";
    return kExitConvergence;
  }
  return kExitOk;
}

struct SimulateArgs {
  std::string scenario_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::optional<double> censoring;
  std::string estimators = "true,naive,simex,bayes_gamma,dp_mix";
  int threads = 0;
  bool parity = false;
};

int cmd_simulate(const SimulateArgs& args) {
  const auto started = std::chrono::steady_clock::now();
  const auto keys = dpsurv::io::read_key_values(args.scenario_path);
  const SplitConfig split = split_config(keys, true);

  dpsurv::SimScenario scenario = dpsurv::scenario_from_keys(split.scenario);
  dpsurv::HarnessConfig harness;
  harness.mcmc = dpsurv::model_config_from_keys(split.model);
  harness.prior = dpsurv::prior_from_keys(split.prior);
  if (!split.simex.empty()) harness.simex = dpsurv::simex_config_from_keys(split.simex);
  harness.n_threads = args.threads;

  if (args.parity) {
    scenario.n_reps = 1000;
    harness.mcmc.n_iter = 200000;
    harness.mcmc.n_burn = 100000;
    harness.mcmc.thin = 10;
  }
  // explicit flags win over the parity preset
  if (args.reps) scenario.n_reps = *args.reps;
  if (args.censoring) scenario.censor_frac = *args.censoring;
  scenario.seed = resolve_seed(args.seed, config_seed_of(split.scenario));
  harness.simex.seed = scenario.seed;

  std::vector<dpsurv::Estimator> estimators;
  std::stringstream list(args.estimators);
  std::string token;
  while (std::getline(list, token, ','))
    if (!token.empty()) estimators.push_back(dpsurv::parse_estimator(token));
  if (estimators.empty())
    throw dpsurv::Error(dpsurv::errc::invalid_argument, "estimator list is empty");

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);

  const dpsurv::ScenarioResult result =
      dpsurv::run_scenario(scenario, estimators, harness);
  dpsurv::io::write_file((out_dir / "metrics.csv").string(), result.metrics.to_csv());
  dpsurv::io::write_file((out_dir / "raw-estimates.csv").string(), result.raw_to_csv());

  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json settings;
  settings["latent_law"] = scenario.latent.label();
  settings["beta_x"] = scenario.beta_x;
  settings["beta_z"] = scenario.beta_z;
  settings["n"] = scenario.n;
  settings["censor_frac"] = scenario.censor_frac;
  settings["n_reps"] = scenario.n_reps;
  settings["estimators"] = args.estimators;
  settings["parity"] = args.parity;
  settings["mcmc"] = model_settings_json(harness.mcmc);
  settings["simex_b"] = harness.simex.n_remeasure;
  write_manifest(out_dir, "simulate", args.scenario_path, "", scenario.seed, duration,
                 settings);
  return kExitOk;
}

struct SimexArgs {
  std::string data_path;
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int bootstrap = 0;
  int threads = 0;
};

int cmd_simex(const SimexArgs& args) {
  const auto started = std::chrono::steady_clock::now();
  const dpsurv::SurvivalDataset data = load_dataset(args.data_path);

  std::map<std::string, std::string> keys;
  if (!args.config_path.empty()) keys = dpsurv::io::read_key_values(args.config_path);
  for (const auto& [key, value] : keys)
    if (!dpsurv::is_simex_key(key))
      throw dpsurv::Error(dpsurv::errc::parse_error, "unknown config key '" + key + "'");
  dpsurv::SimexConfig config = dpsurv::simex_config_from_keys(keys);
  config.seed = resolve_seed(args.seed, config_seed_of(keys));
  config.n_threads = args.threads;

  const fs::path out_dir(args.out_dir);
  fs::create_directories(out_dir);

  dpsurv::SimexFit fit = dpsurv::fit_simex(data, config);
  if (args.bootstrap > 0)
    fit.bootstrap_se =
        dpsurv::simex_bootstrap_se(data, config, args.bootstrap, config.seed ^ 0x5EEDULL);

  // Per-lambda coefficient curve; covariate 0 is the biomarker surrogate.
  std::ostringstream curve;
  curve << "lambda";
  curve << ",coef_x";
  for (Eigen::Index j = 1; j < fit.lambda_means.cols(); ++j) curve << ",coef_z" << j;
  curve << ",n_dropped\n";
  for (std::size_t r = 0; r < fit.lambda.size(); ++r) {
    curve << csv_field(fit.lambda[r]);
    for (Eigen::Index c = 0; c < fit.lambda_means.cols(); ++c)
      curve << ',' << csv_field(fit.lambda_means(static_cast<Eigen::Index>(r), c));
    curve << ',' << fit.n_dropped[r] << "\n";
  }
  dpsurv::io::write_file((out_dir / "simex-curve.csv").string(), curve.str());

  std::ostringstream summary;
  summary << "param,coef,hr,se,z,p\n";
  for (Eigen::Index c = 0; c < fit.extrapolated.size(); ++c) {
    const std::string name = c == 0 ? "beta_x" : "beta_z" + std::to_string(c);
    summary << name << ',' << csv_field(fit.extrapolated[c]) << ','
            << csv_field(std::exp(fit.extrapolated[c]));
    if (fit.bootstrap_se.size() > 0) {
      const double se = fit.bootstrap_se[c];
      const double z = se > 0.0 ? fit.extrapolated[c] / se : 0.0;
      const double p = 2.0 * 0.5 * std::erfc(std::fabs(z) / std::sqrt(2.0));
      summary << ',' << csv_field(se) << ',' << csv_field(z) << ',' << csv_field(p);
    } else {
      summary << ",NA,NA,NA";
    }
    summary << "\n";
  }
  dpsurv::io::write_file((out_dir / "simex-summary.csv").string(), summary.str());

  const double duration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json settings;
  settings["lambda_grid"] = fit.lambda;
  settings["simex_b"] = config.n_remeasure;
  settings["bootstrap"] = args.bootstrap;
  settings["error_variance"] = "mean count over core area (overall mean)";
  write_manifest(out_dir, "simex", args.config_path, args.data_path, config.seed,
                 duration, settings);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Semiparametric joint survival modeling for count biomarkers measured "
      "with Poisson error: mixture-model MCMC fitting, SIMEX and naive Cox "
      "comparators, and the simulation harness."};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand(
      "fit",
      std::string("Fit the joint model by MCMC and write posterior draws, a "
                  "coefficient summary and a Bayes factor for the biomarker "
                  "effect.\nConfig file: ") +
          dpsurv::model_config_key_help() + ".\n" + dpsurv::prior_key_help() + ".");
  fit->add_option("--data", fit_args.data_path, "dataset CSV or JSON")->required();
  fit->add_option("--config", fit_args.config_path, "key=value model/prior config");
  fit->add_option("--out", fit_args.out_dir, "output directory");
  fit->add_option("--seed", fit_args.seed, "RNG seed (generated and printed if absent)");
  fit->add_option("--chains", fit_args.chains, "number of chains")->check(CLI::PositiveNumber);
  fit->add_option("--threads", fit_args.threads, "worker threads (0 = all cores)");
  fit->add_flag("--prior-sensitivity", fit_args.prior_sensitivity,
                "refit under the canned prior ladder and write the sensitivity table");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand(
      "simulate",
      std::string("Run a replicated simulation study and write bias/MSE metrics.\n"
                  "Scenario file: ") +
          dpsurv::scenario_key_help() + ".\nAlso accepts " +
          dpsurv::model_config_key_help() + ";\n" + dpsurv::prior_key_help() + ";\n" +
          dpsurv::simex_key_help() + ".");
  simulate->add_option("--scenario", sim_args.scenario_path, "scenario key=value file")
      ->required();
  simulate->add_option("--out", sim_args.out_dir, "output directory");
  simulate->add_option("--seed", sim_args.seed, "RNG seed override");
  simulate->add_option("--reps", sim_args.reps, "replicate count override");
  simulate->add_option("--censoring", sim_args.censoring, "censoring fraction override");
  simulate->add_option("--estimators", sim_args.estimators,
                       "comma list of true,naive,simex,bayes_gamma,dp_mix");
  simulate->add_option("--threads", sim_args.threads, "worker threads (0 = all cores)");
  simulate->add_flag("--parity", sim_args.parity,
                     "full-scale settings: 1000 replicates, 100k burn-in, 100k "
                     "retained thinned by 10");

  SimexArgs simex_args;
  auto* simex = app.add_subcommand(
      "simex",
      std::string("Measurement-error-corrected Cox fit by simulation "
                  "extrapolation; writes the per-lambda coefficient curve and "
                  "the extrapolated fit.\nConfig file: ") +
          dpsurv::simex_key_help() + ".");
  simex->add_option("--data", simex_args.data_path, "dataset CSV or JSON")->required();
  simex->add_option("--config", simex_args.config_path, "key=value simex config");
  simex->add_option("--out", simex_args.out_dir, "output directory");
  simex->add_option("--seed", simex_args.seed, "RNG seed override");
  simex->add_option("--bootstrap", simex_args.bootstrap,
                    "bootstrap resamples for standard errors (0 = skip)");
  simex->add_option("--threads", simex_args.threads, "worker threads (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (simulate->parsed()) return cmd_simulate(sim_args);
    if (simex->parsed()) return cmd_simex(simex_args);
  } catch (const dpsurv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_input_error(e.code()) ? kExitInput : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
