#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emfsec/experiment.hpp"
#include "emfsec/experiment_config.hpp"
#include "emfsec/monte_carlo.hpp"
#include "emfsec/secrecy_model.hpp"
#include "emfsec/validation.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> grid;
  std::optional<int> realizations;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> configs;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "Key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.sets, "Override one key, e.g. --set channel.v_e=0.2 (repeatable)");
  cmd->add_option("--seed", a.seed, "Base seed");
  cmd->add_option("--threads", a.threads, "Worker threads (0: all cores)");
}

void add_sweep_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--pdmax-grid", a.grid, "Comma-separated P_D^max grid in dB");
  cmd->add_option("--realizations", a.realizations, "Channel realizations per grid point");
  cmd->add_option("--configs", a.configs, "Comma-separated subset of none,bs-only,ue-only,both");
  cmd->add_option("--out", a.out, "Output directory (overrides EMFSEC_OUT_DIR)");
}

// Precedence: built-in defaults < config file < EMFSEC_OUT_DIR < flags.
emfsec::ExperimentConfig resolve(const CommonArgs& a) {
  emfsec::ExperimentConfig cfg;
  if (!a.config_path.empty()) cfg = emfsec::load_config_file(a.config_path, cfg);
  if (const char* env = std::getenv("EMFSEC_OUT_DIR"); env != nullptr && *env != '\0') cfg.output_dir = env;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw emfsec::ConfigError("--set expects key=value, got '" + s + "'");
    emfsec::apply_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (a.grid) cfg.p_d_max_grid_db = emfsec::parse_double_list(*a.grid);
  if (a.realizations) cfg.realizations = *a.realizations;
  if (a.seed) cfg.seed = *a.seed;
  if (a.configs) cfg.noise_configs = emfsec::parse_noise_list(*a.configs);
  if (a.out) cfg.output_dir = *a.out;
  if (a.threads) cfg.threads = *a.threads;
  cfg.validate();
  return cfg;
}

int cmd_sweep(const CommonArgs& a) {
  const auto cfg = resolve(a);
  const auto out = emfsec::run_sweep(cfg);
  std::size_t converged = 0;
  for (const auto& r : out.records) converged += r.status == "converged";
  std::cout << out.records_path.string() << "\n" << out.aggregate_path.string() << "\n";
  std::cerr << out.records.size() << " records, " << converged << " converged\n";
  return kExitOk;
}

struct SingleArgs {
  std::optional<double> pdmax_db;
  std::optional<std::string> noise;
  std::optional<int> realization;
  std::string json_out;
};

int cmd_single(const CommonArgs& a, const SingleArgs& s) {
  auto cfg = resolve(a);
  if (s.pdmax_db) cfg.single_p_d_max_db = *s.pdmax_db;
  if (s.noise) cfg.single_noise = emfsec::NoiseConfig::parse(*s.noise);
  if (s.realization) cfg.single_realization = *s.realization;
  cfg.validate();
  const auto json = emfsec::run_single_json(cfg);
  if (s.json_out.empty()) {
    std::cout << json;
  } else {
    std::ofstream f(s.json_out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + s.json_out);
    f << json;
  }
  return kExitOk;
}

struct ValidateArgs {
  std::string level = "fast";
  std::string fault;
  std::optional<std::uint64_t> seed;
  std::string report;
};

int cmd_validate(const ValidateArgs& v) {
  emfsec::ValidationOptions opt;
  try {
    opt.level = emfsec::parse_validation_level(v.level);
  } catch (const std::invalid_argument& e) {
    throw emfsec::ConfigError(e.what());
  }
  opt.inject_fault = v.fault;
  if (v.seed) opt.seed = *v.seed;
  emfsec::ValidationReport rep;
  try {
    rep = emfsec::run_validation(opt);
  } catch (const std::invalid_argument& e) {
    throw emfsec::ConfigError(e.what());
  }
  for (const auto& c : rep.checks) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << "  cases=" << c.cases << " failures=" << c.failures
              << " worst=" << c.worst << " threshold=" << c.threshold << " (" << c.seconds << " s)";
    if (!c.detail.empty()) std::cerr << "  " << c.detail;
    std::cerr << "\n";
  }
  std::cerr << "total " << rep.seconds << " s\n";
  const auto json = rep.to_json();
  if (v.report.empty()) {
    std::cout << json;
  } else {
    std::ofstream f(v.report, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + v.report);
    f << json;
  }
  return rep.passed ? kExitOk : kExitFailure;
}

struct SopArgs {
  std::string q = "1 0; 0 1";
  std::string q_n = "0.1 0; 0 0.1";
  std::string q_n_bar = "0.1";
  std::optional<std::string> g_e, g_e_bar, g_d, g_d_bar;
  double r_e_max = 1.0;
  double pdmax_db = 10.0;
  std::size_t samples = 1000000;
};

emfsec::HermitianMatrix hermitian_flag(const std::string& name, const std::string& text) {
  try {
    return emfsec::HermitianMatrix(emfsec::parse_matrix(text));
  } catch (const std::exception& e) {
    throw emfsec::ConfigError(name + ": " + e.what());
  }
}

nlohmann::ordered_json probability_json(double closed, const emfsec::Estimate& est) {
  const double sigma = std::sqrt(std::max(closed * (1.0 - closed), 1.0 / static_cast<double>(est.n)) /
                                 static_cast<double>(est.n));
  return {{"closed_form", closed},
          {"monte_carlo", est.estimate},
          {"std_error", est.std_error},
          {"samples", est.n},
          {"deviation_sigma", std::abs(closed - est.estimate) / sigma}};
}

int cmd_sop(const CommonArgs& a, const SopArgs& s) {
  const auto cfg = resolve(a);
  auto ch = cfg.channel(emfsec::ComplexMatrix::Zero(static_cast<Eigen::Index>(cfg.dims.n_ue_rx),
                                                    static_cast<Eigen::Index>(cfg.dims.n_bs)));
  if (s.g_e) ch.g_e = hermitian_flag("--g-e", *s.g_e);
  if (s.g_e_bar) ch.g_e_bar = hermitian_flag("--g-e-bar", *s.g_e_bar);
  if (s.g_d) ch.g_d = hermitian_flag("--g-d", *s.g_d);
  if (s.g_d_bar) ch.g_d_bar = hermitian_flag("--g-d-bar", *s.g_d_bar);
  emfsec::CovarianceSet cov;
  cov.q = hermitian_flag("--q", s.q);
  cov.q_n = hermitian_flag("--qn", s.q_n);
  cov.q_n_bar = hermitian_flag("--qn-bar", s.q_n_bar);
  cov.r_e_max = s.r_e_max;
  if (cov.q.dim() != ch.g_e.dim() || cov.q_n.dim() != ch.g_e.dim() || cov.q_n_bar.dim() != ch.g_e_bar.dim() ||
      ch.g_d.dim() != ch.g_e.dim() || ch.g_d_bar.dim() != ch.g_e_bar.dim()) {
    throw emfsec::ConfigError("matrix dimensions do not match the configured antenna counts");
  }
  if (!(s.r_e_max >= 0.0)) throw emfsec::ConfigError("--r-e-max must be >= 0");
  if (s.samples == 0) throw emfsec::ConfigError("--samples must be positive");

  const double p_d_max = emfsec::db_to_linear(s.pdmax_db);
  const emfsec::SampleSpec spec{s.samples, cfg.seed, false, cfg.threads};
  nlohmann::ordered_json j;
  j["r_e_max"] = s.r_e_max;
  j["p_d_max_db"] = s.pdmax_db;
  j["p_d_max"] = p_d_max;
  j["seed"] = cfg.seed;
  j["secrecy_outage"] =
      probability_json(emfsec::secrecy_outage_prob(ch, cov), emfsec::empirical_sop(ch, cov, spec));
  j["exposure"] = probability_json(emfsec::exposure_outage_prob(ch, cov, p_d_max),
                                   emfsec::empirical_exposure(ch, cov, p_d_max, spec));
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Outage-constrained secrecy beamforming under an EMF exposure limit"};
  app.require_subcommand(1);

  CommonArgs sweep_args, single_args, sop_common;
  auto* sweep = app.add_subcommand("sweep", "Sweep P_D^max over the noise configurations and write CSV files");
  add_common(sweep, sweep_args);
  add_sweep_flags(sweep, sweep_args);

  SingleArgs single;
  auto* single_cmd = app.add_subcommand("single", "One optimization with its iteration trace as JSON");
  add_common(single_cmd, single_args);
  single_cmd->add_option("--pdmax-db", single.pdmax_db, "P_D^max in dB");
  single_cmd->add_option("--noise", single.noise, "none, bs-only, ue-only or both");
  single_cmd->add_option("--realization", single.realization, "Channel realization index");
  single_cmd->add_option("--json-out", single.json_out, "Write JSON here instead of stdout");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Run the oracle suites and print a JSON report");
  validate_cmd->add_option("--level", validate.level, "fast or full")->capture_default_str();
  validate_cmd->add_option("--inject-fault", validate.fault, "Deliberate defect to detect (gamma)");
  validate_cmd->add_option("--seed", validate.seed, "Seed for the random instances");
  validate_cmd->add_option("--report", validate.report, "Write the JSON report here instead of stdout");

  SopArgs sop;
  auto* sop_cmd = app.add_subcommand("sop", "Closed-form and Monte Carlo outage probabilities for one instance");
  add_common(sop_cmd, sop_common);
  sop_cmd->add_option("--q", sop.q, "Data covariance Q, rows separated by ';', entries re or re:im")
      ->capture_default_str();
  sop_cmd->add_option("--qn", sop.q_n, "BS artificial-noise covariance")->capture_default_str();
  sop_cmd->add_option("--qn-bar", sop.q_n_bar, "UE artificial-noise covariance")->capture_default_str();
  sop_cmd->add_option("--g-e", sop.g_e, "BS-to-eavesdropper channel covariance");
  sop_cmd->add_option("--g-e-bar", sop.g_e_bar, "UE-to-eavesdropper channel covariance");
  sop_cmd->add_option("--g-d", sop.g_d, "BS-to-exposure-point channel covariance");
  sop_cmd->add_option("--g-d-bar", sop.g_d_bar, "UE-to-exposure-point channel covariance");
  sop_cmd->add_option("--r-e-max", sop.r_e_max, "Eavesdropper rate threshold in bits")->capture_default_str();
  sop_cmd->add_option("--pdmax-db", sop.pdmax_db, "Exposure limit in dB")->capture_default_str();
  sop_cmd->add_option("--samples", sop.samples, "Monte Carlo samples")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (*sweep) return cmd_sweep(sweep_args);
    if (*single_cmd) return cmd_single(single_args, single);
    if (*validate_cmd) return cmd_validate(validate);
    if (*sop_cmd) return cmd_sop(sop_common, sop);
  } catch (const emfsec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
