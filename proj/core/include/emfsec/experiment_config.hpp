#pragma once

// Flat key = value configuration for sweeps and single runs.
//
//   # comment
//   channel.g_u_max = 0.1
//   sweep.p_d_max_grid_db = -10, -5, 0, 5
//
// Unknown keys and malformed values raise ConfigError.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "emfsec/convex_subproblem.hpp"
#include "emfsec/sca.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Dimensions dims{2, 1, 1};

  double g_u_max = 0.1;
  double v_u = 0.1;          // V_U = v_u I
  double v_e = 0.1;
  double g_e_scale = 1.0;    // G_E = g_e_scale I, and likewise below
  double g_e_bar_scale = 1.0;
  double g_d_scale = 1.0;
  double g_d_bar_scale = 1.0;

  double p_max_db = 10.0;
  double p_bar_max_db = 10.0;
  double epsilon = 0.05;
  double delta = 0.05;

  std::vector<double> p_d_max_grid_db = default_grid_db();
  std::vector<NoiseConfig> noise_configs = {NoiseConfig::none(), NoiseConfig::bs_only(), NoiseConfig::ue_only(),
                                            NoiseConfig::both()};
  int realizations = 20;
  std::uint64_t seed = 1;
  unsigned threads = 0;       // 0: hardware concurrency
  bool warm_start = false;   // seed from neighbouring grid points and subset configs

  ScaOptions solver;
  PenaltySchedule penalty;

  std::string output_dir = "emfsec-out";

  double single_p_d_max_db = 10.0;
  NoiseConfig single_noise = NoiseConfig::both();
  int single_realization = 0;

  static std::vector<double> default_grid_db();

  /// Throws ConfigError.
  void validate() const;
  ChannelModel channel(const ComplexMatrix& h_u) const;
  OutageSpec outage(double p_d_max_db) const;
};

double db_to_linear(double db);

/// Applies one dotted key. Throws ConfigError on unknown keys or bad values.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Parses the text format on top of `base`.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::filesystem::path& path, ExperimentConfig base = {});

std::vector<double> parse_double_list(const std::string& text);
std::vector<NoiseConfig> parse_noise_list(const std::string& text);

/// Parses a matrix written as rows separated by ';' and entries separated by
/// whitespace or commas; an entry is `re` or `re:im`.
ComplexMatrix parse_matrix(const std::string& text);

}  // namespace emfsec
