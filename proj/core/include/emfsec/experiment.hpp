#pragma once

// Desk-scale reproduction of the P_D^max sweeps: paired channel realizations,
// the four artificial-noise configurations, CSV outputs and single-run JSON.

#include <filesystem>
#include <string>
#include <vector>

#include "emfsec/experiment_config.hpp"
#include "emfsec/sca.hpp"

namespace emfsec {

struct SweepRecord {
  double p_d_max_db = 0.0;
  double p_d_max = 0.0;
  std::string noise_config;
  int realization_index = 0;
  double r_eps = 0.0;
  double r_e_max = 0.0;
  double p = 0.0;
  double p_n = 0.0;
  double p_bar_n = 0.0;
  int iterations = 0;
  std::string status;
  double sop_certificate = 0.0;
  double exposure_certificate = 0.0;
};

struct AggregateRow {
  double p_d_max_db = 0.0;
  double p_d_max = 0.0;
  std::string noise_config;
  int count = 0;
  int converged = 0;
  double mean_r_eps = 0.0, se_r_eps = 0.0;
  double mean_r_e_max = 0.0, se_r_e_max = 0.0;
  double mean_p = 0.0, se_p = 0.0;
  double mean_p_n = 0.0, se_p_n = 0.0;
  double mean_p_bar_n = 0.0, se_p_bar_n = 0.0;
};

struct SweepOutput {
  std::vector<SweepRecord> records;
  std::vector<AggregateRow> aggregate;
  std::filesystem::path records_path;
  std::filesystem::path aggregate_path;
};

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_number(double v);

/// H_U with i.i.d. unit-variance circular Gaussian entries, drawn from the
/// stream (seed, realization) so every configuration sees the same channel.
ComplexMatrix draw_user_channel(const ExperimentConfig& cfg, int realization);

/// Runs every (grid point, configuration, realization) cell. A cell that
/// throws is recorded with status "error: ..." instead of aborting.
std::vector<SweepRecord> run_sweep_records(const ExperimentConfig& cfg);
std::vector<AggregateRow> aggregate_records(const std::vector<SweepRecord>& records, const ExperimentConfig& cfg);

std::string records_csv(const std::vector<SweepRecord>& records);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);

/// run_sweep_records plus records.csv and aggregate.csv in cfg.output_dir.
SweepOutput run_sweep(const ExperimentConfig& cfg);

/// One cold-started optimization for cfg.single_* on realization
/// cfg.single_realization.
SolveResult run_single(const ExperimentConfig& cfg);
/// run_single serialized with the full iteration trace.
std::string run_single_json(const ExperimentConfig& cfg);

}  // namespace emfsec
