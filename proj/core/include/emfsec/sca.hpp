#pragma once

// Successive convex approximation for the outage-constrained secrecy-rate
// design: initialization, the penalized iteration, convergence detection,
// closed-form certification and precoder recovery.

#include <string>
#include <vector>

#include "emfsec/convex_subproblem.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

struct PenaltySchedule {
  PenaltyWeights initial{};
  double growth_factor = 2.0;
  int growth_every = 5;  // iterations between scheduled increases

  void validate() const;
};

struct ScaOptions {
  int max_iters = 200;
  double conv_tol = 1e-5;
  double subproblem_tol = 3e-7;
  int infeasible_retries = 5;
  double certificate_slack = 1e-6;
};

enum class ScaStatus { converged, max_iterations, infeasible_start, subproblem_infeasible };

std::string to_string(ScaStatus s);

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;  // R_U - R_E^max at the new point (unclamped)
  double surrogate = 0.0;  // subproblem optimum
  double step_q = 0.0;
  double step_qn = 0.0;
  double step_qn_bar = 0.0;
  double step_r = 0.0;
  PenaltyWeights penalties;
  std::string subproblem_status;
  double sop = 0.0;
  double exposure = 0.0;

  double step() const { return step_q + step_qn + step_qn_bar + step_r; }
};

struct Precoders {
  ComplexMatrix w;
  ComplexMatrix w_n;
  ComplexMatrix w_n_bar;
};

struct SolveResult {
  CovarianceSet cov;
  Precoders precoders;
  double r_eps = 0.0;
  double r_u = 0.0;
  double sop_certificate = 0.0;
  double exposure_certificate = 0.0;
  bool certified = false;
  ScaStatus status = ScaStatus::max_iterations;
  int iterations = 0;
  std::vector<IterationRecord> trace;
};

/// State carried between iterations.
struct ScaState {
  CovarianceSet op;
  CovarianceSet last_certified;
  PenaltyWeights penalties;
  int iteration = 0;
  int scheduled_growths = 0;
  double last_objective = 0.0;
  int last_delta_sign = 0;
  int sign_flips = 0;
};

/// MRT data covariance plus small isotropic noise, uniformly scaled down until
/// the exposure constraint holds, with R_E^max from bisection.
CovarianceSet initialize(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg);

/// One penalized SCA step. After an infeasible subproblem the operating point
/// falls back to the last iterate that passed the closed-form certificates
/// and the penalties double; the record's subproblem_status reads
/// "infeasible".
IterationRecord iterate_once(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                             ScaState& state, const PenaltySchedule& schedule = {},
                             const ScaOptions& opt = {});

/// R_U - R_E^max at a point (no clamp).
double secrecy_objective(const ChannelModel& ch, const CovarianceSet& cov);

/// True when both closed-form probabilities meet their targets within slack.
bool certify(const ChannelModel& ch, const OutageSpec& spec, const CovarianceSet& cov, double slack,
             double* sop = nullptr, double* exposure = nullptr);

SolveResult optimize(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                     const PenaltySchedule& schedule = {}, const ScaOptions& opt = {});

/// Same loop from a caller-supplied start (e.g. a neighbouring solution).
/// Disabled noise blocks of `start` are zeroed first.
SolveResult optimize_from(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                          const CovarianceSet& start, const PenaltySchedule& schedule = {},
                          const ScaOptions& opt = {});

/// Spends unused BS power on artificial noise in the null space of H_U (which
/// the user never sees), as far as the exposure target allows, then lowers
/// R_E^max back to the outage target. Returns `cov` unchanged when BS noise is
/// disabled, H_U has no null space, or the objective would not rise by more
/// than 1e-6 bits.
CovarianceSet fill_null_space_noise(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                                    const CovarianceSet& cov, double slack);

/// W = U diag(sqrt(lambda+)) for each covariance.
Precoders recover_precoders(const CovarianceSet& cov);
ComplexMatrix matrix_square_root_factor(const HermitianMatrix& a);

}  // namespace emfsec
