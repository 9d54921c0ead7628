#pragma once

// One convexified step of the secrecy-rate design: maximize the Fenchel rate
// surrogate minus R_E^max and proximal penalties, subject to linearized
// outage constraints, power budgets and PSD cones.

#include <cstddef>
#include <string>
#include <vector>

#include "emfsec/convex_program.hpp"
#include "emfsec/hermitian.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

/// Basis with X = sum_k x_k E_k for x = realify(X): diagonal units first,
/// then for each i < j the pair (e_ij + e_ji, i e_ij - i e_ji).
std::vector<ComplexMatrix> hermitian_basis(std::size_t n);

/// Coordinates (X_00, .., X_nn, Re X_01, Im X_01, Re X_02, ...).
RealVector realify(const HermitianMatrix& x);
HermitianMatrix unrealify(const RealVector& v, std::size_t n);

/// ||X||_F^2 = sum_k w_k x_k^2: weight 1 on diagonal coordinates, 2 on the
/// off-diagonal real and imaginary parts.
RealVector frobenius_weights(std::size_t n);

/// Which artificial-noise covariances are free; disabled ones are pinned to
/// zero for the whole run.
struct NoiseConfig {
  bool bs_noise_enabled = true;
  bool ue_noise_enabled = true;

  static NoiseConfig none() { return {false, false}; }
  static NoiseConfig bs_only() { return {true, false}; }
  static NoiseConfig ue_only() { return {false, true}; }
  static NoiseConfig both() { return {true, true}; }
  /// "none", "bs-only", "ue-only" or "both"; throws std::invalid_argument.
  static NoiseConfig parse(const std::string& name);
  std::string name() const;
  bool operator==(const NoiseConfig&) const = default;
};

struct PenaltyWeights {
  double gamma_r = 1.0;
  double gamma = 1.0;
  double gamma_n = 1.0;
  double gamma_n_bar = 1.0;

  PenaltyWeights scaled(double f) const { return {gamma_r * f, gamma * f, gamma_n * f, gamma_n_bar * f}; }
};

struct SubproblemSpec {
  ChannelModel channel;
  HermitianMatrix b_star;
  CovarianceSet op;            // operating point (penalty centre, Taylor point)
  TaylorCoefficients eve;      // linearized Prob(R_E <= R_E^max)
  double eve_target = 0.95;    // 1 - epsilon
  TaylorCoefficients exposure; // linearized Prob(P_D <= P_D^max)
  double exposure_target = 0.95;
  PenaltyWeights penalties;
  double p_max = 10.0;
  double p_bar_max = 10.0;
  NoiseConfig noise;

  void validate() const;
};

/// Index map of the real variable vector [Q | Q_n | Qb | R_E^max].
struct VariableLayout {
  std::size_t n_bs = 0;
  std::size_t n_ue_tx = 0;
  std::size_t q_offset = 0;
  std::size_t qn_offset = 0;    // meaningful only when qn_count > 0
  std::size_t qnb_offset = 0;   // meaningful only when qnb_count > 0
  std::size_t q_count = 0;
  std::size_t qn_count = 0;
  std::size_t qnb_count = 0;
  std::size_t r_index = 0;

  VariableLayout(const Dimensions& d, const NoiseConfig& noise);
  std::size_t size() const { return r_index + 1; }
  RealVector pack(const CovarianceSet& cov) const;
  CovarianceSet unpack(const RealVector& x) const;
};

struct SubproblemSolution {
  CovarianceSet cov;
  double objective = 0.0;
  cvx::KktResiduals kkt;
  cvx::ProgramStatus status = cvx::ProgramStatus::max_iterations;
  /// Phase-I value; >= 0 certifies that the linearized feasible set has no
  /// interior (the separating certificate is in row_multipliers).
  double phase1_value = 0.0;
  RealVector row_multipliers;
  std::vector<std::string> row_names;
  int newton_steps = 0;
};

/// The dense program behind solve_subproblem, exposed for inspection.
cvx::ConvexProgram build_program(const SubproblemSpec& spec);

/// Surrogate objective R~_U - R_E^max - penalties at an arbitrary point.
double subproblem_objective(const SubproblemSpec& spec, const CovarianceSet& x);

/// Throws NumericalError on an invalid spec or tol outside [1e-9, 1e-4].
SubproblemSolution solve_subproblem(const SubproblemSpec& spec, double tol = 3e-7);

}  // namespace emfsec
