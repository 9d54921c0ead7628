#pragma once

// Small dense convex programs of the form
//
//   maximize   sum_t w_t log det(A_t0 + sum_i x_i A_ti) + c^T x
//              - sum_i d_i (x_i - x0_i)^2 + const
//   subject to G x <= h
//              E_b0 + sum_i x_i E_bi  PSD   for every block b
//
// solved by a primal log-barrier method with damped Newton steps and a
// phase-I feasibility search. Sizes are a handful of variables and 1x1/2x2
// Hermitian blocks, so everything is dense.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emfsec/hermitian.hpp"

namespace emfsec::cvx {

struct LogDetTerm {
  double weight = 1.0;
  ComplexMatrix a0;
  std::vector<ComplexMatrix> a;  // one Hermitian matrix per variable
};

struct PsdBlock {
  ComplexMatrix e0;
  std::vector<ComplexMatrix> e;  // one Hermitian matrix per variable
  std::string name;
};

struct ConvexProgram {
  std::size_t n = 0;
  std::vector<LogDetTerm> logdet;
  RealVector linear;        // c
  RealVector quad_weight;   // d >= 0
  RealVector quad_center;   // x0
  double constant = 0.0;
  Eigen::MatrixXd g;        // rows of G
  RealVector h;
  std::vector<std::string> row_names;
  std::vector<PsdBlock> blocks;

  /// Sizes every member for n variables with no terms or constraints.
  explicit ConvexProgram(std::size_t n_vars = 0);

  void add_row(const RealVector& coeffs, double rhs, std::string name = {});
  double objective(const RealVector& x) const;
};

struct SolverOptions {
  double tol = 3e-7;          // target for mu * (barrier dimension)
  double mu_initial = 1.0;
  double mu_factor = 0.2;
  int max_newton_per_stage = 200;
  int max_stages = 60;
};

enum class ProgramStatus { optimal, infeasible, max_iterations };

std::string to_string(ProgramStatus s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double dual = 0.0;  // negative part of the multipliers

  double max() const;
};

struct ProgramSolution {
  RealVector x;
  double objective = 0.0;
  ProgramStatus status = ProgramStatus::max_iterations;
  KktResiduals kkt;
  RealVector row_multipliers;                 // one per linear row
  std::vector<ComplexMatrix> block_multipliers;  // one per PSD block
  /// Phase-I optimum: the smallest uniform constraint relaxation. Negative
  /// means strictly feasible; >= 0 certifies an empty interior.
  double phase1_value = 0.0;
  int newton_steps = 0;
};

/// Solves the program starting from `hint` (need not be feasible).
ProgramSolution solve(const ConvexProgram& prog, const RealVector& hint,
                      const SolverOptions& opt = {});

/// KKT residuals of a candidate primal/dual pair, for certification.
KktResiduals kkt_residuals(const ConvexProgram& prog, const RealVector& x,
                           const RealVector& row_multipliers,
                           const std::vector<ComplexMatrix>& block_multipliers);

/// PSD-block multipliers that best satisfy stationarity for the given row
/// multipliers, in the least-squares sense. The barrier estimate mu X^{-1}
/// loses accuracy as X approaches the boundary of the cone.
std::vector<ComplexMatrix> recover_block_multipliers(const ConvexProgram& prog, const RealVector& x,
                                                     const RealVector& row_multipliers);

/// Gradient of the objective (used by tests and the residual check).
RealVector objective_gradient(const ConvexProgram& prog, const RealVector& x);

}  // namespace emfsec::cvx
