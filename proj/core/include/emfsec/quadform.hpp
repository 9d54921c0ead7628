#pragma once

// Distribution of X = sum_k lambda_k * Gamma(m_k, 1): the quadratic form
// r^H diag(lambda) r / 2 in a complex Gaussian vector whose components have
// unit-variance real and imaginary parts. Eigenvalues may have either sign.
//
// For z >= 0 the tail is a finite partial-fraction sum over the positive
// eigenvalues:
//
//   P(X > z) = sum_{k: lambda_k > 0} P_k * sum_{n < m_k} c_{k,n} Q(m_k - n, z / lambda_k)
//   P_k      = prod_{j != k} (lambda_k / (lambda_k - lambda_j))^{m_j}
//   c_{k,n}  = [u^n] prod_{j != k} (1 + beta_kj u)^{-m_j},  beta_kj = lambda_j / (lambda_k - lambda_j)
//
// Replacing the product in c_{k,n} by exp(-Upsilon_k u) gives the compact
// series exp(-Upsilon_k) Q(m_k, z/lambda_k - Upsilon_k) P_k, which agrees
// with the above whenever every positive eigenvalue has m_k <= 2 (always the
// case for two BS antennas and a single UE transmit antenna).

#include <cstddef>
#include <span>
#include <vector>

namespace emfsec {

inline constexpr double kDefaultGroupingTol = 1e-8;
/// Relative eigenvalue gap below which tail/gradient results are flagged.
inline constexpr double kIllConditionedGap = 1e-3;

/// Distinct nonzero eigenvalues (descending) with multiplicities.
struct SpectralProfile {
  std::vector<double> lambdas;
  std::vector<int> mults;

  std::size_t size() const { return lambdas.size(); }
  bool empty() const { return lambdas.empty(); }
  /// Sum of multiplicities.
  int dimension() const;
  bool has_positive() const;
  /// Smallest |lambda_i - lambda_j| / max(|lambda_i|, |lambda_j|).
  double min_relative_gap() const;
  /// Throws NumericalError if lambdas/mults are inconsistent.
  void validate() const;
};

/// Grouping result with the map from each raw eigenvalue to its cluster.
struct GroupedSpectrum {
  SpectralProfile profile;
  /// cluster_of[i] is the profile index of raw[i], or -1 if it was dropped as zero.
  std::vector<int> cluster_of;
  int zero_count = 0;
};

GroupedSpectrum group_eigenvalues_mapped(std::span<const double> raw,
                                         double tol_rel = kDefaultGroupingTol);

/// Drops |lambda| <= tol_rel * max|raw| and merges eigenvalues closer than
/// that into their mean.
SpectralProfile group_eigenvalues(std::span<const double> raw,
                                  double tol_rel = kDefaultGroupingTol);

/// e^{-x} sum_{j<m} x^j / j!; the regularized upper incomplete gamma for
/// x >= 0, continued to x < 0 by the same finite series.
double upper_gamma_q(int m, double x);

using UpperGammaFn = double (*)(int, double);

/// sum_{j != k} m_j lambda_j / (lambda_k - lambda_j)
double upsilon(const SpectralProfile& profile, std::size_t k);

struct TailResult {
  double probability = 0.0;      // P(X > z), clamped to [0, 1]
  double unclamped = 0.0;
  std::vector<double> per_eigenvalue_terms;  // one per profile entry (0 for lambda <= 0)
  bool ill_conditioned = false;  // some relative gap < kIllConditionedGap
};

/// P(X > z) for z >= 0. An empty positive set gives 0.
TailResult tail_probability(const SpectralProfile& profile, double z);
/// Same, with the incomplete-gamma kernel supplied by the caller.
TailResult tail_probability(const SpectralProfile& profile, double z, UpperGammaFn q);

/// P(X <= z) = 1 - tail.
double cdf(const SpectralProfile& profile, double z);

/// The compact exp(-Upsilon) series (exact only when positive m_k <= 2).
/// Evaluated as e^{-z/lambda_k} sum_j (z/lambda_k - Upsilon_k)^j / j! so the
/// exp(-Upsilon_k) factor never overflows on its own.
double tail_probability_printed_series(const SpectralProfile& profile, double z);

/// dCDF/dz, the density of X at z.
double density(const SpectralProfile& profile, double z);

/// d CDF / d lambda_k, where the whole cluster k (all m_k copies) moves.
///
/// Uses the closed forms F_k^- (lambda_k <= 0) and F_k^+ (lambda_k > 0) when
/// all positive multiplicities are <= 2, and the derivative of the general
/// partial-fraction series otherwise.
std::vector<double> lambda_derivatives(const SpectralProfile& profile, double z);

/// Closed-form F_k^-/F_k^+ route. Differentiates the compact series.
std::vector<double> lambda_derivatives_closed_form(const SpectralProfile& profile, double z);

/// Exact derivative of the partial-fraction series for any multiplicities.
std::vector<double> lambda_derivatives_series(const SpectralProfile& profile, double z);

/// d CDF / d lambda for a single eigenvalue sitting at zero (not stored in
/// the profile). Equals -density(z): growing a null direction adds a small
/// exponential to X.
double zero_eigenvalue_derivative(const SpectralProfile& profile, double z);

}  // namespace emfsec
