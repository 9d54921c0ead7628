#pragma once

// Random problem instances for oracle checks, benchmarks and the validate
// subcommand. All draws come from a CounterRng, so a (seed, stream) pair
// always yields the same instance.

#include <cstddef>

#include "emfsec/convex_subproblem.hpp"
#include "emfsec/monte_carlo.hpp"
#include "emfsec/quadform.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

/// Log-uniform magnitude in [lo, hi].
double log_uniform(CounterRng& rng, double lo, double hi);

/// Random Hermitian matrix with i.i.d. Gaussian entries (unit scale).
HermitianMatrix random_hermitian(CounterRng& rng, std::size_t n);
/// A A^H / n for a Gaussian A, times `scale`.
HermitianMatrix random_psd(CounterRng& rng, std::size_t n, double scale = 1.0);

/// Distinct eigenvalues with |lambda| in [mag_lo, mag_hi], mixed signs when
/// `mixed_signs`, multiplicities <= max_mult, total dimension <= max_dim, and
/// pairwise relative gaps >= min_gap. At least one eigenvalue is positive.
SpectralProfile random_profile(CounterRng& rng, int max_dim, int max_mult, double mag_lo, double mag_hi,
                               bool mixed_signs, double min_gap = 0.05);

/// z = max(0, mean + a * stddev) of the form described by the profile.
double profile_quantile_proxy(const SpectralProfile& p, double a);

/// Random eavesdropper/exposure statistics with 2 BS antennas and one UE
/// transmit antenna, H_U drawn as well.
ChannelModel random_channel(CounterRng& rng, std::size_t n_bs = 2, std::size_t n_ue_tx = 1);

/// Random covariances (each block nonzero) and r_e_max in [0.1, 3] bits.
CovarianceSet random_covariances(CounterRng& rng, std::size_t n_bs = 2, std::size_t n_ue_tx = 1);

}  // namespace emfsec
