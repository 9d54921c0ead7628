#pragma once

// Channel-level Monte Carlo estimators used as oracles for the closed forms.
//
// Randomness is counter based: sample i of a run with seed s lives in chunk
// i / kChunkSize, and each chunk draws from its own SplitMix64 stream keyed by
// (s, chunk). Chunks are evaluated on a thread pool and merged as integer
// counts, so results do not depend on the number of threads.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "emfsec/hermitian.hpp"
#include "emfsec/quadform.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

inline constexpr std::size_t kChunkSize = 65536;

struct SampleSpec {
  std::size_t n_samples = 1000000;
  std::uint64_t seed = 1;
  bool antithetic = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct Estimate {
  double estimate = 0.0;
  double std_error = 0.0;  // binomial sqrt(p(1-p)/n)
  std::size_t successes = 0;
  std::size_t n = 0;
};

/// SplitMix64 evaluated at consecutive counters of a keyed stream.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform in the open interval (0, 1).
  double uniform();
  /// Box-Muller draw with unit-variance real and imaginary parts.
  cdouble complex_normal();

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

/// Fills r with i.i.d. complex normals (unit-variance parts). In antithetic
/// mode the second of each pair reuses the angles and replaces u1 by 1 - u1.
class NormalSource {
 public:
  NormalSource(std::uint64_t seed, std::uint64_t stream, bool antithetic);
  void next(ComplexVector& r);

 private:
  CounterRng rng_;
  bool antithetic_;
  bool mirror_turn_ = false;
  std::vector<double> u1_;
  std::vector<double> u2_;
};

/// h = L^H r for the half factor of `cov`.
ComplexVector sample_channel(const HermitianMatrix& cov, CounterRng& rng);
ComplexVector sample_channel(const ComplexMatrix& l, CounterRng& rng);

/// Fraction of draws with R_E <= R_E^max.
Estimate empirical_sop(const ChannelModel& ch, const CovarianceSet& cov, const SampleSpec& spec);
/// Fraction of draws with P_D <= p_d_max.
Estimate empirical_exposure(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max,
                            const SampleSpec& spec);
/// Prob(sum_k lambda_k Gamma(m_k, 1) > z) for each z, from one shared sample.
std::vector<Estimate> empirical_tail(const SpectralProfile& profile, const std::vector<double>& z,
                                     const SampleSpec& spec);
/// Raw eavesdropper rate samples (for quantile checks); single-threaded.
std::vector<double> sample_eavesdropper_rates(const ChannelModel& ch, const CovarianceSet& cov,
                                              const SampleSpec& spec);

}  // namespace emfsec
