#include "emfsec/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

namespace emfsec {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Runs f(chunk, begin, end) -> count over all chunks and returns the total.
template <typename F>
std::size_t count_chunks(std::size_t n, unsigned threads, F f) {
  const std::size_t n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<std::size_t> counts(n_chunks, 0);
  unsigned t = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  t = static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(n_chunks, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < n_chunks; c = next++) {
      const std::size_t begin = c * kChunkSize;
      counts[c] = f(c, begin, std::min(n, begin + kChunkSize));
    }
  };
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::size_t total = 0;
  for (auto c : counts) total += c;
  return total;
}

Estimate make_estimate(std::size_t k, std::size_t n) {
  Estimate e;
  e.successes = k;
  e.n = n;
  if (n == 0) return e;
  e.estimate = static_cast<double>(k) / static_cast<double>(n);
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(n));
  return e;
}

double quad(const ComplexVector& h, const ComplexMatrix& m, ComplexVector& tmp) {
  if (h.size() == 0) return 0.0;
  tmp.noalias() = m * h;
  return h.dot(tmp).real();
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix(seed ^ mix(stream + kGolden))) {}

std::uint64_t CounterRng::mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t CounterRng::next_u64() { return mix(base_ + kGolden * counter_++); }

double CounterRng::uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

cdouble CounterRng::complex_normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(th), r * std::sin(th)};
}

NormalSource::NormalSource(std::uint64_t seed, std::uint64_t stream, bool antithetic)
    : rng_(seed, stream), antithetic_(antithetic) {}

void NormalSource::next(ComplexVector& r) {
  const auto n = static_cast<std::size_t>(r.size());
  if (!antithetic_ || !mirror_turn_) {
    u1_.resize(n);
    u2_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      u1_[i] = rng_.uniform();
      u2_[i] = rng_.uniform();
    }
  }
  const bool mirrored = antithetic_ && mirror_turn_;
  for (std::size_t i = 0; i < n; ++i) {
    const double u1 = mirrored ? 1.0 - u1_[i] : u1_[i];
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2_[i];
    r(ix(i)) = cdouble(rad * std::cos(th), rad * std::sin(th));
  }
  if (antithetic_) mirror_turn_ = !mirror_turn_;
}

ComplexVector sample_channel(const ComplexMatrix& l, CounterRng& rng) {
  ComplexVector r(l.rows());
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = rng.complex_normal();
  return l.adjoint() * r;
}

ComplexVector sample_channel(const HermitianMatrix& cov, CounterRng& rng) {
  return sample_channel(half_factor(cov), rng);
}

Estimate empirical_sop(const ChannelModel& ch, const CovarianceSet& cov, const SampleSpec& spec) {
  const ComplexMatrix lh = half_factor(ch.g_e).adjoint();
  const ComplexMatrix lbh = half_factor(ch.g_e_bar).adjoint();
  const auto nb = lh.cols();
  const auto nu = lbh.cols();
  const std::size_t hits = count_chunks(spec.n_samples, spec.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    NormalSource src(spec.seed, c, spec.antithetic);
    ComplexVector r(nb + nu), h(lh.rows()), hb(lbh.rows()), tmp;
    std::size_t k = 0;
    for (std::size_t i = b; i < e; ++i) {
      src.next(r);
      h.noalias() = lh * r.head(nb);
      hb.noalias() = lbh * r.tail(nu);
      const double signal = quad(h, cov.q.matrix(), tmp);
      const double noise = quad(hb, cov.q_n_bar.matrix(), tmp) + quad(h, cov.q_n.matrix(), tmp) + ch.v_e;
      const double rate = std::max(std::log2(1.0 + signal / noise), 0.0);
      if (rate <= cov.r_e_max) ++k;
    }
    return k;
  });
  return make_estimate(hits, spec.n_samples);
}

Estimate empirical_exposure(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max,
                            const SampleSpec& spec) {
  const ComplexMatrix lh = half_factor(ch.g_d).adjoint();
  const ComplexMatrix lbh = half_factor(ch.g_d_bar).adjoint();
  const ComplexMatrix q_bs = (cov.q + cov.q_n).matrix();
  const auto nb = lh.cols();
  const auto nu = lbh.cols();
  const std::size_t hits = count_chunks(spec.n_samples, spec.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    NormalSource src(spec.seed, c, spec.antithetic);
    ComplexVector r(nb + nu), h(lh.rows()), hb(lbh.rows()), tmp;
    std::size_t k = 0;
    for (std::size_t i = b; i < e; ++i) {
      src.next(r);
      h.noalias() = lh * r.head(nb);
      hb.noalias() = lbh * r.tail(nu);
      const double p_d = quad(h, q_bs, tmp) + quad(hb, cov.q_n_bar.matrix(), tmp);
      if (p_d <= p_d_max) ++k;
    }
    return k;
  });
  return make_estimate(hits, spec.n_samples);
}

std::vector<Estimate> empirical_tail(const SpectralProfile& profile, const std::vector<double>& z,
                                     const SampleSpec& spec) {
  profile.validate();
  std::vector<std::size_t> total(z.size(), 0);
  // Per-threshold counts go to a side table indexed by chunk.
  const std::size_t n_chunks = (spec.n_samples + kChunkSize - 1) / kChunkSize;
  std::vector<std::vector<std::size_t>> per_chunk(n_chunks, std::vector<std::size_t>(z.size(), 0));
  int draws = 0;
  for (int m : profile.mults) draws += m;
  count_chunks(spec.n_samples, spec.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    CounterRng rng(spec.seed, c);
    std::vector<double> u(static_cast<std::size_t>(draws));
    bool mirror = false;
    auto& counts = per_chunk[c];
    for (std::size_t i = b; i < e; ++i) {
      if (!spec.antithetic || !mirror) {
        for (auto& v : u) v = rng.uniform();
      }
      double form = 0.0;
      std::size_t j = 0;
      for (std::size_t k = 0; k < profile.size(); ++k) {
        double g = 0.0;
        for (int t = 0; t < profile.mults[k]; ++t, ++j) {
          const double uu = (spec.antithetic && mirror) ? 1.0 - u[j] : u[j];
          g -= std::log(uu);
        }
        form += profile.lambdas[k] * g;
      }
      for (std::size_t q = 0; q < z.size(); ++q) {
        if (form > z[q]) ++counts[q];
      }
      if (spec.antithetic) mirror = !mirror;
    }
    return std::size_t{0};
  });
  std::vector<Estimate> out;
  for (std::size_t q = 0; q < z.size(); ++q) {
    for (std::size_t c = 0; c < n_chunks; ++c) total[q] += per_chunk[c][q];
    out.push_back(make_estimate(total[q], spec.n_samples));
  }
  return out;
}

std::vector<double> sample_eavesdropper_rates(const ChannelModel& ch, const CovarianceSet& cov,
                                              const SampleSpec& spec) {
  const ComplexMatrix le = half_factor(ch.g_e);
  const ComplexMatrix leb = half_factor(ch.g_e_bar);
  std::vector<double> out;
  out.reserve(spec.n_samples);
  const std::size_t n_chunks = (spec.n_samples + kChunkSize - 1) / kChunkSize;
  for (std::size_t c = 0; c < n_chunks; ++c) {
    NormalSource src(spec.seed, c, spec.antithetic);
    ComplexVector r(le.rows() + leb.rows());
    const std::size_t end = std::min(spec.n_samples, (c + 1) * kChunkSize);
    for (std::size_t i = c * kChunkSize; i < end; ++i) {
      src.next(r);
      const ComplexVector h = le.adjoint() * r.head(le.rows());
      const ComplexVector hb = leb.adjoint() * r.tail(leb.rows());
      out.push_back(rate_eavesdropper(h, hb, cov, ch.v_e));
    }
  }
  return out;
}

}  // namespace emfsec
