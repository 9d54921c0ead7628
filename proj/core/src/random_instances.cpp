#include "emfsec/random_instances.hpp"

#include <algorithm>
#include <cmath>

namespace emfsec {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

ComplexMatrix gaussian(CounterRng& rng, std::size_t r, std::size_t c) {
  ComplexMatrix a(ix(r), ix(c));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.complex_normal() / std::sqrt(2.0);
  }
  return a;
}

}  // namespace

double log_uniform(CounterRng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

HermitianMatrix random_hermitian(CounterRng& rng, std::size_t n) {
  const ComplexMatrix a = gaussian(rng, n, n);
  return HermitianMatrix(ComplexMatrix(0.5 * (a + a.adjoint())));
}

HermitianMatrix random_psd(CounterRng& rng, std::size_t n, double scale) {
  const ComplexMatrix a = gaussian(rng, n, n);
  return HermitianMatrix(ComplexMatrix(scale / static_cast<double>(n) * a * a.adjoint()), 1e-6);
}

SpectralProfile random_profile(CounterRng& rng, int max_dim, int max_mult, double mag_lo, double mag_hi,
                               bool mixed_signs, double min_gap) {
  for (;;) {
    SpectralProfile p;
    int dim = 0;
    const int target = 1 + static_cast<int>(rng.uniform() * max_dim);
    while (dim < target) {
      const int room = std::min(max_mult, target - dim);
      const int m = 1 + static_cast<int>(rng.uniform() * room);
      double lam = log_uniform(rng, mag_lo, mag_hi);
      if (mixed_signs && rng.uniform() < 0.4) lam = -lam;
      p.lambdas.push_back(lam);
      p.mults.push_back(m);
      dim += m;
    }
    if (!p.has_positive()) {
      auto it = std::min_element(p.lambdas.begin(), p.lambdas.end());
      *it = -*it;
    }
    // Sort descending, keeping multiplicities aligned.
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p.lambdas[a] > p.lambdas[b]; });
    SpectralProfile s;
    for (auto i : order) {
      s.lambdas.push_back(p.lambdas[i]);
      s.mults.push_back(p.mults[i]);
    }
    if (s.size() < 2 || s.min_relative_gap() >= min_gap) return s;
  }
}

double profile_quantile_proxy(const SpectralProfile& p, double a) {
  double mu = 0.0;
  double var = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    mu += p.mults[k] * p.lambdas[k];
    var += p.mults[k] * p.lambdas[k] * p.lambdas[k];
  }
  return std::max(0.0, mu + a * std::sqrt(var));
}

ChannelModel random_channel(CounterRng& rng, std::size_t n_bs, std::size_t n_ue_tx) {
  ChannelModel ch;
  ch.h_u = gaussian(rng, 1, n_bs);
  ch.g_u_max = 0.1;
  ch.v_u = HermitianMatrix::identity(1, 0.1);
  ch.v_e = log_uniform(rng, 0.05, 0.5);
  ch.g_e = random_psd(rng, n_bs, log_uniform(rng, 0.5, 2.0));
  ch.g_e_bar = random_psd(rng, n_ue_tx, log_uniform(rng, 0.5, 2.0));
  ch.g_d = random_psd(rng, n_bs, log_uniform(rng, 0.5, 2.0));
  ch.g_d_bar = random_psd(rng, n_ue_tx, log_uniform(rng, 0.5, 2.0));
  return ch;
}

CovarianceSet random_covariances(CounterRng& rng, std::size_t n_bs, std::size_t n_ue_tx) {
  CovarianceSet c;
  c.q = random_psd(rng, n_bs, log_uniform(rng, 0.5, 5.0));
  c.q_n = random_psd(rng, n_bs, log_uniform(rng, 0.05, 1.0));
  c.q_n_bar = random_psd(rng, n_ue_tx, log_uniform(rng, 0.05, 1.0));
  c.r_e_max = 0.1 + 2.9 * rng.uniform();
  return c;
}

}  // namespace emfsec
