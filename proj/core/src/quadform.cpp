#include "emfsec/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "emfsec/hermitian.hpp"

namespace emfsec {

namespace {

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

// x^p / p! * e^{-x}, i.e. -dQ(p+1, x)/dx, evaluated in log space when large.
double poisson_term(int p, double x) {
  if (p == 0) return std::exp(-x);
  if (x == 0.0) return 0.0;
  if (std::abs(x) <= 500.0) return std::exp(-x) * std::pow(x, p) / factorial(p);
  const double sign = (x < 0.0 && (p % 2 == 1)) ? -1.0 : 1.0;
  return sign * std::exp(-x + p * std::log(std::abs(x)) - std::lgamma(p + 1.0));
}

bool positive_mults_at_most_two(const SpectralProfile& p) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p.lambdas[k] > 0.0 && p.mults[k] > 2) return false;
  }
  return true;
}

// log|P_k| and sign of P_k = prod_{j != k} (lambda_k / (lambda_k - lambda_j))^{m_j}.
struct LogProduct {
  double log_abs = 0.0;
  double sign = 1.0;
};

LogProduct product_term(const SpectralProfile& p, std::size_t k) {
  LogProduct out;
  const double lk = p.lambdas[k];
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == k) continue;
    const double ratio = lk / (lk - p.lambdas[j]);
    out.log_abs += p.mults[j] * std::log(std::abs(ratio));
    if (ratio < 0.0 && (p.mults[j] % 2 == 1)) out.sign = -out.sign;
  }
  return out;
}

// Coefficients c_n, n < count, of prod_{j != k} (1 + beta_j u)^{-m_j} through
// log-series a_n = sum_j m_j (-beta_j)^n / n and c_n = (1/n) sum_i i a_i c_{n-i}.
std::vector<double> series_coefficients(const SpectralProfile& p, std::size_t k, int count) {
  std::vector<double> a(static_cast<std::size_t>(count), 0.0);
  const double lk = p.lambdas[k];
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == k) continue;
    const double beta = p.lambdas[j] / (lk - p.lambdas[j]);
    double pw = 1.0;
    for (int n = 1; n < count; ++n) {
      pw *= -beta;
      a[static_cast<std::size_t>(n)] += p.mults[j] * pw / n;
    }
  }
  std::vector<double> c(static_cast<std::size_t>(count), 0.0);
  c[0] = 1.0;
  for (int n = 1; n < count; ++n) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) {
      s += i * a[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(n - i)];
    }
    c[static_cast<std::size_t>(n)] = s / n;
  }
  return c;
}

void check_z(double z) {
  if (!(z >= 0.0) || !std::isfinite(z)) {
    throw NumericalError("quadratic-form threshold must be finite and >= 0");
  }
}

}  // namespace

int SpectralProfile::dimension() const { return std::accumulate(mults.begin(), mults.end(), 0); }

bool SpectralProfile::has_positive() const {
  return std::any_of(lambdas.begin(), lambdas.end(), [](double l) { return l > 0.0; });
}

double SpectralProfile::min_relative_gap() const {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      const double scale = std::max(std::abs(lambdas[i]), std::abs(lambdas[j]));
      gap = std::min(gap, std::abs(lambdas[i] - lambdas[j]) / scale);
    }
  }
  return gap;
}

void SpectralProfile::validate() const {
  if (lambdas.size() != mults.size()) {
    throw NumericalError("SpectralProfile: lambdas and mults differ in length");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!std::isfinite(lambdas[i]) || lambdas[i] == 0.0) {
      throw NumericalError("SpectralProfile: eigenvalues must be finite and nonzero");
    }
    if (mults[i] < 1) throw NumericalError("SpectralProfile: multiplicities must be >= 1");
    for (std::size_t j = 0; j < i; ++j) {
      if (lambdas[i] == lambdas[j]) {
        throw NumericalError("SpectralProfile: eigenvalues must be distinct");
      }
    }
  }
}

GroupedSpectrum group_eigenvalues_mapped(std::span<const double> raw, double tol_rel) {
  GroupedSpectrum out;
  out.cluster_of.assign(raw.size(), -1);
  double scale = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw NumericalError("group_eigenvalues: non-finite eigenvalue");
    scale = std::max(scale, std::abs(v));
  }
  // Eigen-solver rounding scales with the largest magnitude, so both floors do too.
  const double zero_tol = tol_rel * scale;
  const double merge_tol = zero_tol;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (std::abs(raw[i]) <= zero_tol || raw[i] == 0.0) {
      ++out.zero_count;
    } else {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });

  // Single-linkage clustering on the sorted values.
  std::vector<double> sums;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    const bool join = pos > 0 && (raw[order[pos - 1]] - raw[i]) <= merge_tol;
    if (!join) {
      sums.push_back(0.0);
      out.profile.mults.push_back(0);
    }
    sums.back() += raw[i];
    out.profile.mults.back() += 1;
    out.cluster_of[i] = static_cast<int>(sums.size() - 1);
  }
  for (std::size_t k = 0; k < sums.size(); ++k) {
    out.profile.lambdas.push_back(sums[k] / out.profile.mults[k]);
  }
  return out;
}

SpectralProfile group_eigenvalues(std::span<const double> raw, double tol_rel) {
  return group_eigenvalues_mapped(raw, tol_rel).profile;
}

double upper_gamma_q(int m, double x) {
  if (m < 1) throw NumericalError("upper_gamma_q: m must be >= 1");
  if (!std::isfinite(x)) throw NumericalError("upper_gamma_q: non-finite argument");
  if (std::abs(x) <= 500.0) {
    double term = 1.0;
    double sum = 1.0;
    for (int j = 1; j < m; ++j) {
      term *= x / j;
      sum += term;
    }
    return std::exp(-x) * sum;
  }
  // Log-magnitude path: scale every x^j/j! by the largest term.
  std::vector<double> log_terms(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    log_terms[static_cast<std::size_t>(j)] = j * std::log(std::abs(x)) - std::lgamma(j + 1.0);
  }
  const double peak = *std::max_element(log_terms.begin(), log_terms.end());
  double scaled = 0.0;
  for (int j = 0; j < m; ++j) {
    const double sign = (x < 0.0 && (j % 2 == 1)) ? -1.0 : 1.0;
    scaled += sign * std::exp(log_terms[static_cast<std::size_t>(j)] - peak);
  }
  if (scaled == 0.0) return 0.0;
  const double sign = scaled < 0.0 ? -1.0 : 1.0;
  return sign * std::exp(-x + peak + std::log(std::abs(scaled)));
}

double upsilon(const SpectralProfile& profile, std::size_t k) {
  double s = 0.0;
  const double lk = profile.lambdas.at(k);
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (j == k) continue;
    s += profile.mults[j] * profile.lambdas[j] / (lk - profile.lambdas[j]);
  }
  return s;
}

TailResult tail_probability(const SpectralProfile& profile, double z) {
  return tail_probability(profile, z, &upper_gamma_q);
}

TailResult tail_probability(const SpectralProfile& profile, double z, UpperGammaFn q) {
  check_z(z);
  TailResult out;
  out.per_eigenvalue_terms.assign(profile.size(), 0.0);
  out.ill_conditioned = profile.size() > 1 && profile.min_relative_gap() < kIllConditionedGap;
  double total = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double lk = profile.lambdas[k];
    if (lk <= 0.0) continue;
    const int mk = profile.mults[k];
    const auto c = series_coefficients(profile, k, mk);
    const double x = z / lk;
    double s = 0.0;
    for (int n = 0; n < mk; ++n) s += c[static_cast<std::size_t>(n)] * q(mk - n, x);
    const auto pk = product_term(profile, k);
    const double term = pk.sign * std::exp(pk.log_abs) * s;
    out.per_eigenvalue_terms[k] = term;
    total += term;
  }
  out.unclamped = total;
  out.probability = std::clamp(total, 0.0, 1.0);
  return out;
}

double cdf(const SpectralProfile& profile, double z) {
  return 1.0 - tail_probability(profile, z).probability;
}

double tail_probability_printed_series(const SpectralProfile& profile, double z) {
  check_z(z);
  double total = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double lk = profile.lambdas[k];
    if (lk <= 0.0) continue;
    const double ups = upsilon(profile, k);
    const double x = z / lk - ups;
    double term = 1.0;
    double sum = 1.0;
    for (int j = 1; j < profile.mults[k]; ++j) {
      term *= x / j;
      sum += term;
    }
    const auto pk = product_term(profile, k);
    total += pk.sign * std::exp(pk.log_abs - z / lk) * sum;
  }
  return std::clamp(total, 0.0, 1.0);
}

double density(const SpectralProfile& profile, double z) {
  check_z(z);
  double f = 0.0;
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const double lk = profile.lambdas[k];
    if (lk <= 0.0) continue;
    const int mk = profile.mults[k];
    const auto c = series_coefficients(profile, k, mk);
    const double x = z / lk;
    double s = 0.0;
    for (int n = 0; n < mk; ++n) s += c[static_cast<std::size_t>(n)] * poisson_term(mk - n - 1, x);
    const auto pk = product_term(profile, k);
    f += pk.sign * std::exp(pk.log_abs) * s / lk;
  }
  return f;
}

std::vector<double> lambda_derivatives(const SpectralProfile& profile, double z) {
  if (positive_mults_at_most_two(profile)) return lambda_derivatives_closed_form(profile, z);
  return lambda_derivatives_series(profile, z);
}

std::vector<double> lambda_derivatives_closed_form(const SpectralProfile& profile, double z) {
  check_z(z);
  const std::size_t n = profile.size();
  const auto& lam = profile.lambdas;
  const auto& m = profile.mults;

  std::vector<double> ups(n), x(n), prod(n), q_term(n), bracket(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (lam[k] <= 0.0) continue;
    ups[k] = upsilon(profile, k);
    x[k] = z / lam[k] - ups[k];
    const auto pk = product_term(profile, k);
    prod[k] = pk.sign * std::exp(pk.log_abs);
    // exp(-Upsilon) Q(m, x) and exp(-z/lambda) x^{m-1} / (m-1)!, both free of exp(-Upsilon).
    q_term[k] = std::exp(-z / lam[k]) * [&] {
      double t = 1.0, s = 1.0;
      for (int j = 1; j < m[k]; ++j) {
        t *= x[k] / j;
        s += t;
      }
      return s;
    }();
    bracket[k] = std::exp(-z / lam[k]) * std::pow(x[k], m[k] - 1) / factorial(m[k] - 1);
  }

  // F_k^-: contribution of cluster k through the other positive terms.
  auto f_minus = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t kp = 0; kp < n; ++kp) {
      if (kp == k || lam[kp] <= 0.0) continue;
      const double d2 = (lam[kp] - lam[k]) * (lam[kp] - lam[k]);
      s += (q_term[kp] * m[k] * lam[k] / d2 - bracket[kp] * m[k] * lam[kp] / d2) * prod[kp];
    }
    return s;
  };

  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double d = f_minus(k);
    if (lam[k] > 0.0) {
      double sq = 0.0;
      double lin = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == k) continue;
        const double d2 = (lam[k] - lam[j]) * (lam[k] - lam[j]);
        sq += m[j] * lam[j] * lam[j] / (lam[k] * d2);
        lin += m[j] * lam[j] / d2;
      }
      d += (-q_term[k] * sq + bracket[k] * (-z / (lam[k] * lam[k]) + lin)) * prod[k];
    }
    out[k] = d;
  }
  return out;
}

std::vector<double> lambda_derivatives_series(const SpectralProfile& profile, double z) {
  check_z(z);
  const std::size_t n = profile.size();
  const auto& lam = profile.lambdas;
  const auto& m = profile.mults;
  Eigen::VectorXd grad_tail = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));

  for (std::size_t k = 0; k < n; ++k) {
    const double lk = lam[k];
    if (lk <= 0.0) continue;
    const int mk = m[k];
    const auto ki = static_cast<Eigen::Index>(k);

    // Log-series a_n and their gradients.
    std::vector<double> a(static_cast<std::size_t>(mk), 0.0);
    std::vector<Eigen::VectorXd> da(static_cast<std::size_t>(mk),
                                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    Eigen::VectorXd dlog_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k) continue;
      const auto ji = static_cast<Eigen::Index>(j);
      const double diff = lk - lam[j];
      const double beta = lam[j] / diff;
      const double dbeta_dj = lk / (diff * diff);
      const double dbeta_dk = -lam[j] / (diff * diff);
      dlog_p(ji) += m[j] / diff;
      dlog_p(ki) += m[j] * (1.0 / lk - 1.0 / diff);
      double pw = 1.0;  // (-beta)^{nn-1}
      for (int nn = 1; nn < mk; ++nn) {
        a[static_cast<std::size_t>(nn)] += m[j] * pw * (-beta) / nn;
        const double coef = m[j] * ((nn % 2 == 0) ? 1.0 : -1.0) * std::pow(beta, nn - 1);
        da[static_cast<std::size_t>(nn)](ji) += coef * dbeta_dj;
        da[static_cast<std::size_t>(nn)](ki) += coef * dbeta_dk;
        pw *= -beta;
      }
    }

    std::vector<double> c(static_cast<std::size_t>(mk), 0.0);
    std::vector<Eigen::VectorXd> dc(static_cast<std::size_t>(mk),
                                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
    c[0] = 1.0;
    for (int nn = 1; nn < mk; ++nn) {
      const auto un = static_cast<std::size_t>(nn);
      for (int i = 1; i <= nn; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        c[un] += i * a[ui] * c[un - ui];
        dc[un] += i * (da[ui] * c[un - ui] + a[ui] * dc[un - ui]);
      }
      c[un] /= nn;
      dc[un] /= nn;
    }

    const double x = z / lk;
    double s = 0.0;
    Eigen::VectorXd ds = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (int nn = 0; nn < mk; ++nn) {
      const auto un = static_cast<std::size_t>(nn);
      const int r = mk - nn;
      const double qv = upper_gamma_q(r, x);
      s += c[un] * qv;
      ds += dc[un] * qv;
      // dQ(r, x)/d lambda_k = -poisson(r-1, x) * (-z / lambda_k^2)
      ds(ki) += c[un] * poisson_term(r - 1, x) * z / (lk * lk);
    }
    const auto pk = product_term(profile, k);
    const double p_val = pk.sign * std::exp(pk.log_abs);
    grad_tail += p_val * (s * dlog_p + ds);
  }

  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = -grad_tail(static_cast<Eigen::Index>(k));
  return out;
}

double zero_eigenvalue_derivative(const SpectralProfile& profile, double z) {
  return -density(profile, z);
}

}  // namespace emfsec
