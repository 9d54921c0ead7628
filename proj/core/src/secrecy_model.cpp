#include "emfsec/secrecy_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace emfsec {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require(bool ok, const char* what) {
  if (!ok) throw NumericalError(what);
}

// Per-column F entries for a spectrum: d CDF / d lambda_k divided by m_k for
// clustered eigenvalues, the zero-eigenvalue derivative for dropped ones.
struct ColumnWeights {
  RealVector bs;
  RealVector ue;
};

ColumnWeights column_weights(const OutageSpectrum& s) {
  const auto& prof = s.grouped.profile;
  const auto d = lambda_derivatives(prof, s.z);
  const double d_zero = zero_eigenvalue_derivative(prof, s.z);
  const std::size_t n_bs = s.bs.values.size();
  const std::size_t n_ue = s.ue.values.size();
  ColumnWeights w{RealVector(idx(n_bs)), RealVector(idx(n_ue))};
  for (std::size_t i = 0; i < n_bs + n_ue; ++i) {
    const int k = s.grouped.cluster_of[i];
    const double v = k < 0 ? d_zero : d[static_cast<std::size_t>(k)] / prof.mults[static_cast<std::size_t>(k)];
    if (i < n_bs) {
      w.bs(idx(i)) = v;
    } else {
      w.ue(idx(i - n_bs)) = v;
    }
  }
  return w;
}

// 2 L^H U F U^H L
HermitianMatrix chain_back(const ComplexMatrix& l, const EigenDecomposition& eig, const RealVector& f) {
  if (eig.vectors.size() == 0) return HermitianMatrix(static_cast<std::size_t>(l.cols()));
  const ComplexMatrix uf = eig.vectors * f.cast<cdouble>().asDiagonal() * eig.vectors.adjoint();
  return HermitianMatrix(ComplexMatrix(2.0 * l.adjoint() * uf * l), 1e-6);
}

OutageSpectrum assemble(const HermitianMatrix& bs_mat, const HermitianMatrix& ue_mat,
                        const ComplexMatrix& l_bs, const ComplexMatrix& l_ue, double z) {
  OutageSpectrum s;
  s.bs = hermitian_eig(bs_mat);
  s.ue = hermitian_eig(ue_mat);
  s.l_bs = l_bs;
  s.l_ue = l_ue;
  s.z = z;
  std::vector<double> raw = s.bs.values;
  raw.insert(raw.end(), s.ue.values.begin(), s.ue.values.end());
  s.grouped = group_eigenvalues_mapped(raw);
  return s;
}

}  // namespace

Dimensions ChannelModel::dims() const {
  return {static_cast<std::size_t>(h_u.cols()), g_e_bar.dim(), static_cast<std::size_t>(h_u.rows())};
}

void ChannelModel::validate() const {
  const auto d = dims();
  require(d.n_bs >= 1 && d.n_ue_rx >= 1 && d.n_ue_tx >= 1, "ChannelModel: empty dimension");
  require(h_u.allFinite(), "ChannelModel: non-finite H_U");
  require(v_u.dim() == d.n_ue_rx, "ChannelModel: V_U size mismatch");
  require(g_e.dim() == d.n_bs && g_d.dim() == d.n_bs, "ChannelModel: BS-side covariance size mismatch");
  require(g_d_bar.dim() == d.n_ue_tx, "ChannelModel: UE-side covariance size mismatch");
  require(g_u_max >= 0.0 && std::isfinite(g_u_max), "ChannelModel: g_u_max must be >= 0");
  require(v_e > 0.0 && std::isfinite(v_e), "ChannelModel: V_E must be > 0");
  require(min_eigenvalue(v_u) > 0.0, "ChannelModel: V_U must be positive definite");
  for (const auto* g : {&g_e, &g_e_bar, &g_d, &g_d_bar}) {
    require(is_psd(*g), "ChannelModel: channel covariance is not PSD");
  }
}

ChannelModel ChannelModel::isotropic(const ComplexMatrix& h_u, std::size_t n_ue_tx) {
  ChannelModel ch;
  const auto n_bs = static_cast<std::size_t>(h_u.cols());
  const auto n_rx = static_cast<std::size_t>(h_u.rows());
  ch.h_u = h_u;
  ch.g_u_max = 0.1;
  ch.v_u = HermitianMatrix::identity(n_rx, 0.1);
  ch.v_e = 0.1;
  ch.g_e = HermitianMatrix::identity(n_bs);
  ch.g_d = HermitianMatrix::identity(n_bs);
  ch.g_e_bar = HermitianMatrix::identity(n_ue_tx);
  ch.g_d_bar = HermitianMatrix::identity(n_ue_tx);
  return ch;
}

CovarianceSet CovarianceSet::zero(const Dimensions& d) {
  return {HermitianMatrix(d.n_bs), HermitianMatrix(d.n_bs), HermitianMatrix(d.n_ue_tx), 0.0};
}

void OutageSpec::validate() const {
  require(epsilon > 0.0 && epsilon < 1.0, "OutageSpec: epsilon must be in (0,1)");
  require(delta > 0.0 && delta < 1.0, "OutageSpec: delta must be in (0,1)");
  require(p_d_max > 0.0, "OutageSpec: p_d_max must be > 0");
  require(p_max > 0.0 && p_bar_max > 0.0, "OutageSpec: power budgets must be > 0");
}

double TaylorCoefficients::evaluate(const CovarianceSet& op, const CovarianceSet& x) const {
  return c0 + (x.q - op.q).inner(c) + (x.q_n - op.q_n).inner(c_n) +
         (x.q_n_bar - op.q_n_bar).inner(c_n_bar) + (x.r_e_max - op.r_e_max) * c_r;
}

double log_det_pd(const HermitianMatrix& a) {
  Eigen::LLT<ComplexMatrix> llt(a.matrix());
  if (llt.info() != Eigen::Success) throw NumericalError("log_det_pd: matrix is not positive definite");
  double s = 0.0;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i).real());
  return 2.0 * s;
}

FenchelPoint::FenchelPoint(const HermitianMatrix& b_star) : b_star_(b_star) {
  Eigen::LLT<ComplexMatrix> llt(b_star.matrix());
  if (llt.info() != Eigen::Success) throw NumericalError("FenchelPoint: B* is not positive definite");
  inverse_ = llt.solve(ComplexMatrix::Identity(b_star.matrix().rows(), b_star.matrix().cols()));
  log_det_ = log_det_pd(b_star);
}

FenchelPoint FenchelPoint::at(const ChannelModel& ch, const CovarianceSet& cov) {
  return FenchelPoint(interference_plus_noise(ch, cov));
}

HermitianMatrix interference_plus_noise(const ChannelModel& ch, const CovarianceSet& cov) {
  const std::size_t n_rx = ch.v_u.dim();
  return cov.q_n.congruence(ch.h_u) +
         HermitianMatrix::identity(n_rx, ch.g_u_max * cov.q_n_bar.trace()) + ch.v_u;
}

HermitianMatrix received_covariance(const ChannelModel& ch, const CovarianceSet& cov) {
  return interference_plus_noise(ch, cov) + cov.q.congruence(ch.h_u);
}

double rate_legitimate(const ChannelModel& ch, const CovarianceSet& cov) {
  const auto b = interference_plus_noise(ch, cov);
  const auto a = b + cov.q.congruence(ch.h_u);
  const double r = (log_det_pd(a) - log_det_pd(b)) / std::numbers::ln2;
  return std::max(r, 0.0);
}

double rate_eavesdropper(const ComplexVector& h_e, const ComplexVector& h_e_bar,
                         const CovarianceSet& cov, double v_e) {
  const double signal = (h_e.adjoint() * cov.q.matrix() * h_e)(0, 0).real();
  const double noise = (h_e_bar.adjoint() * cov.q_n_bar.matrix() * h_e_bar)(0, 0).real() +
                       (h_e.adjoint() * cov.q_n.matrix() * h_e)(0, 0).real() + v_e;
  return std::max(std::log2(1.0 + signal / noise), 0.0);
}

double secrecy_rate(double r_u, double r_e) { return std::max(r_u - r_e, 0.0); }

double fenchel_lower_bound(const ChannelModel& ch, const CovarianceSet& cov, const FenchelPoint& fp) {
  const auto b = interference_plus_noise(ch, cov);
  const auto a = b + cov.q.congruence(ch.h_u);
  const double tr = (fp.inverse() * b.matrix()).trace().real();
  const double n_rx = static_cast<double>(b.dim());
  return (log_det_pd(a) - fp.log_det() - tr + n_rx) / std::numbers::ln2;
}

double snr_threshold(double r_bits) { return std::expm1(r_bits * std::numbers::ln2); }

OutageSpectrum sop_spectrum(const ChannelModel& ch, const CovarianceSet& cov) {
  require(cov.r_e_max >= 0.0, "sop_spectrum: r_e_max must be >= 0");
  const double g = snr_threshold(cov.r_e_max);
  const auto l_e = half_factor(ch.g_e);
  const auto l_eb = half_factor(ch.g_e_bar);
  const auto bs_mat = (cov.q - cov.q_n * g).congruence(l_e) * 2.0;
  const auto ue_mat = cov.q_n_bar.congruence(l_eb) * (-2.0 * g);
  return assemble(bs_mat, ue_mat, l_e, l_eb, g * ch.v_e);
}

double secrecy_outage_prob(const ChannelModel& ch, const CovarianceSet& cov) {
  const auto s = sop_spectrum(ch, cov);
  return 1.0 - tail_probability(s.grouped.profile, s.z).probability;
}

OutageSpectrum exposure_spectrum(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max) {
  require(p_d_max >= 0.0, "exposure_spectrum: p_d_max must be >= 0");
  const auto l_d = half_factor(ch.g_d);
  const auto l_db = half_factor(ch.g_d_bar);
  const auto bs_mat = (cov.q + cov.q_n).congruence(l_d) * 2.0;
  const auto ue_mat = cov.q_n_bar.congruence(l_db) * 2.0;
  return assemble(bs_mat, ue_mat, l_d, l_db, p_d_max);
}

double exposure_outage_prob(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max) {
  const auto s = exposure_spectrum(ch, cov, p_d_max);
  return 1.0 - tail_probability(s.grouped.profile, s.z).probability;
}

TaylorCoefficients taylor_eve(const ChannelModel& ch, const CovarianceSet& op) {
  const auto s = sop_spectrum(ch, op);
  const auto tail = tail_probability(s.grouped.profile, s.z);
  const auto w = column_weights(s);
  const double g = snr_threshold(op.r_e_max);
  const double dg_dr = std::numbers::ln2 * std::exp2(op.r_e_max);

  TaylorCoefficients t;
  t.c0 = 1.0 - tail.probability;
  t.ill_conditioned = tail.ill_conditioned;
  t.c = chain_back(s.l_bs, s.bs, w.bs);
  t.c_n = t.c * (-g);
  t.c_n_bar = chain_back(s.l_ue, s.ue, w.ue) * (-g);

  // d lambda / d g for each column, then the z_E = g V_E dependence.
  const ComplexMatrix bs_d = s.bs.vectors.adjoint() * (s.l_bs * op.q_n.matrix() * s.l_bs.adjoint()) * s.bs.vectors;
  const ComplexMatrix ue_d = s.ue.vectors.adjoint() * (s.l_ue * op.q_n_bar.matrix() * s.l_ue.adjoint()) * s.ue.vectors;
  double dcdf_dg = 0.0;
  for (Eigen::Index i = 0; i < w.bs.size(); ++i) dcdf_dg += -2.0 * bs_d(i, i).real() * w.bs(i);
  for (Eigen::Index i = 0; i < w.ue.size(); ++i) dcdf_dg += -2.0 * ue_d(i, i).real() * w.ue(i);
  dcdf_dg += ch.v_e * density(s.grouped.profile, s.z);
  t.c_r = dg_dr * dcdf_dg;
  return t;
}

TaylorCoefficients taylor_exposure(const ChannelModel& ch, const CovarianceSet& op, double p_d_max) {
  const auto s = exposure_spectrum(ch, op, p_d_max);
  const auto tail = tail_probability(s.grouped.profile, s.z);
  const auto w = column_weights(s);
  TaylorCoefficients t;
  t.c0 = 1.0 - tail.probability;
  t.ill_conditioned = tail.ill_conditioned;
  t.c = chain_back(s.l_bs, s.bs, w.bs);
  t.c_n = t.c;
  t.c_n_bar = chain_back(s.l_ue, s.ue, w.ue);
  t.c_r = 0.0;
  return t;
}

double rate_threshold_for_outage(const ChannelModel& ch, const CovarianceSet& cov, double epsilon) {
  require(epsilon > 0.0 && epsilon < 1.0, "rate_threshold_for_outage: epsilon must be in (0,1)");
  const double target = 1.0 - epsilon;
  CovarianceSet probe = cov;
  auto prob_at = [&](double r) {
    probe.r_e_max = r;
    return secrecy_outage_prob(ch, probe);
  };
  if (prob_at(0.0) >= target) return 0.0;
  if (prob_at(kMaxRateBits) < target) {
    throw NumericalError("rate_threshold_for_outage: outage target not reached within 60 bits");
  }
  double lo = 0.0;
  double hi = kMaxRateBits;
  double p_hi = prob_at(hi);
  for (int it = 0; it < 200 && p_hi - target > 1e-8; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double p = prob_at(mid);
    if (p >= target) {
      hi = mid;
      p_hi = p;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace emfsec
