#pragma once

// Rate, outage and exposure formulas for a multi-antenna BS serving a
// full-duplex UE in the presence of a single-antenna eavesdropper whose
// channels are Rayleigh distributed. Rates are in bits per channel use.

#include <cstddef>

#include "emfsec/hermitian.hpp"
#include "emfsec/quadform.hpp"

namespace emfsec {

/// Largest eavesdropper rate threshold considered anywhere, in bits.
inline constexpr double kMaxRateBits = 60.0;

struct Dimensions {
  std::size_t n_bs = 2;
  std::size_t n_ue_tx = 1;
  std::size_t n_ue_rx = 1;
};

struct ChannelModel {
  ComplexMatrix h_u;          // n_ue_rx x n_bs, perfectly known
  double g_u_max = 0.1;       // worst-case residual self-interference gain
  HermitianMatrix v_u;        // UE noise covariance (n_ue_rx), positive definite
  double v_e = 0.1;           // eavesdropper noise power
  HermitianMatrix g_e;        // BS -> eavesdropper channel covariance (n_bs)
  HermitianMatrix g_e_bar;    // UE -> eavesdropper channel covariance (n_ue_tx)
  HermitianMatrix g_d;        // BS -> exposure location covariance (n_bs)
  HermitianMatrix g_d_bar;    // UE -> exposure location covariance (n_ue_tx)

  Dimensions dims() const;
  /// Throws NumericalError on inconsistent sizes or non-PSD covariances.
  void validate() const;

  /// Identity eavesdropper/exposure statistics, g_u_max = 0.1, V_U = 0.1 I,
  /// V_E = 0.1, with the given BS -> UE channel.
  static ChannelModel isotropic(const ComplexMatrix& h_u, std::size_t n_ue_tx = 1);
};

struct CovarianceSet {
  HermitianMatrix q;        // data covariance W W^H (n_bs)
  HermitianMatrix q_n;      // BS artificial noise (n_bs)
  HermitianMatrix q_n_bar;  // UE artificial noise (n_ue_tx)
  double r_e_max = 0.0;     // eavesdropper rate threshold, bits

  static CovarianceSet zero(const Dimensions& d);
  double bs_power() const { return q.trace() + q_n.trace(); }
  double ue_power() const { return q_n_bar.trace(); }
};

struct OutageSpec {
  double epsilon = 0.05;
  double delta = 0.05;
  double p_d_max = 1.0;
  double p_max = 10.0;
  double p_bar_max = 10.0;

  void validate() const;
};

/// First-order model c0 + tr((Q-Q*)C) + tr((Qn-Qn*)Cn) + tr((Qb-Qb*)Cb) + (R-R*) cR
/// of an outage probability around an operating point.
struct TaylorCoefficients {
  double c0 = 0.0;
  HermitianMatrix c;
  HermitianMatrix c_n;
  HermitianMatrix c_n_bar;
  double c_r = 0.0;
  bool ill_conditioned = false;

  double evaluate(const CovarianceSet& op, const CovarianceSet& x) const;
};

/// Operating point B* of the concave rate surrogate, with inverse and
/// natural-log determinant cached.
class FenchelPoint {
 public:
  explicit FenchelPoint(const HermitianMatrix& b_star);
  static FenchelPoint at(const ChannelModel& ch, const CovarianceSet& cov);

  const HermitianMatrix& b_star() const { return b_star_; }
  const ComplexMatrix& inverse() const { return inverse_; }
  double log_det() const { return log_det_; }

 private:
  HermitianMatrix b_star_;
  ComplexMatrix inverse_;
  double log_det_ = 0.0;
};

/// Natural log-determinant of a Hermitian positive definite matrix.
double log_det_pd(const HermitianMatrix& a);

/// B = g_u_max tr(Qb) I + H_U Q_n H_U^H + V_U
HermitianMatrix interference_plus_noise(const ChannelModel& ch, const CovarianceSet& cov);
/// A = H_U (Q + Q_n) H_U^H + g_u_max tr(Qb) I + V_U
HermitianMatrix received_covariance(const ChannelModel& ch, const CovarianceSet& cov);

double rate_legitimate(const ChannelModel& ch, const CovarianceSet& cov);
double rate_eavesdropper(const ComplexVector& h_e, const ComplexVector& h_e_bar,
                         const CovarianceSet& cov, double v_e);
double secrecy_rate(double r_u, double r_e);

/// ln det A - ln det B* - tr(B*^{-1} B) + N_R, converted to bits. Never above
/// rate_legitimate; equal to it when B(cov) == B*.
double fenchel_lower_bound(const ChannelModel& ch, const CovarianceSet& cov,
                           const FenchelPoint& fp);

/// 2^R - 1 computed as expm1(R ln 2).
double snr_threshold(double r_bits);

/// Spectrum of an outage event P(form <= z) built from a BS-side matrix
/// 2 L M L^H and a UE-side matrix 2 Lb Mb Lb^H.
struct OutageSpectrum {
  GroupedSpectrum grouped;  // raw order: BS eigenvalues then UE eigenvalues
  double z = 0.0;
  EigenDecomposition bs;
  EigenDecomposition ue;
  ComplexMatrix l_bs;
  ComplexMatrix l_ue;
};

/// Eigenvalues of 2 L_E (Q - g Q_n) L_E^H and -2 g Lb_E Qb Lb_E^H with
/// g = 2^R - 1, and z_E = g V_E.
OutageSpectrum sop_spectrum(const ChannelModel& ch, const CovarianceSet& cov);
/// Prob(R_E <= R_E^max).
double secrecy_outage_prob(const ChannelModel& ch, const CovarianceSet& cov);

/// Eigenvalues of 2 L_D (Q + Q_n) L_D^H and 2 Lb_D Qb Lb_D^H, with z_D = p_d_max.
OutageSpectrum exposure_spectrum(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max);
/// Prob(P_D <= p_d_max).
double exposure_outage_prob(const ChannelModel& ch, const CovarianceSet& cov, double p_d_max);

TaylorCoefficients taylor_eve(const ChannelModel& ch, const CovarianceSet& op);
/// c is the shared coefficient for Q and Q_n; c_r is zero.
TaylorCoefficients taylor_exposure(const ChannelModel& ch, const CovarianceSet& op, double p_d_max);

/// Smallest R_E^max with Prob(R_E <= R_E^max) >= 1 - epsilon, by bisection on
/// [0, 60] bits. cov.r_e_max is ignored. Throws NumericalError if 60 bits do
/// not reach the target.
double rate_threshold_for_outage(const ChannelModel& ch, const CovarianceSet& cov, double epsilon);

}  // namespace emfsec
