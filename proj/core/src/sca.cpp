#include "emfsec/sca.hpp"

#include <algorithm>
#include <cmath>

namespace emfsec {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

void pin(CovarianceSet& cov, const NoiseConfig& cfg) {
  if (!cfg.bs_noise_enabled) cov.q_n = HermitianMatrix(cov.q_n.dim());
  if (!cfg.ue_noise_enabled) cov.q_n_bar = HermitianMatrix(cov.q_n_bar.dim());
}

CovarianceSet scaled(const CovarianceSet& c, double s) {
  return {c.q * s, c.q_n * s, c.q_n_bar * s, c.r_e_max};
}

void grow(ScaState& st, double factor) { st.penalties = st.penalties.scaled(factor); }

}  // namespace

void PenaltySchedule::validate() const {
  if (initial.gamma_r < 0 || initial.gamma < 0 || initial.gamma_n < 0 || initial.gamma_n_bar < 0) {
    throw NumericalError("PenaltySchedule: weights must be >= 0");
  }
  if (!(growth_factor > 1.0)) throw NumericalError("PenaltySchedule: growth factor must exceed 1");
  if (growth_every < 1) throw NumericalError("PenaltySchedule: growth interval must be >= 1");
}

std::string to_string(ScaStatus s) {
  switch (s) {
    case ScaStatus::converged: return "converged";
    case ScaStatus::max_iterations: return "max-iterations";
    case ScaStatus::infeasible_start: return "infeasible-start";
    case ScaStatus::subproblem_infeasible: return "subproblem-infeasible";
  }
  return "unknown";
}

double secrecy_objective(const ChannelModel& ch, const CovarianceSet& cov) {
  return rate_legitimate(ch, cov) - cov.r_e_max;
}

bool certify(const ChannelModel& ch, const OutageSpec& spec, const CovarianceSet& cov, double slack,
             double* sop, double* exposure) {
  const double s = secrecy_outage_prob(ch, cov);
  const double e = exposure_outage_prob(ch, cov, spec.p_d_max);
  if (sop) *sop = s;
  if (exposure) *exposure = e;
  return s >= 1.0 - spec.epsilon - slack && e >= 1.0 - spec.delta - slack;
}

CovarianceSet initialize(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg) {
  ch.validate();
  spec.validate();
  const auto d = ch.dims();
  CovarianceSet cov = CovarianceSet::zero(d);

  if (cfg.bs_noise_enabled) {
    cov.q_n = HermitianMatrix::identity(d.n_bs, 0.01 * spec.p_max / static_cast<double>(d.n_bs));
  }
  if (cfg.ue_noise_enabled) cov.q_n_bar = HermitianMatrix::identity(d.n_ue_tx, 0.01 * spec.p_bar_max);

  // Dominant right singular vector of H_U.
  const auto eig = hermitian_eig(HermitianMatrix(ComplexMatrix(ch.h_u.adjoint() * ch.h_u), 1e-6));
  const ComplexVector v = eig.vectors.col(0);
  const double p_data = std::max(spec.p_max - cov.q_n.trace(), 0.0);
  cov.q = HermitianMatrix::outer(v) * p_data;

  const double target = 1.0 - spec.delta;
  if (exposure_outage_prob(ch, cov, spec.p_d_max) < target) {
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (exposure_outage_prob(ch, scaled(cov, mid), spec.p_d_max) >= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    cov = scaled(cov, lo);
  }
  cov.r_e_max = rate_threshold_for_outage(ch, cov, spec.epsilon);
  return cov;
}

IterationRecord iterate_once(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                             ScaState& st, const PenaltySchedule& schedule, const ScaOptions& opt) {
  IterationRecord rec;
  rec.iteration = ++st.iteration;
  rec.penalties = st.penalties;

  SubproblemSpec sp;
  sp.channel = ch;
  sp.b_star = interference_plus_noise(ch, st.op);
  sp.op = st.op;
  sp.eve = taylor_eve(ch, st.op);
  sp.eve_target = 1.0 - spec.epsilon;
  sp.exposure = taylor_exposure(ch, st.op, spec.p_d_max);
  sp.exposure_target = 1.0 - spec.delta;
  sp.penalties = st.penalties;
  sp.p_max = spec.p_max;
  sp.p_bar_max = spec.p_bar_max;
  sp.noise = cfg;

  const auto sol = solve_subproblem(sp, opt.subproblem_tol);
  rec.subproblem_status = cvx::to_string(sol.status);
  if (sol.status == cvx::ProgramStatus::infeasible) {
    st.op = st.last_certified;
    grow(st, 2.0);
    rec.objective = secrecy_objective(ch, st.op);
    rec.surrogate = sol.objective;
    certify(ch, spec, st.op, opt.certificate_slack, &rec.sop, &rec.exposure);
    return rec;
  }

  CovarianceSet next = sol.cov;
  pin(next, cfg);
  next.r_e_max = std::max(next.r_e_max, 0.0);
  rec.step_q = (next.q - st.op.q).frobenius_norm();
  rec.step_qn = (next.q_n - st.op.q_n).frobenius_norm();
  rec.step_qn_bar = (next.q_n_bar - st.op.q_n_bar).frobenius_norm();
  rec.step_r = std::abs(next.r_e_max - st.op.r_e_max);
  rec.surrogate = sol.objective;
  rec.objective = secrecy_objective(ch, next);
  if (certify(ch, spec, next, opt.certificate_slack, &rec.sop, &rec.exposure)) st.last_certified = next;

  // Oscillation: the objective delta changed sign twice in a row.
  const double delta = rec.objective - st.last_objective;
  const int sign = delta > 0.0 ? 1 : (delta < 0.0 ? -1 : 0);
  if (sign != 0 && st.last_delta_sign != 0 && sign != st.last_delta_sign) {
    ++st.sign_flips;
  } else if (sign != 0) {
    st.sign_flips = 0;
  }
  if (sign != 0) st.last_delta_sign = sign;
  st.last_objective = rec.objective;
  st.op = next;

  bool grew = false;
  if (st.sign_flips >= 2) {
    st.sign_flips = 0;
    grew = true;
  }
  if (st.iteration % schedule.growth_every == 0) grew = true;
  if (grew) grow(st, schedule.growth_factor);
  return rec;
}

SolveResult optimize_from(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                          const CovarianceSet& start, const PenaltySchedule& schedule, const ScaOptions& opt) {
  ch.validate();
  spec.validate();
  schedule.validate();

  SolveResult res;
  ScaState st;
  st.op = start;
  pin(st.op, cfg);
  st.penalties = schedule.initial;
  st.last_objective = secrecy_objective(ch, st.op);
  st.last_certified = st.op;

  CovarianceSet best = st.op;
  double best_obj = st.last_objective;
  bool have_best = certify(ch, spec, st.op, opt.certificate_slack);
  if (!have_best) {
    res.status = ScaStatus::infeasible_start;
    res.cov = st.op;
  } else {
    int small_steps = 0;
    int failures = 0;
    res.status = ScaStatus::max_iterations;
    for (int it = 0; it < opt.max_iters; ++it) {
      auto rec = iterate_once(ch, spec, cfg, st, schedule, opt);
      const bool infeasible = rec.subproblem_status == cvx::to_string(cvx::ProgramStatus::infeasible);
      res.trace.push_back(rec);
      if (infeasible) {
        if (++failures > opt.infeasible_retries) {
          res.status = ScaStatus::subproblem_infeasible;
          break;
        }
        continue;
      }
      failures = 0;
      const bool ok = rec.sop >= 1.0 - spec.epsilon - opt.certificate_slack &&
                      rec.exposure >= 1.0 - spec.delta - opt.certificate_slack;
      if (ok && rec.objective >= best_obj) {
        best = st.op;
        best_obj = rec.objective;
      }
      small_steps = rec.step() <= opt.conv_tol ? small_steps + 1 : 0;
      if (small_steps >= 2) {
        res.status = ScaStatus::converged;
        break;
      }
    }
    // Best certified iterate; the start counts, so warm starts never lose ground.
    res.cov = st.op;
    if (!certify(ch, spec, st.op, opt.certificate_slack) || secrecy_objective(ch, st.op) < best_obj) res.cov = best;
    res.cov = fill_null_space_noise(ch, spec, cfg, res.cov, opt.certificate_slack);
  }

  res.iterations = static_cast<int>(res.trace.size());
  res.certified = certify(ch, spec, res.cov, opt.certificate_slack, &res.sop_certificate, &res.exposure_certificate);
  res.r_u = rate_legitimate(ch, res.cov);
  res.r_eps = std::max(res.r_u - res.cov.r_e_max, 0.0);
  res.precoders = recover_precoders(res.cov);
  return res;
}

SolveResult optimize(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                     const PenaltySchedule& schedule, const ScaOptions& opt) {
  return optimize_from(ch, spec, cfg, initialize(ch, spec, cfg), schedule, opt);
}

CovarianceSet fill_null_space_noise(const ChannelModel& ch, const OutageSpec& spec, const NoiseConfig& cfg,
                                    const CovarianceSet& cov, double slack) {
  const double spare = spec.p_max - cov.bs_power();
  if (!cfg.bs_noise_enabled || spare <= 1e-12 * spec.p_max) return cov;
  const auto n = static_cast<Eigen::Index>(ch.dims().n_bs);
  const auto eig = hermitian_eig(HermitianMatrix(ComplexMatrix(ch.h_u.adjoint() * ch.h_u), 1e-6));
  const double top = std::max(eig.values.front(), 0.0);
  ComplexMatrix proj = ComplexMatrix::Zero(n, n);
  int dim = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eig.values[static_cast<std::size_t>(k)] > 1e-12 * top) continue;
    proj += eig.vectors.col(k) * eig.vectors.col(k).adjoint();
    ++dim;
  }
  if (dim == 0) return cov;
  const HermitianMatrix unit(proj * (spare / dim), 1e-6);

  auto with = [&](double a) {
    CovarianceSet c = cov;
    c.q_n = c.q_n + unit * a;
    return c;
  };
  auto exposure_ok = [&](double a) {
    return exposure_outage_prob(ch, with(a), spec.p_d_max) >= 1.0 - spec.delta - slack;
  };
  double a = 1.0;
  if (!exposure_ok(1.0)) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (exposure_ok(mid) ? lo : hi) = mid;
    }
    a = lo;
  }
  if (a <= 0.0) return cov;
  CovarianceSet out = with(a);
  out.r_e_max = rate_threshold_for_outage(ch, out, spec.epsilon);
  // Gains below a micro-bit come from near-silent links whose outage model is degenerate.
  if (!certify(ch, spec, out, slack) || secrecy_objective(ch, out) <= secrecy_objective(ch, cov) + 1e-6) return cov;
  return out;
}

ComplexMatrix matrix_square_root_factor(const HermitianMatrix& a) {
  const auto eig = hermitian_eig(a);
  RealVector s(ix(eig.values.size()));
  for (std::size_t i = 0; i < eig.values.size(); ++i) s(ix(i)) = std::sqrt(std::max(eig.values[i], 0.0));
  return eig.vectors * s.cast<cdouble>().asDiagonal();
}

Precoders recover_precoders(const CovarianceSet& cov) {
  return {matrix_square_root_factor(cov.q), matrix_square_root_factor(cov.q_n),
          matrix_square_root_factor(cov.q_n_bar)};
}

}  // namespace emfsec
