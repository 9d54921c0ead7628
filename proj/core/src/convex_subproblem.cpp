#include "emfsec/convex_subproblem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace emfsec {

namespace {

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require(bool ok, const char* what) {
  if (!ok) throw NumericalError(what);
}

double re_trace(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a.array() * b.transpose().array()).sum().real();
}

}  // namespace

std::vector<ComplexMatrix> hermitian_basis(std::size_t n) {
  std::vector<ComplexMatrix> basis;
  basis.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    ComplexMatrix e = ComplexMatrix::Zero(ix(n), ix(n));
    e(ix(i), ix(i)) = 1.0;
    basis.push_back(e);
  }
  const cdouble j(0.0, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      ComplexMatrix re = ComplexMatrix::Zero(ix(n), ix(n));
      re(ix(a), ix(b)) = 1.0;
      re(ix(b), ix(a)) = 1.0;
      ComplexMatrix im = ComplexMatrix::Zero(ix(n), ix(n));
      im(ix(a), ix(b)) = j;
      im(ix(b), ix(a)) = -j;
      basis.push_back(re);
      basis.push_back(im);
    }
  }
  return basis;
}

RealVector realify(const HermitianMatrix& x) {
  const std::size_t n = x.dim();
  RealVector v(ix(n * n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) v(ix(k++)) = x(i, i).real();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      v(ix(k++)) = x(a, b).real();
      v(ix(k++)) = x(a, b).imag();
    }
  }
  return v;
}

HermitianMatrix unrealify(const RealVector& v, std::size_t n) {
  require(static_cast<std::size_t>(v.size()) == n * n, "unrealify: vector length must be n^2");
  ComplexMatrix m = ComplexMatrix::Zero(ix(n), ix(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) m(ix(i), ix(i)) = v(ix(k++));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const cdouble z(v(ix(k)), v(ix(k + 1)));
      k += 2;
      m(ix(a), ix(b)) = z;
      m(ix(b), ix(a)) = std::conj(z);
    }
  }
  return HermitianMatrix(m);
}

RealVector frobenius_weights(std::size_t n) {
  RealVector w = RealVector::Constant(ix(n * n), 2.0);
  w.head(ix(n)).setOnes();
  return w;
}

NoiseConfig NoiseConfig::parse(const std::string& name) {
  if (name == "none") return none();
  if (name == "bs-only") return bs_only();
  if (name == "ue-only") return ue_only();
  if (name == "both") return both();
  throw std::invalid_argument("unknown noise configuration '" + name + "'");
}

std::string NoiseConfig::name() const {
  if (bs_noise_enabled && ue_noise_enabled) return "both";
  if (bs_noise_enabled) return "bs-only";
  if (ue_noise_enabled) return "ue-only";
  return "none";
}

void SubproblemSpec::validate() const {
  channel.validate();
  const auto d = channel.dims();
  require(b_star.dim() == d.n_ue_rx, "SubproblemSpec: B* size mismatch");
  require(op.q.dim() == d.n_bs && op.q_n.dim() == d.n_bs && op.q_n_bar.dim() == d.n_ue_tx,
          "SubproblemSpec: operating point size mismatch");
  require(penalties.gamma_r >= 0.0 && penalties.gamma >= 0.0 && penalties.gamma_n >= 0.0 &&
              penalties.gamma_n_bar >= 0.0,
          "SubproblemSpec: penalty weights must be >= 0");
  require(p_max > 0.0 && p_bar_max > 0.0, "SubproblemSpec: budgets must be > 0");
  for (const auto* t : {&eve, &exposure}) {
    require(std::isfinite(t->c0) && std::isfinite(t->c_r) && t->c.is_finite() && t->c_n.is_finite() &&
                t->c_n_bar.is_finite(),
            "SubproblemSpec: non-finite Taylor coefficients");
  }
}

VariableLayout::VariableLayout(const Dimensions& d, const NoiseConfig& noise)
    : n_bs(d.n_bs), n_ue_tx(d.n_ue_tx) {
  q_count = n_bs * n_bs;
  qn_count = noise.bs_noise_enabled ? n_bs * n_bs : 0;
  qnb_count = noise.ue_noise_enabled ? n_ue_tx * n_ue_tx : 0;
  q_offset = 0;
  qn_offset = q_count;
  qnb_offset = qn_offset + qn_count;
  r_index = qnb_offset + qnb_count;
}

RealVector VariableLayout::pack(const CovarianceSet& cov) const {
  RealVector x(ix(size()));
  x.segment(ix(q_offset), ix(q_count)) = realify(cov.q);
  if (qn_count) x.segment(ix(qn_offset), ix(qn_count)) = realify(cov.q_n);
  if (qnb_count) x.segment(ix(qnb_offset), ix(qnb_count)) = realify(cov.q_n_bar);
  x(ix(r_index)) = cov.r_e_max;
  return x;
}

CovarianceSet VariableLayout::unpack(const RealVector& x) const {
  CovarianceSet c = CovarianceSet::zero({n_bs, n_ue_tx, 1});
  c.q = unrealify(x.segment(ix(q_offset), ix(q_count)), n_bs);
  if (qn_count) c.q_n = unrealify(x.segment(ix(qn_offset), ix(qn_count)), n_bs);
  if (qnb_count) c.q_n_bar = unrealify(x.segment(ix(qnb_offset), ix(qnb_count)), n_ue_tx);
  c.r_e_max = x(ix(r_index));
  return c;
}

cvx::ConvexProgram build_program(const SubproblemSpec& spec) {
  spec.validate();
  const auto& ch = spec.channel;
  const auto d = ch.dims();
  const VariableLayout lay(d, spec.noise);
  const std::size_t n = lay.size();
  const auto& h = ch.h_u;
  const auto n_rx = ix(d.n_ue_rx);
  const ComplexMatrix b_inv = FenchelPoint(spec.b_star).inverse();
  const double inv_ln2 = 1.0 / std::numbers::ln2;

  const auto basis_bs = hermitian_basis(d.n_bs);
  const auto basis_ue = hermitian_basis(d.n_ue_tx);

  cvx::ConvexProgram p(n);

  // R~_U in bits: (ln det A(x) - ln det B* - tr(B*^-1 B(x)) + N_R) / ln 2.
  cvx::LogDetTerm term;
  term.weight = inv_ln2;
  term.a0 = ch.v_u.matrix();
  term.a.assign(n, ComplexMatrix());
  for (std::size_t k = 0; k < lay.q_count; ++k) {
    term.a[lay.q_offset + k] = h * basis_bs[k] * h.adjoint();
  }
  for (std::size_t k = 0; k < lay.qn_count; ++k) {
    const ComplexMatrix db = h * basis_bs[k] * h.adjoint();
    term.a[lay.qn_offset + k] = db;
    p.linear(ix(lay.qn_offset + k)) -= inv_ln2 * re_trace(b_inv, db);
  }
  for (std::size_t k = 0; k < lay.qnb_count; ++k) {
    const ComplexMatrix db = ch.g_u_max * basis_ue[k].trace().real() * ComplexMatrix::Identity(n_rx, n_rx);
    term.a[lay.qnb_offset + k] = db;
    p.linear(ix(lay.qnb_offset + k)) -= inv_ln2 * re_trace(b_inv, db);
  }
  p.logdet.push_back(std::move(term));
  p.constant = inv_ln2 * (-log_det_pd(spec.b_star) - re_trace(b_inv, ch.v_u.matrix()) + static_cast<double>(n_rx));
  p.linear(ix(lay.r_index)) -= 1.0;

  // Proximal penalties around the operating point.
  const RealVector centre = lay.pack(spec.op);
  p.quad_center = centre;
  p.quad_weight.segment(ix(lay.q_offset), ix(lay.q_count)) = spec.penalties.gamma * frobenius_weights(d.n_bs);
  if (lay.qn_count) {
    p.quad_weight.segment(ix(lay.qn_offset), ix(lay.qn_count)) = spec.penalties.gamma_n * frobenius_weights(d.n_bs);
  }
  if (lay.qnb_count) {
    p.quad_weight.segment(ix(lay.qnb_offset), ix(lay.qnb_count)) =
        spec.penalties.gamma_n_bar * frobenius_weights(d.n_ue_tx);
  }
  p.quad_weight(ix(lay.r_index)) = spec.penalties.gamma_r;

  // Linearized outage constraints  c0 + a.(x - x*) >= target.
  auto taylor_row = [&](const TaylorCoefficients& t, double target, const char* name) {
    RealVector a = RealVector::Zero(ix(n));
    for (std::size_t k = 0; k < lay.q_count; ++k) a(ix(lay.q_offset + k)) = re_trace(basis_bs[k], t.c.matrix());
    for (std::size_t k = 0; k < lay.qn_count; ++k) {
      a(ix(lay.qn_offset + k)) = re_trace(basis_bs[k], t.c_n.matrix());
    }
    for (std::size_t k = 0; k < lay.qnb_count; ++k) {
      a(ix(lay.qnb_offset + k)) = re_trace(basis_ue[k], t.c_n_bar.matrix());
    }
    a(ix(lay.r_index)) = t.c_r;
    p.add_row(-a, t.c0 - target - a.dot(centre), name);
  };
  taylor_row(spec.eve, spec.eve_target, "secrecy-outage");
  taylor_row(spec.exposure, spec.exposure_target, "exposure");

  {
    RealVector row = RealVector::Zero(ix(n));
    row.segment(ix(lay.q_offset), ix(d.n_bs)).setOnes();
    if (lay.qn_count) row.segment(ix(lay.qn_offset), ix(d.n_bs)).setOnes();
    p.add_row(row, spec.p_max, "bs-power");
  }
  if (lay.qnb_count) {
    RealVector row = RealVector::Zero(ix(n));
    row.segment(ix(lay.qnb_offset), ix(d.n_ue_tx)).setOnes();
    p.add_row(row, spec.p_bar_max, "ue-power");
  }
  {
    RealVector row = RealVector::Zero(ix(n));
    row(ix(lay.r_index)) = -1.0;
    p.add_row(row, 0.0, "rate-threshold-nonnegative");
    row(ix(lay.r_index)) = 1.0;
    p.add_row(row, kMaxRateBits, "rate-threshold-cap");
  }

  auto block = [&](std::size_t offset, std::size_t count, const std::vector<ComplexMatrix>& basis,
                   std::size_t dim, const char* name) {
    cvx::PsdBlock b;
    b.name = name;
    b.e0 = ComplexMatrix::Zero(ix(dim), ix(dim));
    b.e.assign(n, ComplexMatrix());
    for (std::size_t k = 0; k < count; ++k) b.e[offset + k] = basis[k];
    p.blocks.push_back(std::move(b));
  };
  block(lay.q_offset, lay.q_count, basis_bs, d.n_bs, "Q");
  if (lay.qn_count) block(lay.qn_offset, lay.qn_count, basis_bs, d.n_bs, "Qn");
  if (lay.qnb_count) block(lay.qnb_offset, lay.qnb_count, basis_ue, d.n_ue_tx, "Qn_bar");
  return p;
}

double subproblem_objective(const SubproblemSpec& spec, const CovarianceSet& x) {
  const FenchelPoint fp(spec.b_star);
  const auto& pen = spec.penalties;
  auto sq = [](const HermitianMatrix& a) { return a.frobenius_norm() * a.frobenius_norm(); };
  double f = fenchel_lower_bound(spec.channel, x, fp) - x.r_e_max;
  f -= pen.gamma_r * (x.r_e_max - spec.op.r_e_max) * (x.r_e_max - spec.op.r_e_max);
  f -= pen.gamma * sq(x.q - spec.op.q);
  if (spec.noise.bs_noise_enabled) f -= pen.gamma_n * sq(x.q_n - spec.op.q_n);
  if (spec.noise.ue_noise_enabled) f -= pen.gamma_n_bar * sq(x.q_n_bar - spec.op.q_n_bar);
  return f;
}

SubproblemSolution solve_subproblem(const SubproblemSpec& spec, double tol) {
  require(tol >= 1e-9 && tol <= 1e-4, "solve_subproblem: tol must lie in [1e-9, 1e-4]");
  const auto prog = build_program(spec);
  const VariableLayout lay(spec.channel.dims(), spec.noise);

  cvx::SolverOptions opt;
  opt.tol = tol;
  const auto res = cvx::solve(prog, lay.pack(spec.op), opt);

  SubproblemSolution out;
  out.cov = lay.unpack(res.x);
  out.objective = res.objective;
  out.kkt = res.kkt;
  out.status = res.status;
  out.phase1_value = res.phase1_value;
  out.row_multipliers = res.row_multipliers;
  out.row_names = prog.row_names;
  out.newton_steps = res.newton_steps;
  return out;
}

}  // namespace emfsec
