#include "emfsec/convex_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emfsec::cvx {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

ComplexMatrix affine(const ComplexMatrix& base, const std::vector<ComplexMatrix>& dirs, const RealVector& x) {
  ComplexMatrix m = base;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const double xi = x(ix(i));
    if (xi != 0.0 && dirs[i].size() != 0) m += xi * dirs[i];
  }
  return m;
}

// log det of a Hermitian matrix, or -inf outside the PD cone.
double safe_logdet(const ComplexMatrix& m, Eigen::LLT<ComplexMatrix>* out = nullptr) {
  Eigen::LLT<ComplexMatrix> llt(m);
  if (llt.info() != Eigen::Success) return -kInf;
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double d = llt.matrixLLT()(i, i).real();
    if (!(d > 0.0)) return -kInf;
    s += std::log(d);
  }
  if (out) *out = llt;
  return 2.0 * s;
}

double re_trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  // Re tr(A B) without forming the product.
  return (a.array() * b.transpose().array()).sum().real();
}

double min_eig(const ComplexMatrix& m) {
  if (m.rows() == 0) return kInf;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

struct Evaluation {
  bool in_domain = false;
  double phi = kInf;
  RealVector grad;
  Eigen::MatrixXd hess;
  RealVector slack;
  std::vector<ComplexMatrix> block_inv;
};

// Barrier objective  -f(x) + mu * (-sum log slack - sum log det X_b).
Evaluation evaluate(const ConvexProgram& p, const RealVector& x, double mu, bool derivatives) {
  Evaluation ev;
  const auto n = ix(p.n);
  ev.slack = p.h - p.g * x;
  if (ev.slack.size() > 0 && !(ev.slack.minCoeff() > 0.0)) return ev;

  double phi = -p.linear.dot(x) - p.constant;
  phi += (p.quad_weight.array() * (x - p.quad_center).array().square()).sum();
  for (Eigen::Index j = 0; j < ev.slack.size(); ++j) phi -= mu * std::log(ev.slack(j));

  std::vector<Eigen::LLT<ComplexMatrix>> block_llt(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const double ld = safe_logdet(affine(p.blocks[b].e0, p.blocks[b].e, x), &block_llt[b]);
    if (!std::isfinite(ld)) return ev;
    phi -= mu * ld;
  }
  std::vector<Eigen::LLT<ComplexMatrix>> term_llt(p.logdet.size());
  for (std::size_t t = 0; t < p.logdet.size(); ++t) {
    const double ld = safe_logdet(affine(p.logdet[t].a0, p.logdet[t].a, x), &term_llt[t]);
    if (!std::isfinite(ld)) return ev;
    phi -= p.logdet[t].weight * ld;
  }
  ev.in_domain = std::isfinite(phi);
  ev.phi = phi;
  if (!ev.in_domain || !derivatives) return ev;

  ev.grad = -p.linear + 2.0 * (p.quad_weight.array() * (x - p.quad_center).array()).matrix();
  ev.hess = Eigen::MatrixXd::Zero(n, n);
  ev.hess.diagonal() += 2.0 * p.quad_weight;
  if (ev.slack.size() > 0) {
    const RealVector inv_s = ev.slack.cwiseInverse();
    ev.grad += mu * p.g.transpose() * inv_s;
    ev.hess += mu * p.g.transpose() * inv_s.cwiseAbs2().asDiagonal() * p.g;
  }

  // log det terms: gradient tr(M^{-1} D_i), Hessian -tr(M^{-1} D_i M^{-1} D_j).
  auto accumulate = [&](const Eigen::LLT<ComplexMatrix>& llt, const std::vector<ComplexMatrix>& dirs,
                        double scale, ComplexMatrix* inv_out) {
    const auto dim = llt.matrixLLT().rows();
    const ComplexMatrix inv = llt.solve(ComplexMatrix::Identity(dim, dim));
    if (inv_out) *inv_out = inv;
    std::vector<ComplexMatrix> y(p.n);
    std::vector<bool> used(p.n, false);
    for (std::size_t i = 0; i < p.n && i < dirs.size(); ++i) {
      if (dirs[i].size() == 0 || dirs[i].isZero(0.0)) continue;
      y[i] = inv * dirs[i];
      used[i] = true;
      ev.grad(ix(i)) -= scale * y[i].trace().real();
    }
    for (std::size_t i = 0; i < p.n; ++i) {
      if (!used[i]) continue;
      for (std::size_t j = i; j < p.n; ++j) {
        if (!used[j]) continue;
        const double v = scale * re_trace_product(y[i], y[j]);
        ev.hess(ix(i), ix(j)) += v;
        if (j != i) ev.hess(ix(j), ix(i)) += v;
      }
    }
  };
  ev.block_inv.resize(p.blocks.size());
  for (std::size_t b = 0; b < p.blocks.size(); ++b) accumulate(block_llt[b], p.blocks[b].e, mu, &ev.block_inv[b]);
  for (std::size_t t = 0; t < p.logdet.size(); ++t) accumulate(term_llt[t], p.logdet[t].a, p.logdet[t].weight, nullptr);
  return ev;
}

struct StageResult {
  RealVector x;
  int steps = 0;
  bool stalled = false;
};

// Damped Newton on the barrier objective for a fixed mu.
StageResult center(const ConvexProgram& p, RealVector x, double mu, int max_steps) {
  StageResult out;
  for (int it = 0; it < max_steps; ++it) {
    const Evaluation ev = evaluate(p, x, mu, true);
    if (!ev.in_domain) {
      out.stalled = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ev.hess);
    RealVector step = ldlt.solve(-ev.grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      const double reg = 1e-12 * std::max(1.0, ev.hess.diagonal().cwiseAbs().maxCoeff());
      Eigen::MatrixXd hr = ev.hess;
      hr.diagonal().array() += reg;
      step = hr.ldlt().solve(-ev.grad);
    }
    const double slope = ev.grad.dot(step);
    ++out.steps;
    if (!(slope < 0.0) || -slope <= 1e-22 || ev.grad.lpNorm<Eigen::Infinity>() <= 1e-13) break;

    // Once the predicted decrease is below the resolution of phi, Armijo only
    // sees rounding noise; accept Newton steps that shrink the gradient instead.
    if (-slope <= 1e-13 * std::max(1.0, std::abs(ev.phi))) {
      const double g0 = ev.grad.norm();
      bool improved = false;
      double t = 1.0;
      for (int ls = 0; ls < 30 && !improved; ++ls, t *= 0.5) {
        const RealVector trial = x + t * step;
        const Evaluation tv = evaluate(p, trial, mu, true);
        if (tv.in_domain && tv.grad.norm() < (1.0 - 1e-3 * t) * g0) {
          x = trial;
          improved = true;
        }
      }
      if (!improved) break;
      continue;
    }

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      const RealVector trial = x + t * step;
      const Evaluation tv = evaluate(p, trial, mu, false);
      if (tv.in_domain && tv.phi <= ev.phi + 0.25 * t * slope) {
        x = trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
  }
  out.x = x;
  return out;
}

double barrier_dimension(const ConvexProgram& p) {
  double nu = static_cast<double>(p.g.rows());
  for (const auto& b : p.blocks) nu += static_cast<double>(b.e0.rows());
  return nu;
}

struct BarrierRun {
  RealVector x;
  double mu = 1.0;
  int steps = 0;
  bool completed = false;
};

template <typename EarlyStop>
BarrierRun run_barrier(const ConvexProgram& p, RealVector x, const SolverOptions& opt, EarlyStop early) {
  BarrierRun run;
  const double nu = std::max(1.0, barrier_dimension(p));
  double mu = opt.mu_initial;
  for (int stage = 0; stage < opt.max_stages; ++stage) {
    const auto st = center(p, x, mu, opt.max_newton_per_stage);
    x = st.x;
    run.steps += st.steps;
    run.mu = mu;
    if (early(x)) break;
    if (mu * nu <= opt.tol) {
      run.completed = true;
      break;
    }
    mu *= opt.mu_factor;
  }
  run.x = x;
  return run;
}

struct Phase1 {
  RealVector x;
  double value = kInf;
  RealVector row_multipliers;
  std::vector<ComplexMatrix> block_multipliers;
};

// Minimizes s subject to G x - s <= h, X_b(x) + s I PSD, s >= -1, inside a
// generous box around the hint.
Phase1 find_interior(const ConvexProgram& p, const RealVector& hint, const SolverOptions& opt) {
  const std::size_t n = p.n;
  ConvexProgram aux(n + 1);
  const auto sx = ix(n);
  aux.linear(sx) = -1.0;

  const double scale = 1.0 + hint.lpNorm<Eigen::Infinity>() +
                       (p.h.size() ? p.h.lpNorm<Eigen::Infinity>() : 0.0);
  const double box = 1e4 * scale;
  for (Eigen::Index j = 0; j < p.g.rows(); ++j) {
    RealVector row = RealVector::Zero(ix(n + 1));
    row.head(ix(n)) = p.g.row(j).transpose();
    row(sx) = -1.0;
    aux.add_row(row, p.h(j));
  }
  for (std::size_t i = 0; i < n; ++i) {
    RealVector row = RealVector::Zero(ix(n + 1));
    row(ix(i)) = 1.0;
    aux.add_row(row, hint(ix(i)) + box);
    row(ix(i)) = -1.0;
    aux.add_row(row, -hint(ix(i)) + box);
  }
  {
    RealVector row = RealVector::Zero(ix(n + 1));
    row(sx) = -1.0;
    aux.add_row(row, 1.0);
  }
  for (const auto& b : p.blocks) {
    PsdBlock nb;
    nb.e0 = b.e0;
    nb.e = b.e;
    nb.e.resize(n + 1);
    nb.e[n] = ComplexMatrix::Identity(b.e0.rows(), b.e0.cols());
    aux.blocks.push_back(std::move(nb));
  }

  double violation = -kInf;
  if (p.g.rows() > 0) violation = std::max(violation, (p.g * hint - p.h).maxCoeff());
  for (const auto& b : p.blocks) violation = std::max(violation, -min_eig(affine(b.e0, b.e, hint)));
  RealVector y(ix(n + 1));
  y.head(ix(n)) = hint;
  y(sx) = std::max(violation + 1.0, -0.5);

  auto early = [&](const RealVector& v) { return v(sx) < -1e-3; };
  const auto run = run_barrier(aux, y, opt, early);

  Phase1 out;
  out.x = run.x.head(ix(n));
  out.value = run.x(sx);
  const RealVector slack = aux.h - aux.g * run.x;
  out.row_multipliers = RealVector(p.g.rows());
  for (Eigen::Index j = 0; j < p.g.rows(); ++j) out.row_multipliers(j) = run.mu / slack(j);
  for (const auto& b : aux.blocks) {
    const ComplexMatrix xb = affine(b.e0, b.e, run.x);
    out.block_multipliers.push_back(run.mu * xb.inverse());
  }
  return out;
}

}  // namespace

ConvexProgram::ConvexProgram(std::size_t n_vars)
    : n(n_vars),
      linear(RealVector::Zero(ix(n_vars))),
      quad_weight(RealVector::Zero(ix(n_vars))),
      quad_center(RealVector::Zero(ix(n_vars))),
      g(Eigen::MatrixXd::Zero(0, ix(n_vars))),
      h(RealVector::Zero(0)) {}

void ConvexProgram::add_row(const RealVector& coeffs, double rhs, std::string name) {
  const auto r = g.rows();
  g.conservativeResize(r + 1, ix(n));
  g.row(r) = coeffs.transpose();
  h.conservativeResize(r + 1);
  h(r) = rhs;
  row_names.push_back(std::move(name));
}

double ConvexProgram::objective(const RealVector& x) const {
  double f = linear.dot(x) + constant;
  f -= (quad_weight.array() * (x - quad_center).array().square()).sum();
  for (const auto& t : logdet) f += t.weight * safe_logdet(affine(t.a0, t.a, x));
  return f;
}

std::string to_string(ProgramStatus s) {
  switch (s) {
    case ProgramStatus::optimal: return "optimal";
    case ProgramStatus::infeasible: return "infeasible";
    case ProgramStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

double KktResiduals::max() const { return std::max({stationarity, primal, complementarity, dual}); }

RealVector objective_gradient(const ConvexProgram& p, const RealVector& x) {
  RealVector grad = p.linear - 2.0 * (p.quad_weight.array() * (x - p.quad_center).array()).matrix();
  for (const auto& t : p.logdet) {
    const ComplexMatrix m = affine(t.a0, t.a, x);
    const ComplexMatrix inv = m.inverse();
    for (std::size_t i = 0; i < p.n && i < t.a.size(); ++i) {
      if (t.a[i].size() == 0) continue;
      grad(ix(i)) += t.weight * re_trace_product(inv, t.a[i]);
    }
  }
  return grad;
}

std::vector<ComplexMatrix> recover_block_multipliers(const ConvexProgram& p, const RealVector& x,
                                                     const RealVector& row_multipliers) {
  std::vector<ComplexMatrix> out;
  if (p.blocks.empty()) return out;
  // Hermitian basis per block: diagonal units, then (e_ij + e_ji, i e_ij - i e_ji).
  std::vector<ComplexMatrix> basis;
  std::vector<std::size_t> owner;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto d = p.blocks[b].e0.rows();
    for (Eigen::Index i = 0; i < d; ++i) {
      ComplexMatrix e = ComplexMatrix::Zero(d, d);
      e(i, i) = 1.0;
      basis.push_back(e);
      owner.push_back(b);
    }
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = i + 1; j < d; ++j) {
        ComplexMatrix re = ComplexMatrix::Zero(d, d);
        re(i, j) = re(j, i) = 1.0;
        ComplexMatrix im = ComplexMatrix::Zero(d, d);
        im(i, j) = cdouble(0.0, 1.0);
        im(j, i) = cdouble(0.0, -1.0);
        basis.push_back(re);
        basis.push_back(im);
        owner.push_back(b);
        owner.push_back(b);
      }
    }
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ix(p.n), ix(basis.size()));
  for (std::size_t c = 0; c < basis.size(); ++c) {
    const auto& blk = p.blocks[owner[c]];
    for (std::size_t i = 0; i < p.n && i < blk.e.size(); ++i) {
      if (blk.e[i].size() != 0) m(ix(i), ix(c)) = re_trace_product(basis[c], blk.e[i]);
    }
  }
  RealVector rhs = -objective_gradient(p, x);
  if (p.g.rows() > 0) rhs += p.g.transpose() * row_multipliers;
  const RealVector z = m.completeOrthogonalDecomposition().solve(rhs);
  for (const auto& blk : p.blocks) out.push_back(ComplexMatrix::Zero(blk.e0.rows(), blk.e0.cols()));
  for (std::size_t c = 0; c < basis.size(); ++c) out[owner[c]] += z(ix(c)) * basis[c];
  return out;
}

KktResiduals kkt_residuals(const ConvexProgram& p, const RealVector& x, const RealVector& row_multipliers,
                           const std::vector<ComplexMatrix>& block_multipliers) {
  KktResiduals r;
  // grad f - G^T lambda + sum_b adj(Z_b) = 0
  RealVector stat = objective_gradient(p, x);
  if (p.g.rows() > 0) stat -= p.g.transpose() * row_multipliers;
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    for (std::size_t i = 0; i < p.n && i < p.blocks[b].e.size(); ++i) {
      if (p.blocks[b].e[i].size() == 0) continue;
      stat(ix(i)) += re_trace_product(block_multipliers[b], p.blocks[b].e[i]);
    }
  }
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  if (row_multipliers.size() > 0) r.dual = std::max(0.0, -row_multipliers.minCoeff());
  for (const auto& z : block_multipliers) r.dual = std::max(r.dual, -min_eig(z));

  const RealVector slack = p.h - p.g * x;
  for (Eigen::Index j = 0; j < slack.size(); ++j) {
    r.primal = std::max(r.primal, -slack(j));
    r.complementarity = std::max(r.complementarity, std::abs(row_multipliers(j) * slack(j)));
  }
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const ComplexMatrix xb = affine(p.blocks[b].e0, p.blocks[b].e, x);
    r.primal = std::max(r.primal, -min_eig(xb));
    r.complementarity = std::max(r.complementarity, std::abs((block_multipliers[b] * xb).trace().real()));
  }
  return r;
}

ProgramSolution solve(const ConvexProgram& prog, const RealVector& hint, const SolverOptions& opt) {
  ProgramSolution sol;
  sol.x = hint;

  // Normalize rows; constant rows are either vacuous or immediately infeasible.
  ConvexProgram p = prog;
  p.g.resize(0, ix(prog.n));
  p.h.resize(0);
  p.row_names.clear();
  std::vector<Eigen::Index> kept;
  std::vector<double> row_scale;
  for (Eigen::Index j = 0; j < prog.g.rows(); ++j) {
    const double nrm = prog.g.row(j).lpNorm<Eigen::Infinity>();
    if (nrm == 0.0) {
      if (prog.h(j) <= 0.0) {
        sol.status = ProgramStatus::infeasible;
        sol.phase1_value = -prog.h(j);
        sol.row_multipliers = RealVector::Zero(prog.g.rows());
        sol.row_multipliers(j) = 1.0;
        return sol;
      }
      continue;
    }
    p.add_row(prog.g.row(j).transpose() / nrm, prog.h(j) / nrm);
    kept.push_back(j);
    row_scale.push_back(nrm);
  }

  RealVector x = hint;
  bool strictly_feasible = evaluate(p, x, 1.0, false).in_domain;
  if (strictly_feasible) {
    double margin = kInf;
    const RealVector s = p.h - p.g * x;
    if (s.size()) margin = s.minCoeff();
    for (const auto& b : p.blocks) margin = std::min(margin, min_eig(affine(b.e0, b.e, x)));
    sol.phase1_value = -margin;
  } else {
    const auto ph1 = find_interior(p, hint, opt);
    sol.phase1_value = ph1.value;
    if (!(ph1.value < 0.0) || !evaluate(p, ph1.x, 1.0, false).in_domain) {
      sol.status = ProgramStatus::infeasible;
      sol.x = ph1.x;
      sol.row_multipliers = RealVector::Zero(prog.g.rows());
      for (std::size_t k = 0; k < kept.size(); ++k) {
        sol.row_multipliers(kept[k]) = ph1.row_multipliers(ix(k)) / row_scale[k];
      }
      sol.block_multipliers = ph1.block_multipliers;
      sol.objective = prog.objective(ph1.x);
      return sol;
    }
    x = ph1.x;
  }

  const auto run = run_barrier(p, x, opt, [](const RealVector&) { return false; });
  sol.x = run.x;
  sol.newton_steps = run.steps;
  sol.objective = prog.objective(run.x);

  const RealVector slack = p.h - p.g * run.x;
  sol.row_multipliers = RealVector::Zero(prog.g.rows());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    sol.row_multipliers(kept[k]) = run.mu / slack(ix(k)) / row_scale[k];
  }
  sol.block_multipliers = recover_block_multipliers(prog, sol.x, sol.row_multipliers);
  sol.kkt = kkt_residuals(prog, sol.x, sol.row_multipliers, sol.block_multipliers);
  sol.status = run.completed ? ProgramStatus::optimal : ProgramStatus::max_iterations;
  return sol;
}

}  // namespace emfsec::cvx
