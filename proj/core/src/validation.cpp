#include "emfsec/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <json.hpp>

#include "emfsec/convex_subproblem.hpp"
#include "emfsec/monte_carlo.hpp"
#include "emfsec/quadform.hpp"
#include "emfsec/random_instances.hpp"
#include "emfsec/sca.hpp"
#include "emfsec/secrecy_model.hpp"

namespace emfsec {

namespace {

struct Sizes {
  std::size_t profiles, profile_samples, channel_instances, channel_samples, gradient_points, fenchel_draws,
      subproblems, sca_runs;
};

Sizes sizes_for(ValidationLevel level) {
  if (level == ValidationLevel::full) return {200, 1000000, 50, 1000000, 50, 1000, 10, 3};
  return {50, 1000000, 10, 1000000, 20, 500, 5, 1};
}

// One extra series term: a plausible off-by-one in the incomplete gamma.
double tampered_gamma(int m, double x) { return upper_gamma_q(m + 1, x); }

double binomial_sigma(double p, std::size_t n) {
  const double nn = static_cast<double>(n);
  return std::sqrt(std::max(p * (1.0 - p), 1.0 / nn) / nn);
}

double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  const double s = std::max(std::abs(a), std::abs(b));
  return s < 1e-9 ? (d <= 1e-9 ? 0.0 : d) : d / s;
}

CheckResult timed(const std::string& name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
    r.passed = r.failures == 0;
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void quadform_vs_mc(CheckResult& r, const Sizes& sz, std::uint64_t seed, UpperGammaFn q) {
  CounterRng rng(seed, 1);
  const double as[] = {-0.5, 0.5, 1.5};
  std::size_t bad = 0;
  for (std::size_t i = 0; i < sz.profiles; ++i) {
    const auto p = random_profile(rng, 8, 4, 1e-3, 1e3, true);
    std::vector<double> zs;
    for (double a : as) zs.push_back(profile_quantile_proxy(p, a));
    const auto est = empirical_tail(p, zs, {sz.profile_samples, seed + 1000 + i, false, 0});
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const double closed = tail_probability(p, zs[k], q).probability;
      const double dev = std::abs(closed - est[k].estimate) / binomial_sigma(closed, sz.profile_samples);
      r.worst = std::max(r.worst, dev);
      ++r.cases;
      if (dev > 4.0) ++bad;
    }
  }
  r.threshold = 4.0;
  // At most 1% of the checks may fall outside the band.
  const auto allowed = static_cast<std::size_t>(std::floor(0.01 * static_cast<double>(r.cases)));
  r.failures = bad > allowed ? bad : 0;
  r.detail = std::to_string(bad) + " of " + std::to_string(r.cases) + " outside 4 sigma";
}

void hypoexponential(CheckResult& r, const Sizes& sz, std::uint64_t seed) {
  CounterRng rng(seed, 2);
  for (std::size_t i = 0; i < sz.profiles; ++i) {
    const auto p = random_profile(rng, 3, 1, 0.1, 10.0, false);
    for (double a : {-0.5, 0.5, 1.5}) {
      const double z = profile_quantile_proxy(p, a);
      double ref = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) {
        double prod = 1.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (j != k) prod *= p.lambdas[k] / (p.lambdas[k] - p.lambdas[j]);
        }
        ref += std::exp(-z / p.lambdas[k]) * prod;
      }
      const double d = std::abs(tail_probability(p, z).unclamped - ref);
      r.worst = std::max(r.worst, d);
      ++r.cases;
      if (d > 1e-10) ++r.failures;
    }
  }
  r.threshold = 1e-10;
}

void channel_vs_mc(CheckResult& r, const Sizes& sz, std::uint64_t seed, bool exposure) {
  CounterRng rng(seed, exposure ? 4 : 3);
  for (std::size_t i = 0; i < sz.channel_instances; ++i) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    const SampleSpec spec{sz.channel_samples, seed + 5000 + i, false, 0};
    double closed = 0.0;
    Estimate est;
    if (exposure) {
      const double p_d_max = log_uniform(rng, 0.5, 10.0);
      closed = exposure_outage_prob(ch, cov, p_d_max);
      est = empirical_exposure(ch, cov, p_d_max, spec);
    } else {
      closed = secrecy_outage_prob(ch, cov);
      est = empirical_sop(ch, cov, spec);
    }
    const double dev = std::abs(closed - est.estimate) / binomial_sigma(closed, spec.n_samples);
    r.worst = std::max(r.worst, dev);
    ++r.cases;
    if (dev > 4.0) ++r.failures;
  }
  r.threshold = 4.0;
}

bool well_separated(const OutageSpectrum& s) {
  return s.grouped.profile.size() < 2 || s.grouped.profile.min_relative_gap() >= 1e-3;
}

void gradients(CheckResult& r, const Sizes& sz, std::uint64_t seed) {
  CounterRng rng(seed, 5);
  constexpr double h = 1e-5;
  std::size_t done = 0;
  while (done < sz.gradient_points) {
    const auto ch = random_channel(rng);
    const auto op = random_covariances(rng);
    const double p_d_max = log_uniform(rng, 0.5, 10.0);
    if (!well_separated(sop_spectrum(ch, op)) || !well_separated(exposure_spectrum(ch, op, p_d_max))) continue;
    ++done;
    const auto te = taylor_eve(ch, op);
    const auto td = taylor_exposure(ch, op, p_d_max);
    auto check = [&](const std::function<double(const CovarianceSet&)>& f, const std::function<void(CovarianceSet&, double)>& move,
                     double analytic) {
      CovarianceSet plus = op, minus = op;
      move(plus, h);
      move(minus, -h);
      const double fd = (f(plus) - f(minus)) / (2.0 * h);
      const double e = rel_err(analytic, fd);
      r.worst = std::max(r.worst, e);
      ++r.cases;
      if (e > 1e-4) ++r.failures;
    };
    const auto dq = random_hermitian(rng, 2);
    const auto dqn = random_hermitian(rng, 2);
    const auto dqb = random_hermitian(rng, 1);
    auto sop = [&](const CovarianceSet& c) { return secrecy_outage_prob(ch, c); };
    auto expo = [&](const CovarianceSet& c) { return exposure_outage_prob(ch, c, p_d_max); };
    check(sop, [&](CovarianceSet& c, double s) { c.q = c.q + dq * s; }, dq.inner(te.c));
    check(sop, [&](CovarianceSet& c, double s) { c.q_n = c.q_n + dqn * s; }, dqn.inner(te.c_n));
    check(sop, [&](CovarianceSet& c, double s) { c.q_n_bar = c.q_n_bar + dqb * s; }, dqb.inner(te.c_n_bar));
    check(sop, [&](CovarianceSet& c, double s) { c.r_e_max += s; }, te.c_r);
    check(expo, [&](CovarianceSet& c, double s) { c.q = c.q + dq * s; }, dq.inner(td.c));
    check(expo, [&](CovarianceSet& c, double s) { c.q_n = c.q_n + dqn * s; }, dqn.inner(td.c_n));
    check(expo, [&](CovarianceSet& c, double s) { c.q_n_bar = c.q_n_bar + dqb * s; }, dqb.inner(td.c_n_bar));
  }
  r.threshold = 1e-4;
}

void fenchel(CheckResult& r, const Sizes& sz, std::uint64_t seed) {
  CounterRng rng(seed, 6);
  for (std::size_t i = 0; i < sz.fenchel_draws; ++i) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    const auto other = random_covariances(rng);
    const double ru = rate_legitimate(ch, cov);
    const double gap = fenchel_lower_bound(ch, cov, FenchelPoint::at(ch, other)) - ru;
    const double touch = std::abs(fenchel_lower_bound(ch, cov, FenchelPoint::at(ch, cov)) - ru);
    r.worst = std::max({r.worst, gap, touch});
    r.cases += 2;
    if (gap > 1e-9) ++r.failures;
    if (touch > 1e-9) ++r.failures;
  }
  r.threshold = 1e-9;
}

void subproblem_kkt(CheckResult& r, const Sizes& sz, std::uint64_t seed) {
  // max log det(Q + 0.1 I) s.t. tr Q <= P has the solution (P/2) I.
  {
    const double p = 4.0;
    cvx::ConvexProgram prog(4);
    const auto basis = hermitian_basis(2);
    prog.logdet.push_back({1.0, 0.1 * ComplexMatrix::Identity(2, 2), basis});
    RealVector row = RealVector::Zero(4);
    row.head(2).setOnes();
    prog.add_row(row, p);
    prog.blocks.push_back({ComplexMatrix::Zero(2, 2), basis, "Q"});
    const auto sol = cvx::solve(prog, RealVector::Zero(4));
    const double err = (unrealify(sol.x, 2) - HermitianMatrix::identity(2, p / 2)).frobenius_norm();
    r.worst = std::max({r.worst, err, sol.kkt.max()});
    ++r.cases;
    if (sol.status != cvx::ProgramStatus::optimal || err > 1e-6 || sol.kkt.max() > 1e-6) ++r.failures;
  }
  CounterRng rng(seed, 7);
  for (std::size_t i = 0; i < sz.subproblems; ++i) {
    const auto ch = random_channel(rng);
    auto op = random_covariances(rng);
    SubproblemSpec spec;
    spec.channel = ch;
    spec.op = op;
    spec.b_star = interference_plus_noise(ch, op);
    spec.eve = taylor_eve(ch, op);
    spec.eve_target = spec.eve.c0 - 0.01;
    spec.exposure = taylor_exposure(ch, op, 2.0);
    spec.exposure_target = spec.exposure.c0 - 0.01;
    spec.p_max = 1.5 * op.bs_power();
    spec.p_bar_max = 1.5 * op.ue_power();
    const auto sol = solve_subproblem(spec, 3e-7);
    r.worst = std::max(r.worst, sol.kkt.max());
    ++r.cases;
    if (sol.status != cvx::ProgramStatus::optimal || sol.kkt.max() > 1e-6) ++r.failures;
  }
  r.threshold = 1e-6;
}

void sca_certification(CheckResult& r, const Sizes& sz, std::uint64_t seed) {
  CounterRng rng(seed, 8);
  for (std::size_t i = 0; i < sz.sca_runs; ++i) {
    ComplexMatrix h(1, 2);
    h(0, 0) = rng.complex_normal() / std::sqrt(2.0);
    h(0, 1) = rng.complex_normal() / std::sqrt(2.0);
    const auto ch = ChannelModel::isotropic(h);
    OutageSpec spec;
    spec.p_d_max = 1.0;
    const auto res = optimize(ch, spec, NoiseConfig::both());
    ++r.cases;
    if (res.status != ScaStatus::converged) continue;
    const SampleSpec ss{100000, seed + 9000 + i, false, 0};
    const auto sop = empirical_sop(ch, res.cov, ss);
    const auto expo = empirical_exposure(ch, res.cov, spec.p_d_max, ss);
    const double d1 = std::abs(sop.estimate - res.sop_certificate) / binomial_sigma(res.sop_certificate, ss.n_samples);
    const double d2 =
        std::abs(expo.estimate - res.exposure_certificate) / binomial_sigma(res.exposure_certificate, ss.n_samples);
    r.worst = std::max({r.worst, d1, d2});
    const bool ok = res.sop_certificate >= 0.95 - 1e-6 && res.exposure_certificate >= 0.95 - 1e-6 && d1 <= 4.0 &&
                    d2 <= 4.0;
    if (!ok) ++r.failures;
  }
  r.threshold = 4.0;
}

}  // namespace

ValidationLevel parse_validation_level(const std::string& s) {
  if (s == "fast") return ValidationLevel::fast;
  if (s == "full") return ValidationLevel::full;
  throw std::invalid_argument("unknown validation level '" + s + "' (expected fast or full)");
}

ValidationReport run_validation(const ValidationOptions& opt) {
  UpperGammaFn q = &upper_gamma_q;
  if (opt.inject_fault == "gamma") {
    q = &tampered_gamma;
  } else if (!opt.inject_fault.empty()) {
    throw std::invalid_argument("unknown fault '" + opt.inject_fault + "' (expected gamma)");
  }
  const auto sz = sizes_for(opt.level);
  const auto t0 = std::chrono::steady_clock::now();

  ValidationReport rep;
  rep.level = opt.level == ValidationLevel::full ? "full" : "fast";
  rep.inject_fault = opt.inject_fault;
  rep.checks.push_back(timed("quadform-vs-monte-carlo", [&](auto& r) { quadform_vs_mc(r, sz, opt.seed, q); }));
  rep.checks.push_back(timed("hypoexponential-exact", [&](auto& r) { hypoexponential(r, sz, opt.seed); }));
  rep.checks.push_back(timed("sop-vs-monte-carlo", [&](auto& r) { channel_vs_mc(r, sz, opt.seed, false); }));
  rep.checks.push_back(timed("exposure-vs-monte-carlo", [&](auto& r) { channel_vs_mc(r, sz, opt.seed, true); }));
  rep.checks.push_back(timed("taylor-gradients-vs-finite-differences", [&](auto& r) { gradients(r, sz, opt.seed); }));
  rep.checks.push_back(timed("fenchel-bound", [&](auto& r) { fenchel(r, sz, opt.seed); }));
  rep.checks.push_back(timed("subproblem-kkt", [&](auto& r) { subproblem_kkt(r, sz, opt.seed); }));
  if (sz.sca_runs > 0) {
    rep.checks.push_back(timed("sca-certification", [&](auto& r) { sca_certification(r, sz, opt.seed); }));
  }
  rep.passed = std::all_of(rep.checks.begin(), rep.checks.end(), [](const auto& c) { return c.passed; });
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string ValidationReport::to_json() const {
  // Wall-clock times are left out so that repeated runs produce identical bytes.
  nlohmann::ordered_json j;
  j["level"] = level;
  j["inject_fault"] = inject_fault;
  j["passed"] = passed;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"cases", c.cases},
                   {"failures", c.failures},
                   {"worst", c.worst},
                   {"threshold", c.threshold},
                   {"detail", c.detail}});
  }
  j["checks"] = arr;
  return j.dump(2) + "\n";
}

}  // namespace emfsec
