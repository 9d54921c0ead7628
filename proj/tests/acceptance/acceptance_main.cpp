// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "emfsec/convex_program.hpp"
#include "emfsec/convex_subproblem.hpp"
#include "emfsec/experiment.hpp"
#include "emfsec/monte_carlo.hpp"
#include "emfsec/quadform.hpp"
#include "emfsec/random_instances.hpp"
#include "emfsec/sca.hpp"
#include "emfsec/secrecy_model.hpp"
#include "emfsec/validation.hpp"
#include "test_support.hpp"

using namespace emfsec;
using emfsec::testing::binomial_sigma;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

double rel_err(double a, double b) {
  const double d = std::abs(a - b);
  const double s = std::max(std::abs(a), std::abs(b));
  return s < 1e-9 ? (d <= 1e-9 ? 0.0 : d) : d / s;
}

// Sum of independent exponentials with distinct means, evaluated in long
// double so that the reference is more accurate than the code under test.
double hypoexponential_survival_ld(const std::vector<double>& means, double z) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < means.size(); ++k) {
    long double prod = 1.0L;
    for (std::size_t j = 0; j < means.size(); ++j) {
      if (j != k) prod *= static_cast<long double>(means[k]) / (static_cast<long double>(means[k]) - means[j]);
    }
    s += std::exp(-static_cast<long double>(z) / means[k]) * prod;
  }
  return static_cast<double>(s);
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  CounterRng rng(101, 0);
  constexpr std::size_t kN = 1000000;
  std::size_t checks = 0, inside = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto p = random_profile(rng, 8, 4, 1e-3, 1e3, true);
    std::vector<double> zs;
    for (double a : {-0.5, 0.5, 1.5}) zs.push_back(profile_quantile_proxy(p, a));
    const auto est = empirical_tail(p, zs, {kN, 7000 + i, false, 0});
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const double closed = tail_probability(p, zs[k]).probability;
      const double dev = std::abs(closed - est[k].estimate) / binomial_sigma(closed, kN);
      worst = std::max(worst, dev);
      ++checks;
      inside += dev <= 4.0;
    }
  }
  const double secs = seconds_since(t0);
  const double frac = static_cast<double>(inside) / static_cast<double>(checks);
  return {frac >= 0.99 && secs <= 600.0,
          fmt("%.4f of checks within 4 sigma (worst %.2f sigma), %.1f s", frac, worst, secs)};
}

Outcome channel_vs_mc(bool exposure, std::uint64_t stream) {
  CounterRng rng(102, stream);
  constexpr std::size_t kN = 1000000;
  int outside = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    const SampleSpec s{kN, 9000 + 100 * stream + i, false, 0};
    double closed = 0.0;
    Estimate est;
    if (exposure) {
      const double pd = log_uniform(rng, 0.5, 10.0);
      closed = exposure_outage_prob(ch, cov, pd);
      est = empirical_exposure(ch, cov, pd, s);
    } else {
      closed = secrecy_outage_prob(ch, cov);
      est = empirical_sop(ch, cov, s);
    }
    const double dev = std::abs(closed - est.estimate) / binomial_sigma(closed, kN);
    worst = std::max(worst, dev);
    outside += dev > 4.0;
  }
  return {outside == 0, fmt("%.0f of 50 outside 4 sigma (worst %.2f sigma)", outside, worst)};
}

Outcome criterion3() {
  auto mc = channel_vs_mc(true, 2);
  // Exact agreement with the hypoexponential law on all-distinct spectra.
  CounterRng rng(103, 0);
  int cases = 0;
  double worst = 0.0;
  for (int i = 0; i < 2000 && cases < 500; ++i) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    const double pd = log_uniform(rng, 0.5, 10.0);
    const auto spec = exposure_spectrum(ch, cov, pd);
    const auto& prof = spec.grouped.profile;
    if (prof.empty() || std::any_of(prof.mults.begin(), prof.mults.end(), [](int m) { return m != 1; })) continue;
    ++cases;
    const double ref = 1.0 - hypoexponential_survival_ld(prof.lambdas, spec.z);
    worst = std::max(worst, std::abs(exposure_outage_prob(ch, cov, pd) - ref));
  }
  const bool exact = cases > 0 && worst <= 1e-10;
  return {mc.pass && exact, mc.detail + fmt("; hypoexponential: %.0f spectra, max |diff| %.2e", cases, worst)};
}

bool well_separated(const OutageSpectrum& s) {
  return s.grouped.profile.size() < 2 || s.grouped.profile.min_relative_gap() >= 1e-3;
}

Outcome criterion4() {
  CounterRng rng(104, 0);
  constexpr double h = 1e-5;
  int points = 0, checks = 0, bad = 0;
  double worst = 0.0;
  while (points < 50) {
    const auto ch = random_channel(rng);
    const auto op = random_covariances(rng);
    const double pd = log_uniform(rng, 0.5, 10.0);
    if (!well_separated(sop_spectrum(ch, op)) || !well_separated(exposure_spectrum(ch, op, pd))) continue;
    ++points;
    const auto te = taylor_eve(ch, op);
    const auto td = taylor_exposure(ch, op, pd);
    const auto dq = random_hermitian(rng, 2);
    const auto dqn = random_hermitian(rng, 2);
    const auto dqb = random_hermitian(rng, 1);
    using Move = std::function<void(CovarianceSet&, double)>;
    using Prob = std::function<double(const CovarianceSet&)>;
    auto check = [&](const Prob& f, const Move& move, double analytic) {
      CovarianceSet plus = op, minus = op;
      move(plus, h);
      move(minus, -h);
      const double e = rel_err(analytic, (f(plus) - f(minus)) / (2.0 * h));
      worst = std::max(worst, e);
      ++checks;
      bad += e > 1e-4;
    };
    const Prob sop = [&](const CovarianceSet& c) { return secrecy_outage_prob(ch, c); };
    const Prob expo = [&](const CovarianceSet& c) { return exposure_outage_prob(ch, c, pd); };
    const Move mq = [&](CovarianceSet& c, double s) { c.q = c.q + dq * s; };
    const Move mqn = [&](CovarianceSet& c, double s) { c.q_n = c.q_n + dqn * s; };
    const Move mqb = [&](CovarianceSet& c, double s) { c.q_n_bar = c.q_n_bar + dqb * s; };
    check(sop, mq, dq.inner(te.c));
    check(sop, mqn, dqn.inner(te.c_n));
    check(sop, mqb, dqb.inner(te.c_n_bar));
    check(sop, [&](CovarianceSet& c, double s) { c.r_e_max += s; }, te.c_r);
    check(expo, mq, dq.inner(td.c));
    check(expo, mqn, dqn.inner(td.c_n));
    check(expo, mqb, dqb.inner(td.c_n_bar));
  }
  return {bad == 0, fmt("%.0f of %.0f directional derivatives off (worst rel err %.2e)", bad, checks, worst)};
}

Outcome criterion5() {
  CounterRng rng(105, 0);
  double worst_gap = -1e300, worst_touch = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto ch = random_channel(rng);
    const auto cov = random_covariances(rng);
    const auto other = random_covariances(rng);
    const double ru = rate_legitimate(ch, cov);
    worst_gap = std::max(worst_gap, fenchel_lower_bound(ch, cov, FenchelPoint::at(ch, other)) - ru);
    worst_touch = std::max(worst_touch, std::abs(fenchel_lower_bound(ch, cov, FenchelPoint::at(ch, cov)) - ru));
  }
  return {worst_gap <= 1e-9 && worst_touch <= 1e-9,
          fmt("max(bound - rate) %.2e, max touching error %.2e", worst_gap, worst_touch)};
}

SubproblemSpec setup_spec(const ChannelModel& ch, const OutageSpec& out, const NoiseConfig& cfg,
                          const CovarianceSet& op, const PenaltyWeights& pen) {
  SubproblemSpec sp;
  sp.channel = ch;
  sp.b_star = interference_plus_noise(ch, op);
  sp.op = op;
  sp.eve = taylor_eve(ch, op);
  sp.eve_target = 1.0 - out.epsilon;
  sp.exposure = taylor_exposure(ch, op, out.p_d_max);
  sp.exposure_target = 1.0 - out.delta;
  sp.penalties = pen;
  sp.p_max = out.p_max;
  sp.p_bar_max = out.p_bar_max;
  sp.noise = cfg;
  return sp;
}

Outcome criterion6() {
  int solves = 0, converged = 0, bad = 0;
  double worst = 0.0;
  auto record = [&](const cvx::KktResiduals& k, cvx::ProgramStatus st) {
    ++solves;
    if (st != cvx::ProgramStatus::optimal) return;
    ++converged;
    worst = std::max(worst, k.max());
    bad += k.max() > 1e-6;
  };

  // Random linearizations with a strictly feasible operating point.
  CounterRng rng(106, 0);
  const NoiseConfig cfgs[] = {NoiseConfig::none(), NoiseConfig::bs_only(), NoiseConfig::ue_only(),
                              NoiseConfig::both()};
  for (int i = 0; i < 100; ++i) {
    SubproblemSpec sp;
    sp.channel = random_channel(rng);
    sp.op = random_covariances(rng);
    sp.noise = cfgs[i % 4];
    if (!sp.noise.bs_noise_enabled) sp.op.q_n = HermitianMatrix::zero(2);
    if (!sp.noise.ue_noise_enabled) sp.op.q_n_bar = HermitianMatrix::zero(1);
    sp.b_star = interference_plus_noise(sp.channel, sp.op);
    sp.eve = taylor_eve(sp.channel, sp.op);
    sp.eve_target = sp.eve.c0 - 0.01;
    const double pd = log_uniform(rng, 0.5, 10.0);
    sp.exposure = taylor_exposure(sp.channel, sp.op, pd);
    sp.exposure_target = sp.exposure.c0 - 0.01;
    sp.p_max = 1.5 * sp.op.bs_power();
    sp.p_bar_max = std::max(1.5 * sp.op.ue_power(), 0.1);
    sp.penalties = PenaltyWeights{}.scaled(std::pow(2.0, i % 6));
    const auto sol = solve_subproblem(sp);
    record(sol.kkt, sol.status);
  }

  // Subproblems met along SCA runs on the evaluation setup.
  for (int r = 0; r < 3; ++r) {
    const auto ch = testing::reference_channel(testing::draw_h_u(rng));
    for (const auto& cfg : cfgs) {
      for (double pd : {0.1, 1.0, 10.0, 300.0}) {
        OutageSpec out;
        out.p_d_max = pd;
        ScaState st;
        st.op = initialize(ch, out, cfg);
        st.last_certified = st.op;
        st.penalties = PenaltyWeights{};
        for (int it = 0; it < 6; ++it) {
          const auto sol = solve_subproblem(setup_spec(ch, out, cfg, st.op, st.penalties));
          record(sol.kkt, sol.status);
          iterate_once(ch, out, cfg, st);
        }
      }
    }
  }

  // Symmetric log-det: max log det(Q + 0.1 I) with tr Q <= P.
  double sym_err = 0.0;
  for (double p : {0.5, 4.0, 10.0}) {
    cvx::ConvexProgram prog(4);
    const auto basis = hermitian_basis(2);
    prog.logdet.push_back({1.0, 0.1 * ComplexMatrix::Identity(2, 2), basis});
    RealVector row = RealVector::Zero(4);
    row.head(2).setOnes();
    prog.add_row(row, p);
    prog.blocks.push_back({ComplexMatrix::Zero(2, 2), basis, "Q"});
    const auto sol = cvx::solve(prog, RealVector::Zero(4));
    record(sol.kkt, sol.status);
    sym_err = std::max(sym_err, (unrealify(sol.x, 2) - HermitianMatrix::identity(2, p / 2)).frobenius_norm());
  }

  // 1-D instances against a dense grid: w log(a + b x) + c x - d (x - x0)^2 on [0, u].
  double grid_err = 0.0;
  for (int t = 0; t < 10; ++t) {
    const double w = 0.2 + 2.0 * rng.uniform(), a = 0.05 + rng.uniform(), b = 0.5 + 2.0 * rng.uniform();
    const double c = 2.0 * rng.uniform() - 1.0, d = 0.05 + rng.uniform(), x0 = 3.0 * rng.uniform();
    const double u = 0.5 + 4.0 * rng.uniform();
    auto f = [&](double x) { return w * std::log(a + b * x) + c * x - d * (x - x0) * (x - x0); };
    cvx::ConvexProgram prog(1);
    prog.logdet.push_back({w, ComplexMatrix::Constant(1, 1, a), {ComplexMatrix::Constant(1, 1, b)}});
    prog.linear(0) = c;
    prog.quad_weight(0) = d;
    prog.quad_center(0) = x0;
    prog.add_row(RealVector::Constant(1, 1.0), u);
    prog.blocks.push_back({ComplexMatrix::Zero(1, 1), {ComplexMatrix::Identity(1, 1)}, "x"});
    const auto sol = cvx::solve(prog, RealVector::Constant(1, 0.5 * u));
    record(sol.kkt, sol.status);
    double best = -1e300;
    for (int i = 0; i <= 100000; ++i) best = std::max(best, f(u * i / 100000.0));
    grid_err = std::max(grid_err, std::abs(sol.objective - best));
  }

  const bool pass = bad == 0 && sym_err <= 1e-6 && grid_err <= 1e-4 && converged > 0;
  std::ostringstream os;
  os << converged << "/" << solves << " converged, worst KKT " << fmt("%.2e", worst) << ", symmetric err "
     << fmt("%.2e", sym_err) << ", grid err " << fmt("%.2e", grid_err);
  return {pass, os.str()};
}

Outcome criterion7() {
  CounterRng rng(107, 0);
  const NoiseConfig cfgs[] = {NoiseConfig::none(), NoiseConfig::bs_only(), NoiseConfig::ue_only(),
                              NoiseConfig::both()};
  int runs = 0, converged = 0, bad = 0;
  double worst_mc = 0.0, min_cert = 1.0;
  constexpr std::size_t kN = 100000;
  for (int r = 0; r < 5; ++r) {
    const auto ch = testing::reference_channel(testing::draw_h_u(rng));
    for (const auto& cfg : cfgs) {
      for (double db : {-10.0, 0.0, 10.0, 25.0}) {
        OutageSpec out;
        out.p_d_max = std::pow(10.0, db / 10.0);
        const auto res = optimize(ch, out, cfg);
        ++runs;
        if (res.status != ScaStatus::converged) continue;
        ++converged;
        min_cert = std::min({min_cert, res.sop_certificate, res.exposure_certificate});
        if (res.sop_certificate < 0.95 - 1e-6 || res.exposure_certificate < 0.95 - 1e-6) ++bad;
        const SampleSpec s{kN, 20000 + static_cast<std::uint64_t>(runs), false, 0};
        const double sop_mc = empirical_sop(ch, res.cov, s).estimate;
        const double exp_mc = empirical_exposure(ch, res.cov, out.p_d_max, s).estimate;
        const double d1 = std::abs(sop_mc - res.sop_certificate) / binomial_sigma(res.sop_certificate, kN);
        const double d2 = std::abs(exp_mc - res.exposure_certificate) / binomial_sigma(res.exposure_certificate, kN);
        worst_mc = std::max({worst_mc, d1, d2});
        if (d1 > 4.0 || d2 > 4.0) ++bad;
      }
    }
  }
  std::ostringstream os;
  os << converged << "/" << runs << " runs converged, min certificate " << fmt("%.6f", min_cert)
     << ", worst MC deviation " << fmt("%.2f", worst_mc) << " sigma, " << bad << " violations";
  return {bad == 0 && converged > 0, os.str()};
}

struct SweepRun {
  std::string records;
  std::string aggregate;
  std::vector<AggregateRow> rows;
  double seconds = 0.0;
};

SweepRun run_default_sweep(unsigned threads, const std::filesystem::path& dir) {
  ExperimentConfig cfg;
  cfg.threads = threads;
  cfg.output_dir = dir.string();
  const auto t0 = Clock::now();
  const auto out = run_sweep(cfg);
  SweepRun r;
  r.seconds = seconds_since(t0);
  r.rows = out.aggregate;
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.records = slurp(out.records_path);
  r.aggregate = slurp(out.aggregate_path);
  return r;
}

// mean R_eps and mean data+noise power per (config, grid point), grid ascending.
std::map<std::string, std::vector<const AggregateRow*>> by_config(const std::vector<AggregateRow>& rows) {
  std::map<std::string, std::vector<const AggregateRow*>> m;
  for (const auto& r : rows) m[r.noise_config].push_back(&r);
  for (auto& [name, v] : m) {
    std::stable_sort(v.begin(), v.end(), [](auto* a, auto* b) { return a->p_d_max_db < b->p_d_max_db; });
  }
  return m;
}

Outcome criterion8(const SweepRun& run) {
  const auto m = by_config(run.rows);
  const auto& none = m.at("none");
  const auto& both = m.at("both");
  bool a = true;
  double worst_a = 1e300;
  for (std::size_t g = 0; g < none.size(); ++g) {
    worst_a = std::min(worst_a, both[g]->mean_r_eps - none[g]->mean_r_eps);
    a = a && both[g]->mean_r_eps >= none[g]->mean_r_eps;
  }
  bool b = true;
  double worst_b = 1e300;
  for (const auto& [name, v] : m) {
    for (std::size_t g = 1; g < v.size(); ++g) {
      const double d = v[g]->mean_r_eps - v[g - 1]->mean_r_eps;
      worst_b = std::min(worst_b, d);
      b = b && d >= -1e-3;
    }
  }
  const double bs = m.at("bs-only").back()->mean_r_eps;
  const double ue = m.at("ue-only").back()->mean_r_eps;
  const bool c = bs >= ue;
  const bool time_ok = run.seconds <= 3600.0;
  std::ostringstream os;
  os << "(a) " << (a ? "ok" : "violated") << " min(both-none) " << fmt("%.4g", worst_a) << "; (b) "
     << (b ? "ok" : "violated") << " min step " << fmt("%.3g", worst_b) << "; (c) bs-only " << fmt("%.4f", bs)
     << " vs ue-only " << fmt("%.4f", ue) << "; " << fmt("%.1f s", run.seconds);
  return {a && b && c && time_ok, os.str()};
}

Outcome criterion9(const SweepRun& run) {
  const auto m = by_config(run.rows);
  const auto& both = m.at("both");
  bool mono = true;
  double worst = 1e300;
  for (std::size_t g = 1; g < both.size(); ++g) {
    const double d = (both[g]->mean_p + both[g]->mean_p_n) - (both[g - 1]->mean_p + both[g - 1]->mean_p_n);
    worst = std::min(worst, d);
    mono = mono && d >= -1e-3;
  }
  const double last = both.back()->mean_p + both.back()->mean_p_n;
  const bool sat = std::abs(last - 10.0) <= 1e-3;
  return {mono && sat, fmt("min step %.3g, P+P_n at largest grid point %.6f", worst, last)};
}

Outcome criterion10(const SweepRun& first, const std::filesystem::path& work) {
  std::vector<std::string> failed;
  const auto single_thread = run_default_sweep(1, work / "sweep_t1");
  if (single_thread.records != first.records) failed.push_back("records.csv across thread counts");
  if (single_thread.aggregate != first.aggregate) failed.push_back("aggregate.csv across thread counts");

  ExperimentConfig small;
  small.realizations = 3;
  small.threads = 2;
  small.output_dir = (work / "small_a").string();
  run_sweep(small);
  small.output_dir = (work / "small_b").string();
  run_sweep(small);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* f : {"records.csv", "aggregate.csv"}) {
    if (slurp(work / "small_a" / f) != slurp(work / "small_b" / f)) failed.push_back(std::string("repeat ") + f);
  }

  ExperimentConfig single;
  single.single_p_d_max_db = 15.0;
  if (run_single_json(single) != run_single_json(single)) failed.push_back("single JSON");

  ValidationOptions vo;
  if (run_validation(vo).to_json() != run_validation(vo).to_json()) failed.push_back("validation JSON");

  std::string detail = failed.empty() ? "records, aggregate, single and validation outputs byte-identical" : "differs:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const auto work = std::filesystem::temp_directory_path() / "emfsec_acceptance";
  std::filesystem::remove_all(work);
  std::filesystem::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, "quadratic-form tail vs Monte Carlo", criterion1);
  report(2, "secrecy outage vs Monte Carlo", [] { return channel_vs_mc(false, 1); });
  report(3, "exposure probability vs Monte Carlo and hypoexponential", criterion3);
  report(4, "outage gradients vs finite differences", criterion4);
  report(5, "Fenchel rate bound", criterion5);
  report(6, "subproblem solver", criterion6);
  report(7, "end-to-end certification", criterion7);

  SweepRun sweep;
  bool have_sweep = false;
  report(8, "sweep trends", [&] {
    sweep = run_default_sweep(4, work / "sweep_t4");
    have_sweep = true;
    return criterion8(sweep);
  });
  report(9, "power saturation", [&] {
    if (!have_sweep) return Outcome{false, "sweep unavailable"};
    return criterion9(sweep);
  });
  report(10, "determinism", [&] {
    if (!have_sweep) return Outcome{false, "sweep unavailable"};
    return criterion10(sweep, work);
  });

  std::filesystem::remove_all(work);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
