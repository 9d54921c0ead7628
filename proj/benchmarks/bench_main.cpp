#include <benchmark/benchmark.h>

#include "emfsec/convex_subproblem.hpp"
#include "emfsec/monte_carlo.hpp"
#include "emfsec/quadform.hpp"
#include "emfsec/random_instances.hpp"
#include "emfsec/sca.hpp"
#include "emfsec/secrecy_model.hpp"

using namespace emfsec;

namespace {

void BM_TailProbability(benchmark::State& state) {
  CounterRng rng(1, 0);
  const auto p = random_profile(rng, static_cast<int>(state.range(0)), 2, 1e-2, 1e2, true);
  const double z = profile_quantile_proxy(p, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(tail_probability(p, z).probability);
}
BENCHMARK(BM_TailProbability)->Arg(2)->Arg(4)->Arg(8);

void BM_SecrecyOutage(benchmark::State& state) {
  CounterRng rng(2, 0);
  const auto ch = random_channel(rng);
  const auto cov = random_covariances(rng);
  for (auto _ : state) benchmark::DoNotOptimize(secrecy_outage_prob(ch, cov));
}
BENCHMARK(BM_SecrecyOutage);

void BM_TaylorEve(benchmark::State& state) {
  CounterRng rng(3, 0);
  const auto ch = random_channel(rng);
  const auto cov = random_covariances(rng);
  for (auto _ : state) benchmark::DoNotOptimize(taylor_eve(ch, cov).c0);
}
BENCHMARK(BM_TaylorEve);

void BM_SolveSubproblem(benchmark::State& state) {
  CounterRng rng(4, 0);
  SubproblemSpec sp;
  sp.channel = random_channel(rng);
  sp.op = random_covariances(rng);
  sp.b_star = interference_plus_noise(sp.channel, sp.op);
  sp.eve = taylor_eve(sp.channel, sp.op);
  sp.eve_target = sp.eve.c0 - 0.01;
  sp.exposure = taylor_exposure(sp.channel, sp.op, 2.0);
  sp.exposure_target = sp.exposure.c0 - 0.01;
  sp.p_max = 1.5 * sp.op.bs_power();
  sp.p_bar_max = 1.5 * sp.op.ue_power();
  for (auto _ : state) benchmark::DoNotOptimize(solve_subproblem(sp).objective);
}
BENCHMARK(BM_SolveSubproblem)->Unit(benchmark::kMicrosecond);

void BM_Optimize(benchmark::State& state) {
  ComplexMatrix h(1, 2);
  h << cdouble(0.8, -0.3), cdouble(-0.2, 0.6);
  const auto ch = ChannelModel::isotropic(h);
  OutageSpec spec;
  spec.p_d_max = 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(optimize(ch, spec, NoiseConfig::both()).r_eps);
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMillisecond);

void BM_EmpiricalSop(benchmark::State& state) {
  CounterRng rng(5, 0);
  const auto ch = random_channel(rng);
  const auto cov = random_covariances(rng);
  const SampleSpec s{static_cast<std::size_t>(state.range(0)), 7, false, 1};
  for (auto _ : state) benchmark::DoNotOptimize(empirical_sop(ch, cov, s).estimate);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EmpiricalSop)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
