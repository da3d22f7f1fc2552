#include <benchmark/benchmark.h>

#include <random>

#include "simulst/attnmath.hpp"
#include "simulst/session.hpp"
#include "simulst/verify.hpp"
#include "simulst/vmma.hpp"

using namespace simulst;

namespace {

void BM_AlignmentDivision(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = verify::random_stepwise(1, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(expected_alignment_div(p));
  state.SetComplexityN(state.range(0));
}

void BM_AlignmentStable(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = verify::random_stepwise(1, n, n);
  for (auto _ : state) benchmark::DoNotOptimize(expected_alignment_stable(p));
  state.SetComplexityN(state.range(0));
}

void BM_MilkSoftAttention(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto alpha = expected_alignment_stable(verify::random_stepwise(2, n, n));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> e(0.0, 1.0);
  Matrix u(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) u(i, j) = e(rng);
  const EnergyMatrix energy(u);
  for (auto _ : state) benchmark::DoNotOptimize(milk_soft_attention(alpha, energy));
  state.SetComplexityN(state.range(0));
}

void BM_SampleChangeTrace(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ConstantScorer scorer(0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_change_trace(scorer, 0.3, n, n, seed++));
}

void BM_RunSession(benchmark::State& state) {
  SyntheticTaskSpec spec;
  spec.length_range = {static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0))};
  spec.alignment_kind = AlignmentKind::RandomMonotone;
  const auto utt = generate_corpus(spec, 1, 4).front();
  SessionConfig cfg;
  cfg.policy.kind = PolicyKind::Vmma;
  cfg.emission_rate = 5;
  for (auto _ : state) benchmark::DoNotOptimize(run_session(utt, cfg));
}

}  // namespace

BENCHMARK(BM_AlignmentDivision)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_AlignmentStable)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_MilkSoftAttention)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_SampleChangeTrace)->Arg(16)->Arg(128);
BENCHMARK(BM_RunSession)->Arg(16)->Arg(64);
BENCHMARK_MAIN();
