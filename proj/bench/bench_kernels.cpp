// Serial reference path vs OpenMP path for the parallel kernels.
// Range argument 0 selects Exec::serial, 1 selects Exec::parallel.
#include "msep/certificate.hpp"
#include "msep/diagnostics.hpp"
#include "msep/masks.hpp"
#include "msep/models.hpp"

#include <benchmark/benchmark.h>

using namespace msep;

namespace {

Exec exec_of(const benchmark::State& state) {
  return state.range(0) ? Exec::parallel : Exec::serial;
}

LowRankSample rank_one(Index m, Index n, std::uint64_t seed) {
  LowRankModelSpec spec;
  spec.m = m;
  spec.n = n;
  spec.r = 1;
  spec.seed = seed;
  return random_low_rank(spec);
}

void BM_RinpDelta(benchmark::State& state) {
  const Matrix H = build_gaussian_mask(400, 200, 1).H;
  for (auto _ : state) benchmark::DoNotOptimize(rinp_delta_exact(H, 8, exec_of(state)));
}

void BM_MuEnumerate(benchmark::State& state) {
  const Matrix G = build_blur_mask(20).H;
  const auto omega = SupportSet::of(random_sparse({20, 20, 14, 1, 2, 3}));
  for (auto _ : state) benchmark::DoNotOptimize(mu_exact_enumerate(G, omega, exec_of(state)));
}

void BM_XiSampling(benchmark::State& state) {
  const Matrix G = build_blur_mask(40).H;
  const auto f = rank_one(40, 40, 4).factors;
  for (auto _ : state)
    benchmark::DoNotOptimize(xi_bounds(G, f, 256, 1, exec_of(state)).lower);
}

void BM_DegreeTail(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(degree_tail_check(100, 100, 300, 500, 1, exec_of(state)));
}

void BM_GammaScan(benchmark::State& state) {
  const Index n = 20;
  const Matrix G = build_blur_mask(n).H;
  const Matrix S0 = random_sparse({n, n, 5, 1, 2, 1});
  const auto f = rank_one(n, n, 101).factors;
  std::vector<double> gammas;
  for (int k = 1; k <= 16; ++k) gammas.push_back(0.04 * k);
  for (auto _ : state)
    benchmark::DoNotOptimize(certificate_gamma_scan(G, S0, f, gammas, 1e-6, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_RinpDelta)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MuEnumerate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_XiSampling)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DegreeTail)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GammaScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
