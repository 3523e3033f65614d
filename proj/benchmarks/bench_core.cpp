#include <benchmark/benchmark.h>

#include "twrn/bounds.hpp"
#include "twrn/estimators.hpp"
#include "twrn/optimize.hpp"
#include "twrn/specialfn.hpp"

using namespace twrn;

namespace {

ObservationBatch bench_batch(std::size_t n) {
    SystemConfig c;
    c.n = n;
    RngStream rng(1);
    return simulate_batch(c, ChannelState({0.6, -0.3}, {0.2, 0.9}), rng, 0);
}

void BM_BesselPair(benchmark::State& state) {
    double x = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(specialfn::scaled_bessel_pair(x));
        x = x < 1e4 ? x * 1.37 : 0.5;
    }
}
BENCHMARK(BM_BesselPair);

void BM_QFunction(benchmark::State& state) {
    double x = 1e-3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(specialfn::q_function(x));
        x = x < 1e4 ? x * 1.37 : 1e-3;
    }
}
BENCHMARK(BM_QFunction);

void BM_MsevObjective(benchmark::State& state) {
    const auto batch = bench_batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(msev_objective(batch, {0.3, -0.2}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MsevObjective)->Arg(100)->Arg(1000)->Arg(100000);

void BM_MlGradient(benchmark::State& state) {
    const auto batch = bench_batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(analytic_gradient(ObjectiveKind::ml, batch, {0.3, -0.2}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlGradient)->Arg(100)->Arg(1000);

void BM_Estimate(benchmark::State& state) {
    const auto batch = bench_batch(100);
    const Method method = state.range(0) ? Method::msev : Method::ml;
    for (auto _ : state) benchmark::DoNotOptimize(estimate(batch, method, SolverConfig{}));
}
BENCHMARK(BM_Estimate)->Arg(0)->Arg(1);

void BM_CrbSchur(benchmark::State& state) {
    SystemConfig c;
    c.n = static_cast<std::size_t>(state.range(0));
    RngStream rng(2);
    const auto t1 = draw_mpsk_symbols(c.m, c.n, c.p1, rng);
    const auto t2 = draw_mpsk_symbols(c.m, c.n, c.p2, rng);
    const ChannelState ch({0.6, -0.3}, {0.2, 0.9});
    for (auto _ : state) benchmark::DoNotOptimize(crb_a(build_fim_blocks(c, ch, t1, t2)));
}
BENCHMARK(BM_CrbSchur)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
