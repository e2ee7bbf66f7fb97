#include <benchmark/benchmark.h>

#include "hepm/em.hpp"
#include "hepm/forward_pass.hpp"
#include "hepm/gibbs.hpp"
#include "hepm/hawkes_model.hpp"

using namespace hepm;

namespace {

struct Fixture {
    HawkesParams params;
    EventSequence data;
    PairBlocks blocks;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        BlockScenario sc;
        sc.num_nodes = 60;
        sc.seed = 1;
        auto truth = make_block_scenario(sc);
        SimulationOptions so;
        so.horizon = 1e6;
        so.max_events = 50'000;
        so.seed = 2;
        auto data = simulate(truth.params, so).events;
        PairBlocks blocks(data);
        return Fixture{truth.params, std::move(data), std::move(blocks)};
    }();
    return f;
}

void BM_ForwardPass(benchmark::State& state) {
    const auto& f = fixture();
    PassOptions o;
    o.parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(forward_pass(f.params, f.data, f.blocks, o).log_intensity);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.size()));
}
BENCHMARK(BM_ForwardPass)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_ForwardPassReference(benchmark::State& state) {
    const auto& f = fixture();
    PassOptions o;
    for (auto _ : state) benchmark::DoNotOptimize(forward_pass_reference(f.params, f.data, f.blocks, o).log_intensity);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.size()));
}
BENCHMARK(BM_ForwardPassReference)->Unit(benchmark::kMillisecond);

void BM_EmIterations(benchmark::State& state) {
    const auto& f = fixture();
    EMOptions o;
    o.max_iter = 5;
    o.tol = 0.0;
    o.parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(fit_em(f.params, f.data, nullptr, o).iterations);
}
BENCHMARK(BM_EmIterations)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_GibbsIterations(benchmark::State& state) {
    const auto& f = fixture();
    GibbsOptions o;
    o.iterations = 5;
    o.seed = 3;
    o.record_log_posterior = false;
    o.parallel = state.range(0) != 0;
    for (auto _ : state) benchmark::DoNotOptimize(run_chain(f.params, f.data, nullptr, o).kept);
}
BENCHMARK(BM_GibbsIterations)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
