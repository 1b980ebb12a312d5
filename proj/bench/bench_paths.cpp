// Serial reference path loop vs the OpenMP path loop on one campaign cell set.
//
//   ./bench_paths --benchmark_filter=StrongError

#include <benchmark/benchmark.h>

#include <vector>

#include "cirlab/experiment.hpp"

namespace {

using namespace cirlab;

std::vector<CellSpec> ladder_cells() {
    std::vector<CellSpec> cells;
    for (double dt : {0.1, 0.01, 0.001}) {
        cells.push_back({make_candidate(SchemeId::SplitLie), dt});
        cells.push_back({make_candidate(SchemeId::FullyTruncEuler), dt});
    }
    return cells;
}

void run(benchmark::State& state, Execution exec) {
    const CirParams p{2.0, 0.02, 0.3, 0.0, 1.0};
    const GridConfig grid{1e-4, 7, static_cast<std::size_t>(state.range(0)), 10, 0};
    ErrorOptions opts;
    opts.execution = exec;
    const auto cells = ladder_cells();
    for (auto _ : state) {
        auto rows = strong_error_cells(p, cells, grid, opts);
        benchmark::DoNotOptimize(rows.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StrongErrorSerial(benchmark::State& state) { run(state, Execution::Serial); }
void BM_StrongErrorParallel(benchmark::State& state) { run(state, Execution::Parallel); }

BENCHMARK(BM_StrongErrorSerial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StrongErrorParallel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_WienerGenerate(benchmark::State& state) {
    std::uint64_t path = 0;
    for (auto _ : state) {
        auto g = generate(11, path++, 1e-5, 1.0);
        benchmark::DoNotOptimize(g.increments().data());
    }
    state.SetItemsProcessed(state.iterations() * 100000);
}
BENCHMARK(BM_WienerGenerate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
