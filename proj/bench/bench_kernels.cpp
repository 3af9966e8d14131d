// Serial reference vs OpenMP for the verification kernels.
// Set OMP_NUM_THREADS to control the parallel side.

#include "cookiescan/kernels.hpp"

#include <benchmark/benchmark.h>

using namespace cookiescan;
using namespace cookiescan::kernels;

namespace {

template <bool Parallel>
void BM_RoundTrip(benchmark::State& state) {
    const auto per_cell = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        auto r = Parallel ? cookie_roundtrip_sweep(1, per_cell) : cookie_roundtrip_sweep_serial(1, per_cell);
        benchmark::DoNotOptimize(r);
    }
    state.SetItemsProcessed(state.iterations() * 16 * 4096 * per_cell);
}

template <bool Parallel>
void BM_SynAckFalsePositives(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? synack_false_positives(n, 0x1234, 3)
                                          : synack_false_positives_serial(n, 0x1234, 3));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_HashHistogram(benchmark::State& state) {
    const auto secret = HashSecret::from_seed(1);
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto h = Parallel ? hash_histogram(secret, n, 5) : hash_histogram_serial(secret, n, 5);
        benchmark::DoNotOptimize(h.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Permutation(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        auto img = Parallel ? permutation_image(n, 9) : permutation_image_serial(n, 9);
        benchmark::DoNotOptimize(img.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_CoverageOracle(benchmark::State& state) {
    LossModel m;
    m.loss_to_target = m.loss_from_target = 0.01;
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? banner_coverage_oracle(n, m, 2) : banner_coverage_oracle_serial(n, m, 2));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_RoundTrip<false>)->Name("roundtrip/serial")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RoundTrip<true>)->Name("roundtrip/omp")->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SynAckFalsePositives<false>)->Name("synack_fp/serial")->Arg(1 << 22)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SynAckFalsePositives<true>)->Name("synack_fp/omp")->Arg(1 << 22)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_HashHistogram<false>)->Name("hash_histogram/serial")->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HashHistogram<true>)->Name("hash_histogram/omp")->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Permutation<false>)->Name("permutation/serial")->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Permutation<true>)->Name("permutation/omp")->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CoverageOracle<false>)->Name("coverage/serial")->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoverageOracle<true>)->Name("coverage/omp")->Arg(1 << 20)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
