// Serial reference vs OpenMP kernels on the same inputs.
//   ./flipbench_bench --benchmark_filter=Codes

#include "flipbench/generators.hpp"
#include "flipbench/kernels.hpp"
#include "flipbench/predictor.hpp"

#include <benchmark/benchmark.h>

using namespace flipbench;

namespace {

std::vector<std::uint64_t> codes(std::size_t n, int k)
{
    Xorshift64Star rng(1);
    std::vector<std::uint64_t> out(n);
    for (auto& c : out) c = rng() & ((std::uint64_t{1} << k) - 1);
    return out;
}

const kernels::TallyOptions kWindowOpts{8, {2, 3}, true};

template <auto Fn>
void tally_codes(benchmark::State& state)
{
    const auto input = codes(static_cast<std::size_t>(state.range(0)), kWindowOpts.k);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(input, kWindowOpts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void tally_all(benchmark::State& state)
{
    const kernels::TallyOptions o{static_cast<int>(state.range(0)), {1, 2, 3}, false};
    for (auto _ : state) benchmark::DoNotOptimize(Fn(o));
    state.SetItemsProcessed(state.iterations() * (std::int64_t{1} << state.range(0)));
}

void cross_validation(benchmark::State& state)
{
    GeneratorSpec spec;
    spec.length = 8;
    spec.count = static_cast<std::size_t>(state.range(0));
    const auto ws = windows(generate(spec), 8);
    for (auto _ : state) benchmark::DoNotOptimize(cross_validated_mse(ws, CVConfig{}));
}

} // namespace

BENCHMARK(tally_codes<kernels::serial::tally_codes>)->Name("Codes/serial")->Arg(10000)->Arg(1000000);
BENCHMARK(tally_codes<kernels::omp::tally_codes>)->Name("Codes/omp")->Arg(10000)->Arg(1000000);
BENCHMARK(tally_all<kernels::serial::tally_all>)->Name("All/serial")->Arg(8)->Arg(16)->Arg(20);
BENCHMARK(tally_all<kernels::omp::tally_all>)->Name("All/omp")->Arg(8)->Arg(16)->Arg(20);
BENCHMARK(cross_validation)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
