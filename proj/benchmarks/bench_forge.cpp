#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/pool.hpp"

namespace {

std::vector<forge::CorpusProblem> synthetic_corpus(int n) {
    std::vector<forge::CorpusProblem> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back({"p" + std::to_string(i),
                       "Problem " + std::to_string(i) + ": compute the optimal arrangement."});
    return out;
}

void bench_content_hash(benchmark::State& state) {
    std::string blob(state.range(0), 'q');
    for (auto _ : state) benchmark::DoNotOptimize(forge::content_hash(blob));
    state.SetBytesProcessed(int64_t(state.iterations()) * state.range(0));
}
BENCHMARK(bench_content_hash)->Arg(1 << 10)->Arg(1 << 16);

void bench_pool_sample(benchmark::State& state) {
    auto pool = forge::SeedPool::init(synthetic_corpus(int(state.range(0))), 7);
    uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(pool.sample(size_t(state.range(1)), seed++));
}
BENCHMARK(bench_pool_sample)->Args({1000, 8})->Args({1000, 100})->Args({10000, 1000});

}  // namespace

BENCHMARK_MAIN();
