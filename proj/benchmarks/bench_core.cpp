#include <benchmark/benchmark.h>

#include "poisonlab/dataset.hpp"
#include "poisonlab/matrix.hpp"
#include "poisonlab/net.hpp"
#include "poisonlab/random.hpp"
#include "poisonlab/trigger.hpp"

using namespace poisonlab;

namespace {

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    RandomStream stream(seed, "bench");
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = stream.uniform(-1.0, 1.0);
            a.at(i, j) = v;
            a.at(j, i) = v;
        }
    return a;
}

Dataset bench_dataset() {
    RandomStream stream(9, "dataset");
    return generate(4, 8, 32, 0.1, stream);
}

ModelParams bench_model(const Dataset& d) {
    ArchSpec arch;
    arch.input_h = d.samples.front().image.height;
    arch.input_w = d.samples.front().image.width;
    arch.input_c = d.samples.front().image.channels;
    RandomStream stream(3, "init");
    return init_model(arch, d.num_classes, stream);
}

void BM_MatrixMultiply(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_symmetric(n, 1);
    const Matrix b = random_symmetric(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(multiply(a, b));
}
BENCHMARK(BM_MatrixMultiply)->Arg(16)->Arg(64);

void BM_SymEig(benchmark::State& state) {
    const Matrix a = random_symmetric(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) benchmark::DoNotOptimize(sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(16)->Arg(64);

void BM_Forward(benchmark::State& state) {
    const Dataset d = bench_dataset();
    const ModelParams m = bench_model(d);
    for (auto _ : state) benchmark::DoNotOptimize(forward(m, d.samples.front().image));
}
BENCHMARK(BM_Forward);

void BM_BatchGrad(benchmark::State& state) {
    const Dataset d = bench_dataset();
    const ModelParams m = bench_model(d);
    const std::span<const LabeledSample> batch(d.samples.data(),
                                               static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(grad(m, batch, 1e-4));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchGrad)->Arg(8)->Arg(32);

void BM_ApplyPatch(benchmark::State& state) {
    const Dataset d = bench_dataset();
    ClassEncodingTable table;
    table.bits = {"1010110010101100"};
    const TriggerSpec t = trigger_for_class(table, 0, TriggerKind::Patch, TriggerGeometry{});
    for (auto _ : state) benchmark::DoNotOptimize(apply(d.samples.front().image, t));
}
BENCHMARK(BM_ApplyPatch);

void BM_ApplyBlend(benchmark::State& state) {
    const Dataset d = bench_dataset();
    ClassEncodingTable table;
    table.bits = {"1010110010101100"};
    const TriggerSpec t = trigger_for_class(table, 0, TriggerKind::Blend, TriggerGeometry{});
    for (auto _ : state) benchmark::DoNotOptimize(apply(d.samples.front().image, t));
}
BENCHMARK(BM_ApplyBlend);

} // namespace

BENCHMARK_MAIN();
