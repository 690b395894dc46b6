#include <benchmark/benchmark.h>

#include <vector>

#include "plumbing/classify.hpp"
#include "plumbing/nn/kernels.hpp"

using namespace plumbing;

namespace {

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) x = rng.uniform(-1.0, 1.0);
    return out;
}

using Kernel = void (*)(const double*, const double*, double*, int, int, int);

template <Kernel kernel>
void matmul_bench(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), k = 128, n = 128;
    const auto a = filled(static_cast<std::size_t>(m) * k, 1), b = filled(static_cast<std::size_t>(k) * n, 2);
    std::vector<double> c(static_cast<std::size_t>(m) * n);
    for (auto _ : state) {
        kernel(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * k * n);
}

template <Kernel kernel>
void weight_grad_bench(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), k = 128, n = 128;
    const auto a = filled(static_cast<std::size_t>(m) * k, 3), b = filled(static_cast<std::size_t>(m) * n, 4);
    std::vector<double> c(static_cast<std::size_t>(k) * n);
    for (auto _ : state) {
        kernel(a.data(), b.data(), c.data(), m, k, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m) * k * n);
}

void pair_model_forward(benchmark::State& state) {
    const PairClassifier model(ModelSpec::parse("gen+gat"), 1);
    const Dataset data = make_dataset(DatasetKind::SlMix, 64, 40, 5);
    std::vector<std::size_t> order(data.pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const nn::GraphBatch batch = pair_batch(data.pairs, order, 0, order.size());
    for (auto _ : state) benchmark::DoNotOptimize(model.pair_logits(batch).values().data());
    state.counters["nodes"] = batch.num_nodes;
}

}  // namespace

BENCHMARK(matmul_bench<nn::kernels::matmul_reference>)->Name("matmul/reference")->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(matmul_bench<nn::kernels::matmul_serial>)->Name("matmul/serial")->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(matmul_bench<nn::kernels::matmul>)->Name("matmul/parallel")->Arg(64)->Arg(512)->Arg(4096);
BENCHMARK(weight_grad_bench<nn::kernels::matmul_at_b_acc_serial>)->Name("at_b_acc/serial")->Arg(512)->Arg(4096);
BENCHMARK(weight_grad_bench<nn::kernels::matmul_at_b_acc>)->Name("at_b_acc/parallel")->Arg(512)->Arg(4096);
BENCHMARK(pair_model_forward)->Name("gen_gat/forward_64_pairs")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
