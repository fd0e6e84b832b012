#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "tmachine/tmachine.hpp"

namespace {

using namespace tmachine;

void BM_BuildFlipModel(benchmark::State& state) {
    const int loci = static_cast<int>(state.range(0));
    const std::vector<double> a(static_cast<std::size_t>(loci), 0.1), b(static_cast<std::size_t>(loci), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(build_flip_model(loci, a, b));
    state.SetLabel(std::to_string(1 << loci) + " types");
}
BENCHMARK(BM_BuildFlipModel)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Stationary(benchmark::State& state) {
    const int loci = static_cast<int>(state.range(0));
    const std::vector<double> a(static_cast<std::size_t>(loci), 0.1), b(static_cast<std::size_t>(loci), 0.3);
    const auto p = build_flip_model(loci, a, b);
    for (auto _ : state) benchmark::DoNotOptimize(stationary(p));
}
BENCHMARK(BM_Stationary)->Arg(4)->Arg(7)->Arg(9)->Unit(benchmark::kMillisecond);

// One backward simulation on a 30-lineage population under the single-site
// model; range(0) is the stop size, range(1) selects the proposal.
void BM_SimulateOnce(benchmark::State& state) {
    auto p = std::make_shared<const TransitionMatrix>(build_single_site_model(5));
    const StationaryDistribution dist = stationary(*p);
    const MutationModel model(p, 2.0);
    std::vector<int> counts(32, 0);
    counts[0] = 12, counts[1] = 8, counts[3] = 6, counts[7] = 4;
    const Configuration initial(counts);
    EngineOptions options;
    options.stop_size = static_cast<int>(state.range(0));
    options.proposal = state.range(1) == 0 ? ProposalKind::TwoStage : ProposalKind::Joint;
    std::uint64_t index = 0;
    std::int64_t events = 0;
    for (auto _ : state) {
        RandomStream stream = derive_stream({7, index++});
        const auto record = simulate_once(initial, model, dist, options, stream);
        events += record.event_count;
    }
    state.counters["events/sim"] = benchmark::Counter(static_cast<double>(events) / static_cast<double>(state.iterations()));
}
BENCHMARK(BM_SimulateOnce)->ArgsProduct({{1, 2, 5, 10}, {0, 1}});

void BM_ExactLikelihood(benchmark::State& state) {
    auto p = std::make_shared<const TransitionMatrix>(build_single_site_model(2));
    const StationaryDistribution dist = stationary(*p);
    const MutationModel model(p, 1.5);
    const int n = static_cast<int>(state.range(0));
    const Configuration initial({n - n / 2, n / 4, n / 2 - n / 4, 0});
    for (auto _ : state) benchmark::DoNotOptimize(exact_likelihood(initial, model, dist));
}
BENCHMARK(BM_ExactLikelihood)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Philox(benchmark::State& state) {
    RandomStream stream = derive_stream({1, 0});
    for (auto _ : state) benchmark::DoNotOptimize(stream());
}
BENCHMARK(BM_Philox);

}  // namespace

BENCHMARK_MAIN();
