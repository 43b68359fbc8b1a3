// Serial reference kernels against their OpenMP counterparts.
#include <benchmark/benchmark.h>

#include <random>

#include "aac/envs.hpp"
#include "aac/nn.hpp"
#include "aac/parallel.hpp"
#include "aac/rl.hpp"

using namespace aac;

namespace {

const std::vector<parallel::GainTriple>& grid() {
    static const auto g = parallel::make_grid({-5, 5, 41}, {-5, 5, 41}, {-5, 5, 41});
    return g;
}

void BM_ClassifyGridSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parallel::classify_grid_serial(grid()));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid().size()));
}

void BM_ClassifyGridParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parallel::classify_grid(grid()));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(grid().size()));
}

// A fixed random policy network stands in for a trained actor.
rl::PolicyFn random_policy(const Env& env) {
    std::mt19937_64 rng(3);
    const int obs = env.state_dim() + 2 * env.goal_dim();
    auto net = std::make_shared<nn::MlpParameters>(
        nn::make_mlp(nn::mlp_widths(obs, env.action_dim(), 64, 3), nn::Activation::Selu, rng));
    return [net](const ExtendedObservation& s) { return nn::forward(*net, s.values()).array().tanh().matrix().eval(); };
}

template <bool Parallel>
void BM_Evaluate(benchmark::State& state) {
    auto c = EnvConfig::defaults(EnvKind::PointMass);
    c.max_steps = 200;
    const auto env = make_env(c);
    const auto policy = random_policy(*env);
    const rl::AdviserSetting adviser{AdviserGains{1.3, 0.1, 0.1}, 1.0};
    for (auto _ : state) {
        if constexpr (Parallel)
            benchmark::DoNotOptimize(rl::evaluate(policy, *env, adviser, 20, 7));
        else
            benchmark::DoNotOptimize(rl::evaluate_serial(policy, *env, adviser, 20, 7));
    }
}

}  // namespace

BENCHMARK(BM_ClassifyGridSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClassifyGridParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate<false>)->Name("BM_EvaluateSerial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate<true>)->Name("BM_EvaluateParallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
