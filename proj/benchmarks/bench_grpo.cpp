#include <benchmark/benchmark.h>

#include <random>

#include "grl/grpo.hpp"
#include "grl/toy_lab.hpp"

namespace {

void BM_GroupAdvantages(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<double> rewards(static_cast<std::size_t>(state.range(0)));
    for (double& r : rewards) r = grl::uniform01(rng) * 2.0;
    for (auto _ : state) benchmark::DoNotOptimize(grl::group_advantages(rewards));
}
BENCHMARK(BM_GroupAdvantages)->Arg(8)->Arg(64);

void BM_GrpoGradient(benchmark::State& state) {
    const auto task = grl::make_synthetic_task({});
    const grl::ToyPolicy policy = grl::init_policy(task, 0.9, 1.0, 1);
    std::mt19937_64 rng(4);
    grl::GroupRollout ro;
    for (int k = 0; k < 8; ++k) {
        ro.responses.push_back(policy.sample(0, rng));
        ro.logprob_old.push_back(policy.sequence_logprob(0, ro.responses.back()));
        ro.advantages.push_back(k % 2 ? 1.0 : -1.0);
    }
    const grl::GrpoConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(grl::grpo_gradient(policy, policy, ro, cfg));
}
BENCHMARK(BM_GrpoGradient);

void BM_GrpoIteration(benchmark::State& state) {
    const auto task = grl::make_synthetic_task({});
    grl::ToyPolicy policy = grl::init_policy(task, 0.9, 0.01, 1);
    grl::GrpoTrainOptions opt;
    opt.iters = 1;
    opt.lr = 8.0;
    for (auto _ : state) {
        grl::ToyPolicy p = policy;
        benchmark::DoNotOptimize(grl::train_grpo(p, task, grl::GrpoConfig{}, task.reward_config(), opt));
    }
}
BENCHMARK(BM_GrpoIteration)->Unit(benchmark::kMillisecond);

} // namespace
