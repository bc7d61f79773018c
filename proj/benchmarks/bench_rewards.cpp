#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "grl/geometry.hpp"
#include "grl/reward_engine.hpp"
#include "grl/text_metrics.hpp"

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t len) {
    std::string s(len, ' ');
    for (char& c : s) c = static_cast<char>('a' + rng() % 26);
    return s;
}

void BM_LevenshteinRatio(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::string a = random_text(rng, n), b = random_text(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(grl::levenshtein_ratio(a, b));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LevenshteinRatio)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_RotatedIou(benchmark::State& state) {
    const grl::RotatedBox a{200, 200, 80, 40, 17}, b{210, 195, 70, 50, -20};
    for (auto _ : state) benchmark::DoNotOptimize(grl::iou(a, b));
}
BENCHMARK(BM_RotatedIou);

void BM_Meteor(benchmark::State& state) {
    const auto a = grl::tokenize("two large ships are moored near the eastern harbor wall");
    const auto b = grl::tokenize("two ships moored at the harbor near a large wall");
    for (auto _ : state) benchmark::DoNotOptimize(grl::meteor(a, b));
}
BENCHMARK(BM_Meteor);

void BM_ScoreGroup(benchmark::State& state) {
    grl::CandidateGroup g;
    g.prompt = {"p", std::nullopt, "describe", grl::TaskKind::Grounding,
                grl::BoxesWithText{{{120, 140, 60, 30, 12}}, "a ship near the pier"}};
    for (int i = 0; i < 8; ++i) {
        g.candidates.push_back({"<think>look</think><answer>a ship " + std::to_string(i) +
                                    " near the pier {<12" + std::to_string(i) + "><140><60><30>|<10>}</answer>",
                                std::nullopt});
    }
    const grl::RewardConfig cfg;
    const auto workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(grl::score_group(g, cfg, workers));
}
BENCHMARK(BM_ScoreGroup)->Arg(1)->Arg(4);

} // namespace
