#include <cmath>
#include <limits>

#include "doctest.h"
#include "grl/text_metrics.hpp"
#include "grl/toy_lab.hpp"
#include "oracles.hpp"

using namespace grl;

namespace {

SyntheticTask small_task(TaskKind kind, std::size_t prompts = 4) {
    SyntheticTaskOptions o;
    o.kind = kind;
    o.num_prompts = prompts;
    return make_synthetic_task(o);
}

ToyPolicy peaked_on_references(const SyntheticTask& task, double margin, double temperature) {
    ToyPolicy p(task.prompts.size(), task.horizon, task.vocab.size(), temperature);
    for (std::size_t i = 0; i < task.prompts.size(); ++i) {
        for (std::size_t t = 0; t < task.horizon; ++t) p.logits(i, t)[task.reference_answers[i][t]] = margin;
    }
    return p;
}

std::vector<SftExample> reference_examples(const SyntheticTask& task) {
    std::vector<SftExample> out;
    for (std::size_t i = 0; i < task.prompts.size(); ++i) out.push_back({i, task.reference_answers[i]});
    return out;
}

/// Highest task_acc any answer can reach. The METEOR fragmentation penalty
/// keeps the lexical part of the hybrid rewards just below 1.
double best_task_acc(const Prompt& p, const RewardConfig& cfg) {
    if (const auto* bw = std::get_if<BoxesWithText>(&p.ground_truth)) {
        return (lexical_metric(bw->text, bw->text) + 1.0) / 2.0;
    }
    if (p.task == TaskKind::ChangeDetectionCaption) {
        const auto& text = std::get<TextTruth>(p.ground_truth).text;
        return (1.0 + lexical_metric(text, text, cfg.lexical_weights)) / 2.0;
    }
    return 1.0;
}

} // namespace

TEST_CASE("synthetic tasks have reachable perfect answers") {
    for (TaskKind kind : kAllTaskKinds) {
        const SyntheticTask task = make_synthetic_task(SyntheticTaskOptions{kind});
        INFO(task_name(kind));
        CHECK(task.vocab.size() == 32);
        CHECK(task.prompts.size() == 16);
        CHECK(task.sft_examples.size() == 48);
        const RewardConfig cfg = task.reward_config();
        for (std::size_t i = 0; i < task.prompts.size(); ++i) {
            CHECK_NOTHROW(validate_prompt(task.prompts[i]));
            REQUIRE(task.reference_answers[i].size() == task.horizon);
            const std::string text = task.vocab.detokenize(task.reference_answers[i]);
            const auto rec = score_candidate(task.prompts[i], Candidate{text, {}}, cfg);
            CHECK(rec.breakdown.format() == 1.0);
            CHECK(rec.breakdown.task_acc() == best_task_acc(task.prompts[i], cfg));
        }
    }
    CHECK(make_synthetic_task({}).prompts[3].query_text == make_synthetic_task({}).prompts[3].query_text);
}

TEST_CASE("vocabulary") {
    const auto task = small_task(TaskKind::VQA);
    CHECK(task.vocab.surfaces[0].empty());
    CHECK(task.vocab.find("<think>") == std::optional<std::size_t>(1));
    CHECK_FALSE(task.vocab.find("nope"));
    const std::vector<std::size_t> bad = {1, 99};
    CHECK_THROWS_AS(task.vocab.detokenize(bad), Error);
}

TEST_CASE("SFT loss of the uniform policy") {
    const auto task = make_synthetic_task({});
    const ToyPolicy uniform(task.prompts.size(), task.horizon, task.vocab.size(), 0.9);
    const auto l = sft_loss_and_grad(uniform, task.sft_examples);
    CHECK(std::abs(l.loss - 12.0 * std::log(32.0)) <= 1e-9);
}

TEST_CASE("SFT gradient matches finite differences") {
    const auto task = small_task(TaskKind::Grounding, 3);
    ToyPolicy p = init_policy(task, 0.9, 1.0, 5);
    const auto analytic = sft_loss_and_grad(p, task.sft_examples).gradient;
    const auto fd = oracle::finite_difference(p.parameters(), [&] { return sft_loss_and_grad(p, task.sft_examples).loss; });
    CHECK(oracle::relative_error(analytic, fd) <= 1e-4);
}

TEST_CASE("SFT loss of a peaked policy obeys the softmax tail bound") {
    const auto task = small_task(TaskKind::VQA);
    const auto ex = reference_examples(task);
    for (double margin : {10.0, 16.0}) {
        const double loss = sft_loss_and_grad(peaked_on_references(task, margin, 1.0), ex).loss;
        const double bound = static_cast<double>(task.horizon) * 31.0 * std::exp(-margin);
        CHECK(loss <= bound * (1 + 1e-9));
        CHECK(loss > 0.0);
    }
    CHECK(sft_loss_and_grad(peaked_on_references(task, 16.0, 1.0), ex).loss <= 1e-3);
}

TEST_CASE("SFT input errors") {
    const auto task = small_task(TaskKind::VQA);
    const ToyPolicy p(task.prompts.size(), task.horizon, task.vocab.size());
    const std::vector<SftExample> oov = {{0, {1, 2, 40}}};
    try {
        sft_loss_and_grad(p, oov);
        FAIL("expected TokenOutOfVocabulary");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TokenOutOfVocabulary);
    }
    const std::vector<SftExample> too_long = {{0, TokenSequence(task.horizon + 1, 0)}};
    CHECK_THROWS_AS(sft_loss_and_grad(p, too_long), Error);
}

TEST_CASE("train_sft") {
    const auto task = make_synthetic_task({});
    SUBCASE("zero iterations leave the policy unchanged") {
        ToyPolicy p = init_policy(task, 0.9, 0.01, 1);
        const ToyPolicy before = p;
        const auto r = train_sft(p, task, 0, 1.0);
        CHECK(r.iterations.empty());
        CHECK(p == before);
    }
    SUBCASE("zero learning rate keeps the loss constant") {
        ToyPolicy p = init_policy(task, 0.9, 0.01, 1);
        const auto r = train_sft(p, task, 20, 0.0);
        for (const auto& it : r.iterations) CHECK(it.loss == r.iterations.front().loss);
    }
    SUBCASE("loss is non-increasing across 50-iteration windows") {
        ToyPolicy p = init_policy(task, 0.9, 0.01, 1);
        const auto r = train_sft(p, task, 300, 16.0);
        REQUIRE(r.iterations.size() == 300);
        for (std::size_t i = 0; i + 50 < r.iterations.size(); ++i) {
            CHECK(r.iterations[i + 50].loss <= r.iterations[i].loss + 1e-12);
        }
        CHECK(r.iterations.front().loss == doctest::Approx(41.58).epsilon(1e-3));
        CHECK(r.iterations.back().loss < 1.0);
    }
    SUBCASE("single-prompt task at a small learning rate") {
        SyntheticTaskOptions o;
        o.num_prompts = 1;
        o.demos_per_prompt = 1;
        const auto one = make_synthetic_task(o);
        ToyPolicy p = init_policy(one, 0.9, 0.01, 1);
        const auto r = train_sft(p, one, 500, 0.5);
        CHECK(r.iterations.back().loss < 1.0);
    }
    SUBCASE("non-finite loss is reported with its iteration") {
        ToyPolicy p = init_policy(task, 0.9, 0.01, 1);
        p.parameters()[0] = std::numeric_limits<double>::quiet_NaN();
        try {
            train_sft(p, task, 5, 1.0);
            FAIL("expected NumericalFailure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NumericalFailure);
            CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
        }
    }
}

TEST_CASE("sample_group") {
    const auto task = small_task(TaskKind::Classification);
    const ToyPolicy p = init_policy(task, 0.9, 1.0, 2);
    const auto a = sample_group(p, task, 1, 8, 42);
    const auto b = sample_group(p, task, 1, 8, 42);
    REQUIRE(a.group.candidates.size() == 8);
    CHECK(a.tokens == b.tokens);
    for (std::size_t i = 0; i < 8; ++i) {
        REQUIRE(a.group.candidates[i].logprob_old);
        CHECK(std::isfinite(*a.group.candidates[i].logprob_old));
        CHECK(std::abs(*a.group.candidates[i].logprob_old - p.sequence_logprob(1, a.tokens[i])) <= 1e-9);
        CHECK(a.group.candidates[i].raw_response == task.vocab.detokenize(a.tokens[i]));
    }
    CHECK(sample_group(p, task, 1, 8, 43).tokens != a.tokens);
}

TEST_CASE("evaluate") {
    const auto task = make_synthetic_task({});
    const auto cfg = task.reward_config();
    const ToyPolicy uniform(task.prompts.size(), task.horizon, task.vocab.size());
    CHECK(evaluate(uniform, task, cfg).mean_format == 0.0);
    const auto perfect = evaluate(peaked_on_references(task, 10.0, 0.9), task, cfg);
    CHECK(perfect.mean_total == 2.0);
    CHECK(perfect.per_task_total.at("vqa") == 2.0);
    const ToyPolicy r = init_policy(task, 0.9, 1.0, 3);
    CHECK(evaluate(r, task, cfg, 1).mean_total == evaluate(r, task, cfg, 1).mean_total);
}

TEST_CASE("train_grpo") {
    SyntheticTaskOptions o;
    o.num_prompts = 6;
    const auto task = make_synthetic_task(o);
    ToyPolicy sft = init_policy(task, 0.9, 0.01, 1);
    train_sft(sft, task, 200, 16.0);

    SUBCASE("constant reward without KL leaves parameters unchanged") {
        ToyPolicy p = sft;
        GrpoConfig cfg;
        cfg.kl_beta = 0.0;
        GrpoTrainOptions opt;
        opt.iters = 20;
        opt.reward_hook = [](const Prompt&, const Candidate&) { return 0.7; };
        const auto r = train_grpo(p, task, cfg, task.reward_config(), opt);
        for (std::size_t k = 0; k < p.parameter_count(); ++k) {
            CHECK(std::abs(p.parameters()[k] - sft.parameters()[k]) <= 1e-9);
        }
        for (const auto& it : r.iterations) CHECK(it.mean_adv_std == 0.0);
    }
    SUBCASE("a dominant KL keeps the policy near the reference") {
        GrpoTrainOptions opt;
        opt.iters = 40;
        opt.lr = 2.0;
        GrpoConfig weak, strong;
        strong.kl_beta = 10.0;
        ToyPolicy a = sft, b = sft;
        const auto rw = train_grpo(a, task, weak, task.reward_config(), opt);
        const auto rs = train_grpo(b, task, strong, task.reward_config(), opt);
        CHECK(rs.iterations.back().kl < rw.iterations.back().kl);
    }
    SUBCASE("series lengths and determinism") {
        GrpoTrainOptions opt;
        opt.iters = 15;
        opt.seed = 9;
        ToyPolicy a = sft, b = sft;
        const auto ra = train_grpo(a, task, GrpoConfig{}, task.reward_config(), opt);
        const auto rb = train_grpo(b, task, GrpoConfig{}, task.reward_config(), opt);
        CHECK(ra.iterations.size() == 15);
        CHECK(ra.iterations == rb.iterations);
        CHECK(a == b);
        CHECK(ra.stage == "grpo");
    }
    SUBCASE("non-finite policy is a numerical failure") {
        ToyPolicy p = sft;
        p.parameters()[3] = std::numeric_limits<double>::infinity();
        try {
            train_grpo(p, task, GrpoConfig{}, task.reward_config(), GrpoTrainOptions{});
            FAIL("expected NumericalFailure");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NumericalFailure);
        }
    }
}

TEST_CASE("the hybrid grounding reward never loses on detection") {
    SyntheticTaskOptions o;
    o.kind = TaskKind::Grounding;
    o.num_prompts = 8;
    const auto task = make_synthetic_task(o);
    ToyPolicy sft = init_policy(task, 0.9, 0.01, 1);
    train_sft(sft, task, 300, 16.0);

    RewardConfig hybrid = task.reward_config();
    RewardConfig lexical = hybrid;
    lexical.grounding_reward = GroundingReward::LexicalOnly;
    for (std::uint64_t seed : {1, 2, 3}) {
        GrpoTrainOptions opt;
        opt.iters = 100;
        opt.lr = 8.0;
        opt.seed = seed;
        ToyPolicy a = sft, b = sft;
        train_grpo(a, task, GrpoConfig{}, hybrid, opt);
        train_grpo(b, task, GrpoConfig{}, lexical, opt);
        const double det_hybrid = evaluate(a, task, hybrid).component_means.at("detection");
        const double det_lexical = evaluate(b, task, hybrid).component_means.at("detection");
        CHECK(det_hybrid >= det_lexical);
    }
}
