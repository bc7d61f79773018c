// Acceptance gate: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fuzz.hpp"
#include "grl/format_parser.hpp"
#include "grl/geometry.hpp"
#include "grl/grpo.hpp"
#include "grl/records.hpp"
#include "grl/reward_engine.hpp"
#include "grl/text_metrics.hpp"
#include "grl/toy_lab.hpp"
#include "oracles.hpp"
#include "run_config.hpp"
#include "training.hpp"

using namespace grl;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects failures; the first few are kept for the report line.
class Tally {
public:
    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) first_ += (first_.empty() ? "" : "; ") + what;
    }
    Outcome outcome(std::string summary) const {
        if (failures_ == 0) return {true, summary + " (" + std::to_string(checks_) + " checks)"};
        return {false, std::to_string(failures_) + "/" + std::to_string(checks_) + " checks failed: " + first_};
    }

private:
    std::size_t checks_ = 0, failures_ = 0;
    std::string first_;
};

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Outcome reward_bounds() {
    Tally t;
    RewardConfig cfg;
    cfg.label_vocabulary = std::set<std::string>(fuzz::labels().begin(), fuzz::labels().end());
    std::mt19937_64 rng(20240101);
    std::size_t exceptions = 0;
    for (int i = 0; i < 100000; ++i) {
        const TaskKind task = kAllTaskKinds[i % 7];
        const Prompt p{"p" + std::to_string(i), std::nullopt, "q", task, fuzz::random_ground_truth(task, rng)};
        std::string response;
        switch (fuzz::pick(rng, 3)) {
        case 0:
            response = fuzz::random_answer(rng);
            break;
        case 1:
            response = fuzz::random_response(rng);
            break;
        default:
            response = "<think>t</think><answer>" + fuzz::related_answer(p.ground_truth, rng) + "</answer>";
        }
        try {
            const auto rec = score_candidate(p, Candidate{response, {}}, cfg);
            const double acc = rec.breakdown.task_acc(), total = rec.breakdown.total();
            t.expect(acc >= 0.0 && acc <= 1.0, std::string(task_name(task)) + " task_acc " + num(acc));
            t.expect(total >= 0.0 && total <= 2.0, std::string(task_name(task)) + " total " + num(total));
        } catch (const std::exception& e) {
            ++exceptions;
            t.expect(false, std::string("exception: ") + e.what());
        }
    }
    return t.outcome("100000 triples over 7 tasks, 0 exceptions");
}

Outcome format_exactness() {
    enum class Span { Absent, Complete, Unterminated, CloseOnly, Duplicated };
    const Span spans[] = {Span::Absent, Span::Complete, Span::Unterminated, Span::CloseOnly, Span::Duplicated};
    auto render = [](Span s, const std::string& tag, const std::string& body) {
        const std::string open = "<" + tag + ">", close = "</" + tag + ">";
        switch (s) {
        case Span::Absent:
            return std::string();
        case Span::Complete:
            return open + body + close;
        case Span::Unterminated:
            return open + body;
        case Span::CloseOnly:
            return body + close;
        case Span::Duplicated:
            return open + body + close + open + body + close;
        }
        return std::string();
    };
    Tally t;
    std::size_t cases = 0;
    for (Span think : spans) {
        for (Span answer : spans) {
            for (bool think_first : {true, false}) {
                for (const char* tail : {"", " trailing text"}) {
                    const std::string th = render(think, "think", "reason"), an = render(answer, "answer", "yes");
                    const std::string s = (think_first ? th + an : an + th) + tail;
                    for (bool ordering : {true, false}) {
                        const bool expected = think == Span::Complete && answer == Span::Complete &&
                                              (think_first || !ordering);
                        const auto parsed = parse_response(s, FormatOptions{ordering});
                        const double reward = format_reward(parsed);
                        t.expect(reward == (expected ? 1.0 : 0.0), "'" + s + "'");
                        t.expect(parsed.well_formed == oracle::tags_well_formed(s, ordering), "regex '" + s + "'");
                        ++cases;
                    }
                }
            }
        }
    }
    return t.outcome(std::to_string(cases) + " tag combinations");
}

Outcome text_metric_oracles() {
    Tally t;
    std::vector<std::string> strings{""};
    for (std::size_t len = 1, start = 0; len <= 4; ++len) {
        const std::size_t end = strings.size();
        for (std::size_t i = start; i < end; ++i) {
            for (char c : std::string("abc")) strings.push_back(strings[i] + c);
        }
        start = end;
    }
    for (const auto& a : strings) {
        for (const auto& b : strings) {
            t.expect(levenshtein_ratio(a, b) == oracle::levenshtein_ratio(a, b), "levenshtein '" + a + "','" + b + "'");
        }
    }

    std::mt19937_64 rng(7);
    const std::vector<std::string> alpha = {"a", "b", "c", "d"};
    for (int i = 0; i < 20000; ++i) {
        const std::size_t total = fuzz::pick(rng, 13);
        const std::size_t na = fuzz::pick(rng, total + 1);
        TokenSeq a, b;
        for (std::size_t k = 0; k < na; ++k) a.tokens.push_back(alpha[fuzz::pick(rng, 4)]);
        for (std::size_t k = na; k < total; ++k) b.tokens.push_back(alpha[fuzz::pick(rng, 4)]);
        t.expect(lcs_length(a, b) == oracle::lcs_bruteforce(a.tokens, b.tokens), "lcs");
    }

    auto seq = [](std::initializer_list<const char*> xs) {
        TokenSeq s;
        for (const char* x : xs) s.tokens.emplace_back(x);
        return s;
    };
    t.expect(std::abs(meteor(seq({"a", "b", "c"}), seq({"a", "b", "c"})) - (1.0 - 0.5 / 27.0)) <= 1e-12,
             "meteor identical");
    t.expect(std::abs(meteor(seq({"a", "b"}), seq({"b", "a"})) - 0.5) <= 1e-12, "meteor reversed pair");
    t.expect(std::abs(meteor(seq({"a", "b"}), seq({"c", "d"}))) <= 1e-12, "meteor zero match");
    return t.outcome(std::to_string(strings.size() * strings.size()) + " string pairs, 20000 LCS cases, 3 METEOR cases");
}

Outcome geometry_oracle() {
    Tally t;
    t.expect(std::abs(iou({100, 100, 30, 20, 17}, {100, 100, 30, 20, 17}) - 1.0) <= 1e-9, "identical");
    t.expect(std::abs(iou({10, 10, 1, 1, 0}, {10.5, 10, 1, 1, 0}) - 1.0 / 3.0) <= 1e-9, "offset unit squares");
    const double rotated = iou({10, 10, 1, 1, 0}, {10, 10, 1, 1, 45});
    const auto mc45 = oracle::monte_carlo_iou({10, 10, 1, 1, 0}, {10, 10, 1, 1, 45}, 10'000'000, 1);
    t.expect(std::abs(rotated - mc45.iou) <= 1e-3, "45 degree square vs MC " + num(mc45.iou));
    t.expect(std::abs(rotated - 1.0 / std::sqrt(2.0)) <= 1e-9, "45 degree square analytic");

    std::mt19937_64 rng(99);
    double worst_z = 0.0;
    for (int i = 0; i < 100; ++i) {
        const RotatedBox a = fuzz::random_box(rng);
        RotatedBox b{a.cx + fuzz::uniform(rng, -0.6, 0.6) * a.w, a.cy + fuzz::uniform(rng, -0.6, 0.6) * a.h,
                     fuzz::uniform(rng, 0.3, 1.5) * a.w, fuzz::uniform(rng, 0.3, 1.5) * a.h,
                     fuzz::uniform(rng, -90, 90)};
        const double exact = iou(a, b);
        const auto mc = oracle::monte_carlo_iou(a, b, 10'000'000, 1000 + i);
        const double se = std::max(mc.standard_error, 1.0 / static_cast<double>(mc.union_hits));
        const double z = std::abs(exact - mc.iou) / se;
        worst_z = std::max(worst_z, z);
        t.expect(z <= 3.0, "pair " + std::to_string(i) + " z=" + num(z));
    }
    return t.outcome("100 pairs at 1e7 points, worst deviation " + fmt("%.3f", worst_z) + " SE");
}

Outcome advantage_properties() {
    Tally t;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> r(2 + fuzz::pick(rng, 63));
        for (double& x : r) x = fuzz::uniform(rng, 0.0, 2.0);
        const auto g = group_advantages(r);
        t.expect(!g.degenerate, "unexpected degenerate group");
        t.expect(std::abs(oracle::mean(g.advantages)) <= 1e-9, "mean");
        t.expect(std::abs(oracle::population_std(g.advantages) - 1.0) <= 1e-9, "std");

        const double shift = fuzz::uniform(rng, -10, 10), scale = fuzz::uniform(rng, 0.01, 100);
        std::vector<double> shifted = r, scaled = r;
        for (double& x : shifted) x += shift;
        for (double& x : scaled) x *= scale;
        const auto gs = group_advantages(shifted), gk = group_advantages(scaled);
        for (std::size_t k = 0; k < r.size(); ++k) {
            t.expect(std::abs(gs.advantages[k] - g.advantages[k]) <= 1e-9, "translation");
            t.expect(std::abs(gk.advantages[k] - g.advantages[k]) <= 1e-9, "scaling");
        }
    }
    return t.outcome("10000 groups, K in [2, 64]");
}

Outcome objective_checks() {
    Tally t;
    struct Row {
        double ratio, adv, expected;
    };
    const Row table[] = {{0.5, 1.0, 0.5}, {1.1, 1.0, 1.1}, {1.5, 1.0, 1.2},
                         {0.5, -1.0, -0.8}, {1.1, -1.0, -1.1}, {1.5, -1.0, -1.5}};
    for (const auto& row : table) {
        t.expect(clipped_term(row.ratio, row.adv, 0.2) == row.expected,
                 "clipped_term(" + num(row.ratio) + ", " + num(row.adv) + ")");
    }

    std::mt19937_64 rng(8);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 2 + fuzz::pick(rng, 30);
        std::vector<double> p(n), q(n);
        double sp = 0, sq = 0;
        for (std::size_t k = 0; k < n; ++k) {
            sp += (p[k] = fuzz::uniform(rng, 1e-3, 1.0));
            sq += (q[k] = fuzz::uniform(rng, 1e-3, 1.0));
        }
        for (std::size_t k = 0; k < n; ++k) {
            p[k] /= sp;
            q[k] /= sq;
        }
        t.expect(kl_penalty_exact(p, q) > 0.0, "KL(p||q) > 0");
        t.expect(kl_penalty_exact(p, p) == 0.0, "KL(p||p) == 0");
    }

    std::normal_distribution<double> normal(0.0, 1.0);
    int configs = 0;
    double worst = 0.0;
    while (configs < 100) {
        ToyPolicy policy(2, 3, 5, fuzz::uniform(rng, 0.5, 1.5));
        for (double& z : policy.parameters()) z = normal(rng);
        ToyPolicy old = policy, ref = policy;
        for (double& z : old.parameters()) z += 0.1 * normal(rng);
        for (double& z : ref.parameters()) z += 0.5 * normal(rng);
        GroupRollout ro;
        ro.prompt_index = fuzz::pick(rng, 2);
        for (std::size_t k = 0, n = 2 + fuzz::pick(rng, 7); k < n; ++k) {
            ro.responses.push_back(old.sample(ro.prompt_index, rng));
            ro.logprob_old.push_back(old.sequence_logprob(ro.prompt_index, ro.responses.back()));
            ro.advantages.push_back(normal(rng));
        }
        GrpoConfig cfg;
        cfg.kl_beta = fuzz::uniform(rng, 0.0, 1.0);
        cfg.kl_mode = configs % 2 ? KlMode::SampledK3 : KlMode::Exact;
        bool near_kink = false;
        for (const auto& e : evaluate_rollout(policy, ref, ro)) {
            const double r = policy_ratio(e);
            near_kink |= std::abs(r - 0.8) < 1e-3 || std::abs(r - 1.2) < 1e-3;
        }
        if (near_kink) continue;
        const auto analytic = grpo_gradient(policy, ref, ro, cfg);
        const auto fd = oracle::finite_difference(policy.parameters(),
                                                  [&] { return grpo_group_objective(policy, ref, ro, cfg); });
        const double err = oracle::relative_error(analytic, fd);
        worst = std::max(worst, err);
        t.expect(err <= 1e-4, "gradient rel. error " + num(err));
        ++configs;
    }
    return t.outcome("6 clip branches, 1000 KL pairs, 100 gradients (worst rel. error " + fmt("%.2e", worst) + ")");
}

Outcome sft_checks(const cli::RunConfig& bundled) {
    Tally t;
    const SyntheticTask task = make_synthetic_task(bundled.task);
    const ToyPolicy uniform(task.prompts.size(), task.horizon, task.vocab.size(), bundled.grpo.temperature);
    const double expected = static_cast<double>(task.horizon) * std::log(static_cast<double>(task.vocab.size()));
    const double uniform_loss = sft_loss_and_grad(uniform, task.sft_examples).loss;
    t.expect(std::abs(uniform_loss - expected) <= 1e-9, "uniform NLL " + num(uniform_loss));

    SyntheticTaskOptions small = bundled.task;
    small.num_prompts = 3;
    const SyntheticTask st = make_synthetic_task(small);
    ToyPolicy p = init_policy(st, 0.9, 1.0, 11);
    const auto analytic = sft_loss_and_grad(p, st.sft_examples).gradient;
    const auto fd = oracle::finite_difference(p.parameters(), [&] { return sft_loss_and_grad(p, st.sft_examples).loss; });
    const double err = oracle::relative_error(analytic, fd);
    t.expect(err <= 1e-4, "SFT gradient rel. error " + num(err));

    const auto start = std::chrono::steady_clock::now();
    ToyPolicy trained = cli::initial_policy(task, bundled, *bundled.seed);
    const TrainReport r = train_sft(trained, task, bundled.sft_iters, bundled.sft_lr);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.iterations.empty()) return {false, "bundled config runs no SFT iterations"};
    t.expect(bundled.sft_iters <= 500, "bundled config uses more than 500 SFT iterations");
    t.expect(std::abs(r.iterations.front().loss - 41.6) < 0.1, "start loss");
    t.expect(r.iterations.back().loss < 1.0, "final loss " + num(r.iterations.back().loss));
    t.expect(secs < 30.0, "SFT took " + num(secs) + " s");
    return t.outcome("uniform NLL " + fmt("%.6f", uniform_loss) + ", loss " + fmt("%.3f", r.iterations.front().loss) +
                     " -> " + fmt("%.4f", r.iterations.back().loss) + " in " + std::to_string(r.iterations.size()) +
                     " iterations");
}

// Held-out mean task_acc of the bundled VQA run, pinned from one oracle run.
constexpr double kPinnedFinalTaskAcc = 1.0;

Outcome grpo_end_to_end(const cli::RunConfig& bundled) {
    Tally t;
    const auto start = std::chrono::steady_clock::now();
    const auto provider = std::make_shared<HashEmbeddingProvider>(bundled.hash_dim);
    const auto a = cli::run_training(bundled, *bundled.seed, provider);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto b = cli::run_training(bundled, *bundled.seed, provider);

    const double baseline = a.random_init_eval.mean_task_acc;
    const double final_acc = a.grpo.final_eval.mean_task_acc;
    t.expect(bundled.task.kind == TaskKind::VQA, "bundled task is not VQA");
    t.expect(bundled.grpo.group_size == 8, "bundled K is not 8");
    t.expect(baseline <= 0.3, "random-init baseline " + num(baseline));
    t.expect(final_acc >= 0.9, "final task_acc " + num(final_acc));
    t.expect(final_acc == kPinnedFinalTaskAcc, "final task_acc " + num(final_acc) + " differs from pinned value");
    t.expect(encode_train_report(a.sft) == encode_train_report(b.sft), "SFT report differs on repeat");
    t.expect(encode_train_report(a.grpo) == encode_train_report(b.grpo), "GRPO report differs on repeat");
    t.expect(a.policy == b.policy, "policy differs on repeat");
    t.expect(secs < 300.0, "training took " + num(secs) + " s");
    return t.outcome("task_acc " + num(baseline) + " (random init) -> " + num(a.sft.final_eval.mean_task_acc) +
                     " (SFT) -> " + num(final_acc) + " (GRPO), " + fmt("%.2f", secs) + " s per run, repeat bit-identical");
}

Outcome hybrid_composition() {
    Tally t;
    RewardConfig cfg;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        cfg.lexical_weights = {fuzz::uniform(rng, 0, 1), fuzz::uniform(rng, 0, 1), fuzz::uniform(rng, 0, 1)};
        const auto g = std::get<BoxesWithText>(fuzz::random_ground_truth(TaskKind::Grounding, rng));
        const std::string ga = fuzz::pick(rng, 2) ? fuzz::related_answer(g, rng) : fuzz::random_answer(rng);
        const auto l = lmgr(ga, g, cfg);
        const auto& lc = l.components;
        const auto& w = cfg.lexical_weights;
        t.expect(l.value == (lc.at("lexical") + lc.at("detection")) / 2.0, "LMGR mean");
        t.expect(lc.at("lexical") == (w.alpha * lc.at("rouge1") + w.beta_lex * lc.at("rougeL") + w.gamma * lc.at("meteor")) / 3.0,
                 "LMGR lexical part");

        const auto c = std::get<TextTruth>(fuzz::random_ground_truth(TaskKind::ChangeDetectionCaption, rng));
        const std::string ca = fuzz::pick(rng, 2) ? fuzz::related_answer(c, rng) : fuzz::random_answer(rng);
        const auto h = hslr(ca, c.text, cfg);
        const auto& hc = h.components;
        t.expect(h.value == (hc.at("sbert_cos") + hc.at("lexical")) / 2.0, "HSLR mean");
        t.expect(hc.at("lexical") == (w.alpha * hc.at("rouge1") + w.beta_lex * hc.at("rougeL") + w.gamma * hc.at("meteor")) / 3.0,
                 "HSLR lexical part");
    }
    return t.outcome("1000 LMGR and 1000 HSLR cases");
}

Outcome hbb_ablation() {
    Tally t;
    std::mt19937_64 rng(1234);
    double mean_gain = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const RotatedBox gt = clamp_to_grid(fuzz::random_box(rng));
        RotatedBox pred = gt;
        pred.angle_deg = normalize_angle(gt.angle_deg + fuzz::uniform(rng, -5.0, 5.0));
        const std::vector<RotatedBox> p{pred}, g{gt};
        const double rbb = detection_reward(p, g), hbb = detection_reward_hbb(p, g);
        mean_gain += (hbb - rbb) / 1000.0;
        t.expect(hbb >= rbb, "pair " + std::to_string(i));
    }
    return t.outcome("1000 pairs, mean HBB - RBB gain " + fmt("%.4f", mean_gain));
}

} // namespace

int main() {
    const cli::RunConfig bundled = cli::load_run_config(GRL_BUNDLED_VQA_CONFIG);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"reward bounds fuzz", reward_bounds},
        {"format reward exactness", format_exactness},
        {"text-metric oracles", text_metric_oracles},
        {"rotated-box IoU oracle", geometry_oracle},
        {"group advantage properties", advantage_properties},
        {"clipped surrogate, KL and gradient", objective_checks},
        {"SFT objective and training", [&] { return sft_checks(bundled); }},
        {"end-to-end GRPO on VQA", [&] { return grpo_end_to_end(bundled); }},
        {"hybrid reward composition", hybrid_composition},
        {"HBB ablation property", hbb_ablation},
    };

    int failed = 0;
    for (const auto& [name, run] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s  %-36s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
