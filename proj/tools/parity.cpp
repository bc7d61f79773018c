#include "parity.hpp"

#include <cmath>
#include <random>
#include <set>

#include "grl/error.hpp"
#include "grl/grpo.hpp"
#include "grl/records.hpp"
#include "grl/toy_lab.hpp"
#include "json.hpp"

namespace grl::cli {
namespace {

using nlohmann::json;

constexpr std::size_t kGroupSize = 4;

RewardConfig offline_config(const std::set<std::string>& labels) {
    RewardConfig rc;
    rc.label_vocabulary = labels;
    return rc;
}

json advantages_json(const GroupAdvantages& g) {
    return {{"mean", g.mean}, {"std", g.std}, {"advantages", g.advantages}, {"degenerate", g.degenerate}};
}

std::vector<std::string> score_lines(const CandidateGroup& group, const RewardConfig& rc) {
    std::vector<std::string> out;
    for (const auto& rec : score_group(group, rc)) out.push_back(encode_score_record(rec));
    return out;
}

} // namespace

std::vector<std::string> make_parity_corpus(std::size_t groups_per_task, std::size_t advantage_cases) {
    std::vector<std::string> corpus;
    std::size_t case_id = 0;

    for (TaskKind kind : kAllTaskKinds) {
        std::size_t made = 0;
        for (std::uint64_t task_seed = 11; made < groups_per_task; ++task_seed) {
            SyntheticTaskOptions opts;
            opts.kind = kind;
            opts.seed = task_seed;
            const SyntheticTask task = make_synthetic_task(opts);
            const ToyPolicy policy = init_policy(task, 1.0, 2.0, derive_seed(task_seed, 5));
            for (std::size_t p = 0; p < task.prompts.size() && made < groups_per_task; ++p, ++made) {
                SampledGroup sg = sample_group(policy, task, p, kGroupSize, derive_seed(task_seed, p));
                CandidateGroup group = sg.group;
                group.candidates.front().raw_response = task.vocab.detokenize(task.reference_answers[p]);
                for (auto& c : group.candidates) c.logprob_old.reset();

                json j = {{"case", case_id++},
                          {"type", "score"},
                          {"label_vocabulary", task.label_vocabulary},
                          {"request", json::parse(encode_score_request(group))}};
                json recs = json::array();
                for (const auto& line : score_lines(group, offline_config(task.label_vocabulary))) {
                    recs.push_back(json::parse(line));
                }
                j["records"] = std::move(recs);
                corpus.push_back(j.dump());
            }
        }
    }

    for (std::size_t i = 0; i < advantage_cases; ++i) {
        const std::size_t k = 2 + i % 7;
        std::vector<double> rewards(k);
        std::mt19937_64 rng(derive_seed(1000, i));
        for (std::size_t t = 0; t < k; ++t) {
            const double u = uniform01(rng);
            rewards[t] = (i % 5 == 0) ? 1.0 : std::round(u * 2000.0) / 1000.0;
        }
        const GroupAdvantages g = group_advantages(rewards);
        json j = {{"case", case_id++}, {"type", "advantages"}, {"rewards", rewards}, {"result", advantages_json(g)}};
        corpus.push_back(j.dump());
    }
    return corpus;
}

std::optional<std::string> check_parity_case(std::string_view line) {
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "score") {
        const CandidateGroup group = parse_score_request(j.at("request").dump());
        const auto labels = j.at("label_vocabulary").get<std::set<std::string>>();
        const auto native = score_lines(group, offline_config(labels));
        const json& expected = j.at("records");
        if (expected.size() != native.size()) return "record count differs";
        for (std::size_t i = 0; i < native.size(); ++i) {
            const json got = json::parse(native[i]);
            if (got != expected[i]) {
                return "candidate " + std::to_string(i) + ": expected " + expected[i].dump() + ", got " + got.dump();
            }
        }
        return std::nullopt;
    }
    if (type == "advantages") {
        const auto rewards = j.at("rewards").get<std::vector<double>>();
        const json got = advantages_json(group_advantages(rewards));
        if (got != j.at("result")) return "expected " + j.at("result").dump() + ", got " + got.dump();
        return std::nullopt;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown parity case type '" + type + "'");
}

} // namespace grl::cli
