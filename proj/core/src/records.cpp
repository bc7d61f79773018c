#include "grl/records.hpp"

#include <cmath>
#include <map>

#include <json.hpp>

namespace grl {

using nlohmann::json;

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, "field '" + field + "': " + why);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) bad_field(path + key, "missing");
    return *it;
}

std::string require_string(const json& obj, const std::string& key, const std::string& path = "") {
    const json& v = require(obj, key, path);
    if (!v.is_string()) bad_field(path + key, "expected a string");
    return v.get<std::string>();
}

double require_number(const json& obj, const std::string& key, const std::string& path = "") {
    const json& v = require(obj, key, path);
    if (!v.is_number()) bad_field(path + key, "expected a number");
    return v.get<double>();
}

RotatedBox box_from_json(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 5) bad_field(path, "box must be [cx, cy, w, h, angle_deg]");
    double f[5];
    for (std::size_t i = 0; i < 5; ++i) {
        if (!v[i].is_number()) bad_field(path, "box entries must be numbers");
        f[i] = v[i].get<double>();
        if (!std::isfinite(f[i])) bad_field(path, "box entries must be finite");
    }
    if (!(f[2] > 0.0) || !(f[3] > 0.0)) bad_field(path, "box extents must be positive");
    return RotatedBox{f[0], f[1], f[2], f[3], f[4]};
}

json box_to_json(const RotatedBox& b) { return json::array({b.cx, b.cy, b.w, b.h, b.angle_deg}); }

std::vector<RotatedBox> boxes_from_json(const json& gt) {
    const json& arr = require(gt, "boxes", "ground_truth.");
    if (!arr.is_array()) bad_field("ground_truth.boxes", "expected an array");
    std::vector<RotatedBox> boxes;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        boxes.push_back(box_from_json(arr[i], "ground_truth.boxes[" + std::to_string(i) + "]"));
    }
    return boxes;
}

GroundTruth ground_truth_from_json(const json& gt) {
    if (!gt.is_object()) bad_field("ground_truth", "expected an object");
    const std::string kind = require_string(gt, "kind", "ground_truth.");
    if (kind == "label_set") {
        const json& arr = require(gt, "labels", "ground_truth.");
        if (!arr.is_array()) bad_field("ground_truth.labels", "expected an array");
        LabelSet ls;
        for (const auto& l : arr) {
            if (!l.is_string()) bad_field("ground_truth.labels", "labels must be strings");
            ls.labels.insert(l.get<std::string>());
        }
        return ls;
    }
    if (kind == "text") return TextTruth{require_string(gt, "text", "ground_truth.")};
    if (kind == "boxes") return BoxesTruth{boxes_from_json(gt)};
    if (kind == "boxes_with_text") {
        return BoxesWithText{boxes_from_json(gt), require_string(gt, "text", "ground_truth.")};
    }
    bad_field("ground_truth.kind", "unknown kind '" + kind + "'");
}

json ground_truth_to_json(const GroundTruth& gt) {
    json out;
    out["kind"] = std::string(ground_truth_kind_name(ground_truth_kind(gt)));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LabelSet>) {
                out["labels"] = std::vector<std::string>(v.labels.begin(), v.labels.end());
            } else if constexpr (std::is_same_v<T, TextTruth>) {
                out["text"] = v.text;
            } else {
                json arr = json::array();
                for (const auto& b : v.boxes) arr.push_back(box_to_json(b));
                out["boxes"] = arr;
                if constexpr (std::is_same_v<T, BoxesWithText>) out["text"] = v.text;
            }
        },
        gt);
    return out;
}

json parse_object(std::string_view line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "not valid JSON");
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "record is not a JSON object");
    return j;
}

json eval_to_json(const EvalReport& e) {
    return json{{"mean_total", e.mean_total},
                {"mean_format", e.mean_format},
                {"mean_task_acc", e.mean_task_acc},
                {"components", e.component_means},
                {"per_task_total", e.per_task_total}};
}

EvalReport eval_from_json(const json& j) {
    EvalReport e;
    e.mean_total = require_number(j, "mean_total");
    e.mean_format = require_number(j, "mean_format");
    e.mean_task_acc = require_number(j, "mean_task_acc");
    e.component_means = j.value("components", std::map<std::string, double>{});
    e.per_task_total = j.value("per_task_total", std::map<std::string, double>{});
    return e;
}

} // namespace

CandidateGroup parse_score_request(std::string_view line) {
    const json j = parse_object(line);
    CandidateGroup g;
    g.prompt.id = require_string(j, "prompt_id");
    const std::string task = require_string(j, "task");
    try {
        g.prompt.task = parse_task(task);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidArgument) bad_field("task", e.detail());
        throw;
    }
    g.prompt.query_text = j.contains("query") ? require_string(j, "query") : std::string();
    if (j.contains("image_ref") && !j["image_ref"].is_null()) {
        g.prompt.image_ref = require_string(j, "image_ref");
    }
    g.prompt.ground_truth = ground_truth_from_json(require(j, "ground_truth", ""));
    const json& cands = require(j, "candidates", "");
    if (!cands.is_array()) bad_field("candidates", "expected an array");
    for (const auto& c : cands) {
        if (!c.is_string()) bad_field("candidates", "candidates must be strings");
        g.candidates.push_back(Candidate{c.get<std::string>(), std::nullopt});
    }
    return g;
}

std::string encode_score_request(const CandidateGroup& group) {
    json j;
    j["prompt_id"] = group.prompt.id;
    j["task"] = std::string(task_name(group.prompt.task));
    j["query"] = group.prompt.query_text;
    if (group.prompt.image_ref) j["image_ref"] = *group.prompt.image_ref;
    j["ground_truth"] = ground_truth_to_json(group.prompt.ground_truth);
    json cands = json::array();
    for (const auto& c : group.candidates) cands.push_back(c.raw_response);
    j["candidates"] = cands;
    return j.dump();
}

std::string encode_score_record(const ScoreRecord& rec) {
    json j;
    j["prompt_id"] = rec.prompt_id;
    j["candidate_index"] = rec.candidate_index;
    j["format"] = rec.breakdown.format();
    j["task_acc"] = rec.breakdown.task_acc();
    j["total"] = rec.breakdown.total();
    j["components"] = rec.breakdown.components();
    j["well_formed"] = rec.parsed.well_formed;
    j["provider"] = rec.provider_name;
    return j.dump();
}

std::vector<std::string> annotate_advantages(std::span<const std::string> lines, double std_floor) {
    std::vector<json> records;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        try {
            json j = parse_object(lines[i]);
            const std::string id = require_string(j, "prompt_id");
            const char* key = j.contains("total") ? "total" : "reward";
            const double r = require_number(j, key);
            if (!std::isfinite(r)) bad_field(key, "reward is not finite");
            if (!groups.count(id)) order.push_back(id);
            groups[id].push_back(records.size());
            records.push_back(std::move(j));
        } catch (const Error& e) {
            throw Error(e.code(), where + e.detail());
        }
    }
    for (const auto& id : order) {
        const auto& members = groups[id];
        std::vector<double> rewards;
        for (std::size_t m : members) {
            const json& j = records[m];
            rewards.push_back(j.contains("total") ? j["total"].get<double>() : j["reward"].get<double>());
        }
        if (rewards.size() < 2) {
            throw Error(ErrorCode::GroupTooSmall, "group '" + id + "' has K = " +
                                                      std::to_string(rewards.size()) + " < 2");
        }
        const GroupAdvantages adv = group_advantages(rewards, std_floor);
        for (std::size_t k = 0; k < members.size(); ++k) {
            json& j = records[members[k]];
            j["mean"] = adv.mean;
            j["std"] = adv.std;
            j["advantage"] = adv.advantages[k];
            j["degenerate"] = adv.degenerate;
        }
    }
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& j : records) out.push_back(j.dump());
    return out;
}

std::vector<std::string> encode_train_report(const TrainReport& report) {
    std::vector<std::string> out;
    for (const auto& it : report.iterations) {
        json j{{"type", "iteration"},       {"stage", report.stage},
               {"iteration", it.iteration}, {"loss", it.loss},
               {"mean_reward", it.mean_reward}, {"mean_format", it.mean_format},
               {"mean_task_acc", it.mean_task_acc}, {"mean_adv_std", it.mean_adv_std},
               {"kl", it.kl},               {"objective", it.objective}};
        out.push_back(j.dump());
    }
    json s{{"type", "summary"},
           {"stage", report.stage},
           {"iterations", report.iterations.size()},
           {"initial_eval", eval_to_json(report.initial_eval)},
           {"final_eval", eval_to_json(report.final_eval)}};
    out.push_back(s.dump());
    return out;
}

std::vector<TrainReport> decode_train_reports(std::span<const std::string> lines) {
    std::vector<TrainReport> reports;
    std::map<std::string, std::size_t> open;
    auto report_for = [&](const std::string& stage) -> TrainReport& {
        auto it = open.find(stage);
        if (it == open.end()) {
            reports.push_back(TrainReport{stage, {}, {}, {}});
            it = open.emplace(stage, reports.size() - 1).first;
        }
        return reports[it->second];
    };
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = parse_object(lines[i]);
            const std::string type = require_string(j, "type");
            const std::string stage = require_string(j, "stage");
            TrainReport& r = report_for(stage);
            if (type == "iteration") {
                IterationStats st;
                st.iteration = static_cast<std::size_t>(require_number(j, "iteration"));
                st.loss = require_number(j, "loss");
                st.mean_reward = require_number(j, "mean_reward");
                st.mean_format = require_number(j, "mean_format");
                st.mean_task_acc = require_number(j, "mean_task_acc");
                st.mean_adv_std = require_number(j, "mean_adv_std");
                st.kl = require_number(j, "kl");
                st.objective = require_number(j, "objective");
                r.iterations.push_back(st);
            } else if (type == "summary") {
                r.initial_eval = eval_from_json(require(j, "initial_eval", ""));
                r.final_eval = eval_from_json(require(j, "final_eval", ""));
                open.erase(stage);
            } else {
                bad_field("type", "unknown record type '" + type + "'");
            }
        } catch (const Error& e) {
            throw Error(e.code(), "line " + std::to_string(i + 1) + ": " + e.detail());
        }
    }
    return reports;
}

std::string encode_policy(const ToyPolicy& policy) {
    json j;
    j["num_prompts"] = policy.num_prompts();
    j["horizon"] = policy.horizon();
    j["vocab_size"] = policy.vocab_size();
    j["temperature"] = policy.temperature();
    j["logits"] = std::vector<double>(policy.parameters().begin(), policy.parameters().end());
    return j.dump();
}

ToyPolicy decode_policy(std::string_view text) {
    const json j = parse_object(text);
    const auto n = static_cast<std::size_t>(require_number(j, "num_prompts"));
    const auto h = static_cast<std::size_t>(require_number(j, "horizon"));
    const auto v = static_cast<std::size_t>(require_number(j, "vocab_size"));
    ToyPolicy p(n, h, v, require_number(j, "temperature"));
    const json& logits = require(j, "logits", "");
    if (!logits.is_array() || logits.size() != p.parameter_count()) {
        bad_field("logits", "expected " + std::to_string(p.parameter_count()) + " numbers");
    }
    auto theta = p.parameters();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!logits[i].is_number()) bad_field("logits", "entries must be numbers");
        theta[i] = logits[i].get<double>();
    }
    return p;
}

} // namespace grl
