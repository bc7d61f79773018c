#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "grl/format_parser.hpp"
#include "grl/text_metrics.hpp"

namespace grl::cli {
namespace {

template <class T>
T parse_number(std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::InvalidArgument, "'" + std::string(v) + "' is not a valid number");
    }
    return out;
}

bool parse_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorCode::InvalidArgument, "'" + std::string(v) + "' is not a boolean");
}

template <class E>
E parse_enum(std::string_view v, std::initializer_list<std::pair<std::string_view, E>> table) {
    for (const auto& [name, value] : table) {
        if (name == v) return value;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown value '" + std::string(v) + "'");
}

using Setter = std::function<void(RunConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"task", [](RunConfig& c, std::string_view v) { c.task.kind = parse_task(v); }},
        {"seed", [](RunConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>(v); }},
        {"task_seed", [](RunConfig& c, std::string_view v) { c.task.seed = parse_number<std::uint64_t>(v); }},
        {"num_prompts", [](RunConfig& c, std::string_view v) { c.task.num_prompts = parse_number<std::size_t>(v); }},
        {"horizon", [](RunConfig& c, std::string_view v) { c.task.horizon = parse_number<std::size_t>(v); }},
        {"vocab_size", [](RunConfig& c, std::string_view v) { c.task.vocab_size = parse_number<std::size_t>(v); }},
        {"demos_per_prompt", [](RunConfig& c, std::string_view v) { c.task.demos_per_prompt = parse_number<std::size_t>(v); }},
        {"correct_demos", [](RunConfig& c, std::string_view v) { c.task.correct_demos = parse_number<std::size_t>(v); }},
        {"init_scale", [](RunConfig& c, std::string_view v) { c.init_scale = parse_number<double>(v); }},
        {"sft_iters", [](RunConfig& c, std::string_view v) { c.sft_iters = parse_number<std::size_t>(v); }},
        {"sft_lr", [](RunConfig& c, std::string_view v) { c.sft_lr = parse_number<double>(v); }},
        {"grpo_iters", [](RunConfig& c, std::string_view v) { c.grpo_iters = parse_number<std::size_t>(v); }},
        {"grpo_lr", [](RunConfig& c, std::string_view v) { c.grpo_lr = parse_number<double>(v); }},
        {"clip_eps", [](RunConfig& c, std::string_view v) { c.grpo.clip_eps = parse_number<double>(v); }},
        {"kl_beta", [](RunConfig& c, std::string_view v) { c.grpo.kl_beta = parse_number<double>(v); }},
        {"group_size", [](RunConfig& c, std::string_view v) { c.grpo.group_size = parse_number<std::size_t>(v); }},
        {"std_floor", [](RunConfig& c, std::string_view v) { c.grpo.std_floor = parse_number<double>(v); }},
        {"temperature", [](RunConfig& c, std::string_view v) { c.grpo.temperature = parse_number<double>(v); }},
        {"kl_mode", [](RunConfig& c, std::string_view v) {
             c.grpo.kl_mode = parse_enum<KlMode>(v, {{"exact", KlMode::Exact}, {"sampled_k3", KlMode::SampledK3}});
         }},
        {"alpha", [](RunConfig& c, std::string_view v) { c.lexical_weights.alpha = parse_number<double>(v); }},
        {"beta_lex", [](RunConfig& c, std::string_view v) { c.lexical_weights.beta_lex = parse_number<double>(v); }},
        {"gamma", [](RunConfig& c, std::string_view v) { c.lexical_weights.gamma = parse_number<double>(v); }},
        {"detection_mode", [](RunConfig& c, std::string_view v) {
             c.detection_mode = parse_enum<DetectionMode>(v, {{"rbb", DetectionMode::RBB}, {"hbb", DetectionMode::HBB}});
         }},
        {"hbb_conversion", [](RunConfig& c, std::string_view v) {
             c.hbb_conversion = parse_enum<HbbConversion>(
                 v, {{"zero_angle", HbbConversion::ZeroAngle}, {"enclosing", HbbConversion::Enclosing}});
         }},
        {"grounding_reward", [](RunConfig& c, std::string_view v) {
             c.grounding_reward = parse_enum<GroundingReward>(
                 v, {{"lmgr", GroundingReward::Lmgr},
                     {"lexical_only", GroundingReward::LexicalOnly},
                     {"detection_only", GroundingReward::DetectionOnly}});
         }},
        {"label_vocabulary", [](RunConfig& c, std::string_view v) {
             c.label_vocabulary.clear();
             std::size_t start = 0;
             while (start <= v.size()) {
                 std::size_t comma = v.find(',', start);
                 if (comma == std::string_view::npos) comma = v.size();
                 const std::string label = normalize_label(v.substr(start, comma - start));
                 if (!label.empty()) c.label_vocabulary.insert(label);
                 start = comma + 1;
             }
         }},
        {"format_ordering_required", [](RunConfig& c, std::string_view v) { c.format_ordering_required = parse_bool(v); }},
        {"embed_endpoint", [](RunConfig& c, std::string_view v) { c.embed_endpoint = std::string(v); }},
        {"hash_dim", [](RunConfig& c, std::string_view v) { c.hash_dim = parse_number<std::size_t>(v); }},
        {"embed_retries", [](RunConfig& c, std::string_view v) { c.embed_retries = parse_number<int>(v); }},
        {"report_path", [](RunConfig& c, std::string_view v) { c.report_path = std::string(v); }},
        {"checkpoint_path", [](RunConfig& c, std::string_view v) { c.checkpoint_path = std::string(v); }},
    };
    return table;
}

} // namespace

RunConfig parse_run_config(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::string where = "config line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::InvalidArgument, where + "expected 'key = value'");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw Error(ErrorCode::InvalidArgument, where + "unknown key '" + std::string(key) + "'");
        }
        try {
            it->second(cfg, value);
        } catch (const Error& e) {
            throw Error(ErrorCode::InvalidArgument, where + std::string(key) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

} // namespace grl::cli
