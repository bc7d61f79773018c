#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "grl/error.hpp"
#include "grl/records.hpp"
#include "grl/reward_engine.hpp"
#include "grl/toy_lab.hpp"
#include "json.hpp"
#include "run_config.hpp"
#include "training.hpp"

namespace grl::cli {
namespace {

using nlohmann::json;

struct Options {
    std::string config_path;
    std::string input_path;
    std::string output_path;
    std::optional<std::uint64_t> seed;
    bool offline = false;
    std::string embed_endpoint;
    std::size_t workers = 1;
    std::optional<double> std_floor;
};

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read input '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::out | std::ios::trunc);
            if (!file_) throw Error(ErrorCode::InvalidArgument, "cannot write output '" + path + "'");
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_;
};

RunConfig config_for(const Options& opt) {
    return opt.config_path.empty() ? RunConfig{} : load_run_config(opt.config_path);
}

std::shared_ptr<EmbeddingProvider> make_provider(const Options& opt, const RunConfig& cfg,
                                                 std::ostream& err) {
    if (opt.offline) return std::make_shared<HashEmbeddingProvider>(cfg.hash_dim);
    std::optional<std::string> endpoint;
    if (!opt.embed_endpoint.empty()) {
        endpoint = opt.embed_endpoint;
    } else if (cfg.embed_endpoint) {
        endpoint = cfg.embed_endpoint;
    } else {
        endpoint = embed_endpoint_from_env();
    }
    if (!endpoint) {
        err << "warning: no embedding endpoint configured; using offline hash embeddings\n";
        return std::make_shared<HashEmbeddingProvider>(cfg.hash_dim);
    }
    RemoteEmbeddingOptions remote;
    remote.endpoint = *endpoint;
    remote.max_retries = cfg.embed_retries;
    return std::make_shared<RemoteEmbeddingProvider>(remote);
}

Error at_line(std::size_t line_no, const Error& e) {
    return Error(e.code(), "line " + std::to_string(line_no) + ": " + e.detail());
}

int cmd_score(const Options& opt, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = config_for(opt);
    const RewardConfig rc = make_reward_config(SyntheticTask{}, cfg, make_provider(opt, cfg, err));

    const auto lines = read_lines(opt.input_path);
    std::vector<std::string> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        try {
            const CandidateGroup group = parse_score_request(lines[i]);
            validate_group(group);
            for (const auto& rec : score_group(group, rc, opt.workers)) {
                records.push_back(encode_score_record(rec));
            }
        } catch (const Error& e) {
            throw at_line(i + 1, e);
        }
    }
    Sink sink(opt.output_path, out);
    for (const auto& r : records) sink.stream() << r << '\n';
    return kExitOk;
}

int cmd_advantages(const Options& opt, std::ostream& out, std::ostream&) {
    const RunConfig cfg = config_for(opt);
    const double floor = opt.std_floor.value_or(cfg.grpo.std_floor);
    std::vector<std::string> lines;
    for (auto& l : read_lines(opt.input_path)) lines.push_back(std::move(l));
    const auto annotated = annotate_advantages(lines, floor);
    Sink sink(opt.output_path, out);
    for (const auto& r : annotated) sink.stream() << r << '\n';
    return kExitOk;
}

std::uint64_t require_seed(const Options& opt, const RunConfig& cfg) {
    if (opt.seed) return *opt.seed;
    if (cfg.seed) return *cfg.seed;
    throw Error(ErrorCode::InvalidArgument, "a seed is required (config key 'seed' or --seed)");
}

std::string fmt_real(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void print_eval(std::ostream& os, const char* label, const EvalReport& e) {
    os << label << ": total=" << fmt_real(e.mean_total) << " format=" << fmt_real(e.mean_format)
       << " task_acc=" << fmt_real(e.mean_task_acc) << '\n';
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& err) {
    if (opt.config_path.empty()) throw Error(ErrorCode::InvalidArgument, "train requires --config");
    const RunConfig cfg = load_run_config(opt.config_path);
    const std::uint64_t seed = require_seed(opt, cfg);
    const TrainingOutcome run = run_training(cfg, seed, make_provider(opt, cfg, err));
    const TrainReport& sft = run.sft;
    const TrainReport& grpo = run.grpo;

    std::string report_path = opt.output_path;
    if (report_path.empty() && cfg.report_path) report_path = *cfg.report_path;
    if (!report_path.empty()) {
        std::ofstream f(report_path, std::ios::out | std::ios::trunc);
        if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write report '" + report_path + "'");
        for (const auto* r : {&sft, &grpo}) {
            for (const auto& line : encode_train_report(*r)) f << line << '\n';
        }
    }
    if (cfg.checkpoint_path) {
        std::ofstream f(*cfg.checkpoint_path, std::ios::out | std::ios::trunc);
        if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write checkpoint '" + *cfg.checkpoint_path + "'");
        f << encode_policy(run.policy) << '\n';
    }

    if (!sft.iterations.empty()) {
        out << "sft: loss " << fmt_real(sft.iterations.front().loss) << " -> "
            << fmt_real(sft.iterations.back().loss) << " over " << sft.iterations.size()
            << " iterations\n";
    }
    print_eval(out, "after sft", sft.final_eval);
    print_eval(out, "final held-out reward", grpo.final_eval);
    return kExitOk;
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& err) {
    const RunConfig cfg = config_for(opt);
    const SyntheticTask task = make_synthetic_task(cfg.task);
    const RewardConfig rc = make_reward_config(task, cfg, make_provider(opt, cfg, err));

    ToyPolicy policy;
    std::string source;
    if (!opt.input_path.empty()) {
        std::ifstream in(opt.input_path);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read checkpoint '" + opt.input_path + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        policy = decode_policy(ss.str());
        if (policy.num_prompts() != task.prompts.size() || policy.horizon() != task.horizon ||
            policy.vocab_size() != task.vocab.size()) {
            throw Error(ErrorCode::DimensionMismatch, "checkpoint shape does not match the configured task");
        }
        source = "checkpoint";
    } else {
        const std::uint64_t seed = require_seed(opt, cfg);
        policy = initial_policy(task, cfg, seed);
        source = "random_init";
    }
    const EvalReport e = evaluate(policy, task, rc);
    json j = {{"type", "eval"},
              {"task", std::string(task_name(task.kind))},
              {"policy", source},
              {"mean_total", e.mean_total},
              {"mean_format", e.mean_format},
              {"mean_task_acc", e.mean_task_acc},
              {"components", e.component_means}};
    Sink sink(opt.output_path, out);
    sink.stream() << j.dump() << '\n';
    return kExitOk;
}

int cmd_report(const Options& opt, std::ostream& out, std::ostream&) {
    const auto lines = read_lines(opt.input_path);
    std::vector<TrainReport> reports;
    std::vector<std::string> chunk;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        chunk.push_back(lines[i]);
        const json j = json::parse(lines[i], nullptr, false);
        if (j.is_discarded()) throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(i + 1) + ": not valid JSON");
        if (j.value("type", "") == "summary") {
            for (auto& r : decode_train_reports(chunk)) reports.push_back(std::move(r));
            chunk.clear();
        }
    }
    if (!chunk.empty()) throw Error(ErrorCode::InvalidArgument, "report ends without a summary record");

    Sink sink(opt.output_path, out);
    auto& os = sink.stream();
    for (const auto& r : reports) {
        os << "[" << r.stage << "] iterations=" << r.iterations.size() << '\n';
        if (!r.iterations.empty()) {
            const auto& first = r.iterations.front();
            const auto& last = r.iterations.back();
            if (r.stage == "sft") {
                os << "  loss " << fmt_real(first.loss) << " -> " << fmt_real(last.loss) << '\n';
            } else {
                os << "  mean reward " << fmt_real(first.mean_reward) << " -> " << fmt_real(last.mean_reward)
                   << ", kl " << fmt_real(first.kl) << " -> " << fmt_real(last.kl) << '\n';
            }
        }
        print_eval(os, "  initial", r.initial_eval);
        print_eval(os, "  final", r.final_eval);
    }
    return kExitOk;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmbeddingServiceUnavailable:
    case ErrorCode::DimensionMismatch:
        return kExitServiceError;
    case ErrorCode::NumericalFailure:
    case ErrorCode::NonFiniteReward:
        return kExitNumericalError;
    default:
        return kExitInputError;
    }
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"GRPO reward engine and toy SFT/GRPO lab", "grl"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "Run configuration (key = value)");
        sub->add_option("--output", opt.output_path, "Output path (default: stdout)");
        sub->add_option("--seed", opt.seed, "Seed override");
        sub->add_flag("--offline", opt.offline, "Use the offline hash embedding provider");
        sub->add_option("--embed-endpoint", opt.embed_endpoint, "Embedding service base URL");
    };

    auto* score = app.add_subcommand("score", "Score candidate groups");
    add_common(score);
    score->add_option("--input", opt.input_path, "Line-delimited score requests")->required();
    score->add_option("--workers", opt.workers, "Scoring threads per group")->check(CLI::PositiveNumber);

    auto* adv = app.add_subcommand("advantages", "Append group-normalized advantages to reward records");
    add_common(adv);
    adv->add_option("--input", opt.input_path, "Line-delimited reward records")->required();
    adv->add_option("--std-floor", opt.std_floor, "Standard deviation floor");

    auto* train = app.add_subcommand("train", "Run SFT then GRPO on a synthetic task");
    add_common(train);

    auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint or a random-init policy");
    add_common(eval);
    eval->add_option("--input", opt.input_path, "Policy checkpoint");

    auto* report = app.add_subcommand("report", "Summarize a training report");
    add_common(report);
    report->add_option("--input", opt.input_path, "Training report")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }

    try {
        if (score->parsed()) return cmd_score(opt, out, err);
        if (adv->parsed()) return cmd_advantages(opt, out, err);
        if (train->parsed()) return cmd_train(opt, out, err);
        if (eval->parsed()) return cmd_eval(opt, out, err);
        return cmd_report(opt, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

} // namespace grl::cli
