// plumbctl: command-line front end for generation, training, evaluation and search.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plumbing/classify.hpp"
#include "plumbing/core.hpp"
#include "plumbing/generate.hpp"
#include "plumbing/rl.hpp"
#include "plumbing/search.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plumbing;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kBadInput = 2, kBudget = 3 };

struct BudgetExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::istream& in, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    char buffer[1 << 16];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

std::string hex(std::uint64_t value) {
    char buffer[17];
    std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(value));
    return buffer;
}

// Files hash their bytes; directories hash their files in name order, each
// prefixed by its relative path.
std::string artifact_hash(const fs::path& path) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(path))
            if (entry.is_regular_file()) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::istringstream name(fs::relative(f, path).generic_string());
            hash = fnv1a(name, hash);
            std::ifstream in(f, std::ios::binary);
            hash = fnv1a(in, hash);
        }
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) return "";
        hash = fnv1a(in, hash);
    }
    return "fnv1a64:" + hex(hash);
}

class Run {
public:
    explicit Run(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

    json config = json::object();
    std::string manifest_path;

    void output(const std::string& role, const std::string& path) { outputs_.push_back({role, path}); }

    void finish() const {
        std::string target = manifest_path;
        if (target.empty() && !outputs_.empty()) {
            fs::path primary(outputs_.front().second);
            target = fs::is_directory(primary) ? (primary / "run_manifest.json").string()
                                               : primary.string() + ".manifest.json";
        }
        if (target.empty()) return;
        json outputs = json::array();
        for (const auto& [role, path] : outputs_)
            outputs.push_back({{"role", role}, {"path", path}, {"hash", artifact_hash(path)}});
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const json manifest{{"command", command_},
                            {"config", config},
                            {"seed", config.contains("seed") ? config["seed"] : json(nullptr)},
                            {"outputs", outputs},
                            {"wall_clock_seconds", seconds}};
        std::ofstream out(target);
        if (!out) throw std::runtime_error("cannot write manifest " + target);
        out << manifest.dump(2) << '\n';
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    std::vector<std::pair<std::string, std::string>> outputs_;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

void emit_json(const json& value, const std::string& path) {
    if (path.empty())
        std::cout << value.dump(2) << '\n';
    else
        write_text(path, value.dump(2) + "\n");
}

json actions_json(const std::vector<RlAction>& actions) {
    json out = json::array();
    for (const auto& a : actions) out.push_back(to_json(a));
    return out;
}

Policy policy_by_name(const std::string& name) {
    if (name == "uniform") return uniform_policy();
    return load_policy(name);
}

struct Options {
    std::string manifest;

    // gen
    std::string kind = "sl-mix";
    int count = 0;
    int nmax = 40;
    std::optional<std::uint64_t> seed;
    std::string out;

    // train-sl / eval-sl
    std::string arch = "gen+gat";
    std::string data;
    int epochs = 150;
    double lr = 1e-3;
    int batch = 64;
    std::string model;
    std::string report;
    std::string log;

    // train-rl / eval-rl / stats-moves
    std::string algo = "a3c";
    int episodes = 10000;
    int workers = 8;
    double rl_lr = 5e-4;
    bool asynchronous = false;
    bool target_after_scramble = false;
    std::string policy = "uniform";
    int n = 20;
    int pairs = 200;
    int budget_mult = 5;

    // simplify / decide / path / det
    std::string in;
    std::string mode = "beam";
    int budget = 200;
    int width = 16;
    std::string g1, g2;
    int max_depth = 6;
};

std::uint64_t require_seed(const Options& o) {
    if (!o.seed) throw CLI::RequiredError("--seed");
    return *o.seed;
}

int cmd_gen(const Options& o) {
    Run run("gen");
    const std::uint64_t seed = require_seed(o);
    if (o.count < 1) throw std::invalid_argument("--count must be positive");
    const Dataset data = make_dataset(dataset_kind_from_name(o.kind), o.count, o.nmax, seed);
    write_dataset(data, o.out);
    run.config = {{"kind", o.kind}, {"count", o.count}, {"nmax", o.nmax}, {"seed", seed}, {"counts", data.counts}};
    run.manifest_path = o.manifest;
    run.output("dataset", o.out);
    run.finish();
    std::cout << data.counts.dump() << '\n';
    return kOk;
}

int cmd_train_sl(const Options& o) {
    Run run("train-sl");
    const std::uint64_t seed = require_seed(o);
    const Dataset data = read_dataset(o.data);
    PairClassifier model(ModelSpec::parse(o.arch), seed);
    TrainConfig config;
    config.epochs = o.epochs;
    config.lr = o.lr;
    config.batch_size = o.batch;
    config.seed = seed;
    const TrainHistory history = train_sl(model, data.pairs, config, [](const EpochMetrics& m) {
        std::fprintf(stderr, "epoch %d %s loss %.4f accuracy %.4f\n", m.epoch, m.split.c_str(), m.loss, m.accuracy);
    });
    model.save(o.out);
    const std::string log = o.log.empty() ? (fs::path(o.out) / "history.csv").string() : o.log;
    history.write_csv(log);
    run.config = {{"arch", model.spec().name()}, {"data", o.data},  {"epochs", o.epochs},
                  {"lr", o.lr},                  {"batch", o.batch}, {"seed", seed},
                  {"best_epoch", history.best_epoch}, {"best_validation_accuracy", history.best_validation_accuracy}};
    run.manifest_path = o.manifest;
    run.output("checkpoint", o.out);
    run.output("history", log);
    run.finish();
    std::cout << json{{"best_epoch", history.best_epoch},
                      {"best_validation_accuracy", history.best_validation_accuracy}}.dump()
              << '\n';
    return kOk;
}

int cmd_eval_sl(const Options& o) {
    Run run("eval-sl");
    const PairClassifier model = PairClassifier::load(o.model);
    const Dataset data = read_dataset(o.data);
    const EvalReport report = evaluate(model, data.pairs, o.batch);
    if (!o.report.empty()) {
        char buffer[256];
        std::snprintf(buffer, sizeof buffer, "count,accuracy,mean_loss,true_positive,true_negative,false_positive,false_negative\n%zu,%.17g,%.17g,%zu,%zu,%zu,%zu\n",
                      report.count, report.accuracy, report.mean_loss, report.true_positive, report.true_negative,
                      report.false_positive, report.false_negative);
        write_text(o.report, buffer);
        run.output("report", o.report);
    }
    run.config = {{"model", o.model}, {"data", o.data}, {"batch", o.batch}};
    run.manifest_path = o.manifest;
    run.finish();
    std::cout << report.to_json().dump() << '\n';
    return kOk;
}

EnvConfig env_from(const Options& o) {
    EnvConfig env;
    env.target_after_scramble = o.target_after_scramble;
    return env;
}

int cmd_train_rl(const Options& o) {
    Run run("train-rl");
    const std::uint64_t seed = require_seed(o);
    auto progress = [](const EpisodeLog& e) {
        if ((e.episode + 1) % 500 == 0)
            std::fprintf(stderr, "episode %d return %lld steps %d terminal_f %lld\n", e.episode + 1,
                         static_cast<long long>(e.total_reward), e.steps, static_cast<long long>(e.terminal_f));
    };
    TrainLog log;
    if (o.algo == "a3c") {
        ActorCritic model(seed);
        A3cConfig config;
        config.workers = o.workers;
        config.episodes = o.episodes;
        config.lr = o.rl_lr;
        config.asynchronous = o.asynchronous;
        config.seed = seed;
        config.env = env_from(o);
        log = a3c_train(model, config, progress);
        model.save(o.out);
    } else if (o.algo == "dqn") {
        QNetwork model(seed);
        DqnConfig config;
        config.episodes = o.episodes;
        config.lr = o.rl_lr;
        config.seed = seed;
        config.env = env_from(o);
        log = dqn_train(model, config, progress);
        model.save(o.out);
    } else {
        throw CLI::ValidationError("--algo", "must be a3c or dqn");
    }
    const std::string log_path = o.log.empty() ? (fs::path(o.out) / "episodes.csv").string() : o.log;
    log.write_csv(log_path);
    run.config = {{"algo", o.algo},         {"episodes", o.episodes},
                  {"workers", o.workers},   {"lr", o.rl_lr},
                  {"async", o.asynchronous}, {"target_after_scramble", o.target_after_scramble},
                  {"seed", seed}};
    run.manifest_path = o.manifest;
    run.output("checkpoint", o.out);
    run.output("episodes", log_path);
    run.finish();
    const std::size_t tail = std::min<std::size_t>(500, log.episodes.size());
    std::cout << json{{"episodes", log.episodes.size()},
                      {"mean_return_last", log.mean_return(log.episodes.size() - tail, log.episodes.size())}}
                     .dump()
              << '\n';
    return kOk;
}

int cmd_eval_rl(const Options& o) {
    Run run("eval-rl");
    const std::uint64_t seed = o.seed.value_or(0);
    const PairEvalReport report = evaluate_pairs(policy_by_name(o.policy), o.n, o.pairs, o.budget_mult, seed);
    emit_json(report.to_json(), o.report);
    run.config = {{"policy", o.policy}, {"n", o.n}, {"pairs", o.pairs}, {"budget_mult", o.budget_mult}, {"seed", seed}};
    run.manifest_path = o.manifest;
    if (!o.report.empty()) run.output("report", o.report);
    run.finish();
    return kOk;
}

int cmd_simplify(const Options& o) {
    Run run("simplify");
    const Plumbing input = read_plumbing_file(o.in);
    SimplifyResult result{input, {}, complexity(input)};
    if (o.mode == "greedy") {
        result = greedy_simplify(input, o.budget);
    } else if (o.mode == "beam") {
        result = beam_simplify(input, o.width, o.budget);
    } else if (o.mode == "policy") {
        Rng rng(o.seed.value_or(0));
        result = simplify_with_policy(policy_by_name(o.policy), input, o.budget, rng);
    } else {
        throw CLI::ValidationError("--mode", "must be policy, greedy or beam");
    }
    emit_json({{"input_complexity", complexity(input)},
               {"complexity", result.complexity},
               {"graph", to_json(result.graph)},
               {"path", actions_json(result.path)}},
              o.out);
    run.config = {{"in", o.in}, {"mode", o.mode}, {"budget", o.budget}, {"policy", o.policy}};
    if (o.seed) run.config["seed"] = *o.seed;
    run.manifest_path = o.manifest;
    if (!o.out.empty()) run.output("result", o.out);
    run.finish();
    return kOk;
}

int cmd_decide(const Options& o) {
    Run run("decide");
    EffortBudget budget;
    budget.depth_budget = o.budget;
    budget.beam_width = o.width;
    const Verdict verdict = decide_equivalence(read_plumbing_file(o.g1), read_plumbing_file(o.g2), budget);
    emit_json(to_json(verdict), o.out);
    run.config = {{"g1", o.g1}, {"g2", o.g2}, {"budget", o.budget}, {"width", o.width}};
    run.manifest_path = o.manifest;
    if (!o.out.empty()) run.output("verdict", o.out);
    run.finish();
    return kOk;
}

int cmd_path(const Options& o) {
    Run run("path");
    const auto found = bidirectional_path(read_plumbing_file(o.g1), read_plumbing_file(o.g2), o.max_depth);
    run.config = {{"g1", o.g1}, {"g2", o.g2}, {"max_depth", o.max_depth}};
    run.manifest_path = o.manifest;
    if (!found) {
        run.finish();
        throw BudgetExhausted("no connecting path within " + std::to_string(o.max_depth) + " moves");
    }
    emit_json({{"length", found->length()}, {"path1", actions_json(found->first)}, {"path2", actions_json(found->second)}},
              o.out);
    if (!o.out.empty()) run.output("path", o.out);
    run.finish();
    return kOk;
}

int cmd_stats_moves(const Options& o) {
    Run run("stats-moves");
    const std::uint64_t seed = o.seed.value_or(0);
    EnvConfig env = env_from(o);
    const MoveStats stats = move_stats(policy_by_name(o.policy), o.episodes, seed, env);
    emit_json(stats.to_json(), o.report);
    run.config = {{"policy", o.policy}, {"episodes", o.episodes}, {"seed", seed}};
    run.manifest_path = o.manifest;
    if (!o.report.empty()) run.output("report", o.report);
    run.finish();
    return kOk;
}

int cmd_det(const Options& o) {
    const Plumbing p = read_plumbing_file(o.in);
    const BigInt det = determinant(p);
    const BigInt magnitude = abs(det);
    std::cout << "det " << det.get_str() << '\n' << "|det| " << magnitude.get_str() << '\n';
    if (!o.manifest.empty()) {
        Run run("det");
        run.config = {{"in", o.in}, {"det", det.get_str()}};
        run.manifest_path = o.manifest;
        run.finish();
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plumbing graph toolkit: datasets, classifiers, RL agents and search"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--manifest", o.manifest, "Run manifest path (default: next to the primary output)");

    auto* gen = app.add_subcommand("gen", "Generate a labeled pair dataset (JSONL)");
    gen->add_option("--kind", o.kind, "equiv|inequiv|tweak|sl-mix|balanced|test4|lens-equiv")->required();
    gen->add_option("--count", o.count, "Number of pairs")->required();
    gen->add_option("--nmax", o.nmax, "Maximum scramble calls per graph");
    gen->add_option("--seed", o.seed, "Random seed")->required();
    gen->add_option("--out", o.out, "Output JSONL")->required();

    auto* train_sl_cmd = app.add_subcommand("train-sl", "Train a pair classifier");
    train_sl_cmd->add_option("--arch", o.arch, "conv1+conv2, e.g. gen+gat");
    train_sl_cmd->add_option("--data", o.data, "Training JSONL")->required()->check(CLI::ExistingFile);
    train_sl_cmd->add_option("--epochs", o.epochs);
    train_sl_cmd->add_option("--lr", o.lr);
    train_sl_cmd->add_option("--batch", o.batch);
    train_sl_cmd->add_option("--seed", o.seed)->required();
    train_sl_cmd->add_option("--out", o.out, "Checkpoint directory")->required();
    train_sl_cmd->add_option("--log", o.log, "Per-epoch CSV (default CKPT/history.csv)");

    auto* eval_sl_cmd = app.add_subcommand("eval-sl", "Evaluate a pair classifier");
    eval_sl_cmd->add_option("--model", o.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    eval_sl_cmd->add_option("--data", o.data, "Test JSONL")->required()->check(CLI::ExistingFile);
    eval_sl_cmd->add_option("--report", o.report, "CSV report");
    eval_sl_cmd->add_option("--batch", o.batch);

    auto* train_rl_cmd = app.add_subcommand("train-rl", "Train an actor-critic or DQN agent");
    train_rl_cmd->add_option("--algo", o.algo, "a3c|dqn")->check(CLI::IsMember({"a3c", "dqn"}));
    train_rl_cmd->add_option("--episodes", o.episodes);
    train_rl_cmd->add_option("--workers", o.workers);
    train_rl_cmd->add_option("--lr", o.rl_lr);
    train_rl_cmd->add_flag("--async", o.asynchronous, "Lock-guarded asynchronous updates (not reproducible)");
    train_rl_cmd->add_flag("--target-after-scramble", o.target_after_scramble,
                           "Terminate against the scrambled start state");
    train_rl_cmd->add_option("--seed", o.seed)->required();
    train_rl_cmd->add_option("--out", o.out, "Checkpoint directory")->required();
    train_rl_cmd->add_option("--log", o.log, "Episode CSV (default CKPT/episodes.csv)");

    auto* eval_rl_cmd = app.add_subcommand("eval-rl", "Pair-unscrambling success rate of a policy");
    eval_rl_cmd->add_option("--policy", o.policy, "Checkpoint directory or 'uniform'")->required();
    eval_rl_cmd->add_option("--n", o.n, "Scramble moves per graph");
    eval_rl_cmd->add_option("--pairs", o.pairs);
    eval_rl_cmd->add_option("--budget-mult", o.budget_mult);
    eval_rl_cmd->add_option("--seed", o.seed);
    eval_rl_cmd->add_option("--report", o.report, "JSON report (default stdout)");

    auto* simplify_cmd = app.add_subcommand("simplify", "Lower the complexity of a plumbing");
    simplify_cmd->add_option("--in", o.in, "Graph JSON")->required()->check(CLI::ExistingFile);
    simplify_cmd->add_option("--mode", o.mode, "policy|greedy|beam")->check(CLI::IsMember({"policy", "greedy", "beam"}));
    simplify_cmd->add_option("--budget", o.budget);
    simplify_cmd->add_option("--width", o.width, "Beam width");
    simplify_cmd->add_option("--policy", o.policy, "Checkpoint directory or 'uniform' for --mode policy");
    simplify_cmd->add_option("--seed", o.seed);
    simplify_cmd->add_option("--out", o.out, "Result JSON (default stdout)");

    auto* decide_cmd = app.add_subcommand("decide", "Three-valued equivalence decision");
    decide_cmd->add_option("--g1", o.g1)->required()->check(CLI::ExistingFile);
    decide_cmd->add_option("--g2", o.g2)->required()->check(CLI::ExistingFile);
    decide_cmd->add_option("--budget", o.budget, "Beam depth budget");
    decide_cmd->add_option("--width", o.width, "Beam width");
    decide_cmd->add_option("--out", o.out, "Verdict JSON (default stdout)");

    auto* path_cmd = app.add_subcommand("path", "Shortest move path between two plumbings");
    path_cmd->add_option("--g1", o.g1)->required()->check(CLI::ExistingFile);
    path_cmd->add_option("--g2", o.g2)->required()->check(CLI::ExistingFile);
    path_cmd->add_option("--max-depth", o.max_depth);
    path_cmd->add_option("--out", o.out, "Path JSON (default stdout)");

    auto* stats_cmd = app.add_subcommand("stats-moves", "Move-category frequencies of a policy");
    stats_cmd->add_option("--policy", o.policy, "Checkpoint directory or 'uniform'");
    stats_cmd->add_option("--episodes", o.episodes);
    stats_cmd->add_option("--seed", o.seed);
    stats_cmd->add_option("--report", o.report, "JSON report (default stdout)");

    auto* det_cmd = app.add_subcommand("det", "Signed determinant and |det| of a plumbing");
    det_cmd->add_option("--in", o.in, "Graph JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(o);
        if (train_sl_cmd->parsed()) return cmd_train_sl(o);
        if (eval_sl_cmd->parsed()) return cmd_eval_sl(o);
        if (train_rl_cmd->parsed()) return cmd_train_rl(o);
        if (eval_rl_cmd->parsed()) return cmd_eval_rl(o);
        if (simplify_cmd->parsed()) return cmd_simplify(o);
        if (decide_cmd->parsed()) return cmd_decide(o);
        if (path_cmd->parsed()) return cmd_path(o);
        if (stats_cmd->parsed()) return cmd_stats_moves(o);
        if (det_cmd->parsed()) return cmd_det(o);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const BudgetExhausted& e) {
        std::cerr << "budget exhausted: " << e.what() << '\n';
        return kBudget;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
    return kUsage;
}
