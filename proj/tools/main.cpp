#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rulearn/environment.hpp"
#include "rulearn/harness.hpp"
#include "rulearn/loop.hpp"
#include "rulearn/metrics.hpp"
#include "rulearn/oracle.hpp"
#include "rulearn/trace_io.hpp"

namespace fs = std::filesystem;
using namespace rulearn;

namespace {

std::string canonical_family(const std::string& name) {
    if (name == "fo" || name == "function_operator") return "function_operator";
    if (name == "re" || name == "room_escape") return "room_escape";
    if (name == "rx" || name == "reactor") return "reactor";
    throw Error("unknown family: " + name +
                " (expected function_operator|room_escape|reactor or fo|re|rx)");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read file: " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

// Suite layout: <dir>/manifest.json next to a puzzles/ folder. Accepts the
// directory or the manifest path itself; returns (manifest path, suite dir).
std::pair<std::string, std::string> resolve_suite(const std::string& arg) {
    fs::path p(arg);
    if (fs::is_directory(p)) return {(p / "manifest.json").string(), p.string()};
    return {p.string(), p.parent_path().string()};
}

std::unique_ptr<DecisionBackend> make_backend(const std::string& id,
                                              const std::string& config_path,
                                              std::uint64_t seed, double temperature,
                                              bool temperature_set) {
    if (id == "oracle") return std::make_unique<OracleBackend>();
    if (id == "random") return std::make_unique<RandomBackend>(seed);
    if (config_path.empty())
        throw Error("backend '" + id +
                    "' is not built in (oracle, random); pass --backends <config.json>");

    json doc = read_json_file(config_path);
    const json& list = doc.is_array() ? doc : doc.at("backends");
    for (const auto& entry : list) {
        BackendConfig config = BackendConfig::from_json(entry);
        if (config.id != id) continue;
        if (temperature_set) config.temperature = temperature;
        return std::make_unique<HttpBackend>(config);
    }
    throw Error("backend '" + id + "' not found in " + config_path);
}

void print_report_table(const SuiteReport& report) {
    std::printf("%-10s %-18s %-10s %7s %7s %9s %18s %8s\n", "setup", "family", "backend",
                "trials", "solved", "rate", "95% CI", "steps");
    for (const auto& c : report.cells) {
        char ci[32];
        std::snprintf(ci, sizeof(ci), "[%.2f, %.2f]", c.ci.low, c.ci.high);
        std::printf("%-10s %-18s %-10s %7d %7d %8.2f%% %18s %8.2f\n", c.agent_variant.c_str(),
                    c.family.c_str(), c.backend_id.c_str(), c.trials, c.solved, c.success_rate,
                    ci, c.mean_steps_when_solved);
    }
    if (!report.unfinished_trials.empty())
        std::fprintf(stderr, "warning: %zu unfinished trials counted as failures\n",
                     report.unfinished_trials.size());
}

int cmd_generate(std::uint64_t seed, const std::string& out_dir,
                 const std::vector<std::string>& families, int count, int trials,
                 int max_steps) {
    GenerateOptions options;
    options.seed = seed;
    options.count_per_family = count;
    options.trials_per_puzzle = trials;
    options.max_steps = max_steps;
    for (const auto& f : families) options.families.push_back(canonical_family(f));

    SuiteManifest manifest = generate_suite(out_dir, options);
    std::printf("wrote %zu puzzles and manifest.json to %s\n", manifest.puzzles.size(),
                out_dir.c_str());
    return 0;
}

int cmd_validate(const std::string& suite_arg) {
    auto [manifest_path, suite_dir] = resolve_suite(suite_arg);
    SuiteManifest manifest = load_manifest(manifest_path);
    SuiteValidation report = validate_suite(manifest, suite_dir);
    for (const auto& p : report.puzzles) {
        if (p.solved)
            std::printf("%-8s %-18s solved in %d steps\n", p.id.c_str(), p.family.c_str(),
                        p.oracle_steps);
        else
            std::printf("%-8s %-18s FAILED: %s\n", p.id.c_str(), p.family.c_str(),
                        p.error.c_str());
    }
    if (!report.all_ok) {
        std::fprintf(stderr, "validation failed\n");
        return 1;
    }
    std::printf("all %zu puzzles oracle-solvable\n", report.puzzles.size());
    return 0;
}

int cmd_run(const std::string& suite_arg, const std::string& agent, const std::string& backend_id,
            const std::string& backends_path, std::uint64_t seed, double temperature,
            bool temperature_set, int trials, int max_steps, int parallelism, bool resume,
            const std::string& out_dir) {
    auto [manifest_path, suite_dir] = resolve_suite(suite_arg);
    SuiteManifest manifest = load_manifest(manifest_path);
    std::unique_ptr<DecisionBackend> backend =
        make_backend(backend_id, backends_path, seed, temperature, temperature_set);

    RunOptions options;
    options.variant = agent_variant_from_string(agent);
    options.parallelism = parallelism;
    options.resume = resume;
    options.trials_override = trials;
    options.max_steps_override = max_steps;
    options.out_dir = out_dir;

    RunSummary summary = run_suite(manifest, suite_dir, *backend, options);
    std::printf("trials: %zu  solved: %d  failed: %d  skipped: %d  errors: %d\n",
                summary.trials.size(), summary.solved, summary.failed, summary.skipped,
                summary.errors);
    return summary.errors > 0 ? 1 : 0;
}

int cmd_report(const std::string& trace_dir, const std::string& out_dir, int max_steps) {
    std::vector<TrialTrace> traces = load_trace_dir(trace_dir);
    if (traces.empty()) {
        std::fprintf(stderr, "no traces found in %s\n", trace_dir.c_str());
        return 1;
    }
    if (max_steps <= 0)
        for (const auto& t : traces) max_steps = std::max(max_steps, t.max_steps);

    SuiteReport report = aggregate_report(traces, max_steps);
    print_report_table(report);
    write_text_file((fs::path(out_dir) / "report.json").string(),
                    report.to_json().dump(2) + "\n");
    write_text_file((fs::path(out_dir) / "solve_curves.csv").string(), report.curves_csv());
    std::printf("wrote report.json and solve_curves.csv to %s\n", out_dir.c_str());
    return 0;
}

// Echoes each prompt to the terminal and returns what the human types. A
// reply ends at the first blank line so multi-line abduction answers work.
class HumanSession : public DecisionSession {
public:
    std::string complete(const TurnRequest& request) override {
        std::printf("\n%s\n", std::string(72, '-').c_str());
        std::printf("%s\n", request.prompt_text.c_str());
        if (request.retry_index > 0)
            std::printf("(previous reply was rejected: %s)\n", request.parse_error.c_str());
        std::printf("> reply, blank line to finish:\n");
        std::string reply;
        std::string line;
        while (std::getline(std::cin, line)) {
            if (line.empty() && !reply.empty()) break;
            if (line.empty()) continue;
            reply += line + "\n";
        }
        if (reply.empty()) throw BackendError("input closed");
        return reply;
    }
};

class HumanBackend : public DecisionBackend {
public:
    std::string id() const override { return "human"; }
    std::unique_ptr<DecisionSession> start_session(const SessionInfo&) override {
        return std::make_unique<HumanSession>();
    }
    int max_parallel_sessions() const override { return 1; }
};

int cmd_play(const std::string& puzzle_path, const std::string& agent, int max_steps,
             const std::string& trace_out) {
    std::unique_ptr<Environment> env = environment_from_json(read_json_file(puzzle_path));

    LoopOptions options;
    options.variant = agent_variant_from_string(agent);
    options.max_steps = max_steps;
    options.non_interactive_cap = 4 * max_steps;

    std::string puzzle_id = fs::path(puzzle_path).stem().string();
    HumanBackend backend;
    SessionInfo info = make_session_info(*env, puzzle_id, options.variant, 0, options);

    std::printf("Playing %s (%s). Reply in the format each prompt shows;\n", puzzle_id.c_str(),
                env->family().c_str());
    std::printf("finish every reply with a blank line.\n");

    LoopResult result = run_loop(*env, backend, info, options);
    const char* outcome =
        result.trace.outcome ? to_string(*result.trace.outcome).c_str() : "incomplete";
    std::printf("\nsession over: %s after %d interactive steps\n", outcome,
                result.trace.interactive_steps_used());

    std::string out = trace_out.empty() ? puzzle_id + ".trace.jsonl" : trace_out;
    save_trace(out, result.trace);
    std::printf("trace written to %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rulearn: generate, validate, run, and report interactive rule-learning "
                 "puzzle experiments"};
    app.require_subcommand(1);

    struct {
        std::uint64_t seed = 1;
        std::vector<std::string> families;
        int count = 20;
        int trials = 5;
        int max_steps = 15;
        std::string out_dir;
    } g;
    auto* gen = app.add_subcommand("generate", "Generate a puzzle suite and its manifest");
    gen->add_option("--seed", g.seed, "Suite seed")->capture_default_str();
    gen->add_option("--family", g.families,
                    "Restrict to one or more families (fo|re|rx or full names)");
    gen->add_option("--count", g.count, "Puzzles per family")->capture_default_str();
    gen->add_option("--trials", g.trials, "Trials per puzzle recorded in the manifest")
        ->capture_default_str();
    gen->add_option("--max-steps", g.max_steps, "Interactive step budget")
        ->capture_default_str();
    gen->add_option("--out", g.out_dir, "Output directory")->required();

    std::string val_suite;
    auto* val = app.add_subcommand("validate", "Check every puzzle is oracle-solvable");
    val->add_option("suite", val_suite, "Suite directory or manifest.json path")->required();

    struct {
        std::string suite;
        std::string agent = "idea";
        std::string backend_id = "oracle";
        std::string backends_path;
        std::uint64_t seed = 1;
        double temperature = 1.0;
        int trials = 0;
        int max_steps = 0;
        int parallelism = 0;
        bool resume = false;
        std::string out_dir = "run";
    } r;
    auto* run = app.add_subcommand("run", "Run an agent over a suite, writing traces");
    run->add_option("suite", r.suite, "Suite directory or manifest.json path")->required();
    run->add_option("--agent", r.agent, "Agent variant: idea|baseline|deduction")
        ->capture_default_str();
    run->add_option("--backend", r.backend_id,
                    "Decision backend: oracle, random, or an id from --backends")
        ->capture_default_str();
    run->add_option("--backends", r.backends_path, "JSON config file declaring HTTP backends");
    run->add_option("--seed", r.seed, "Seed for the random backend")->capture_default_str();
    auto* temp_opt = run->add_option("--temperature", r.temperature,
                                     "Sampling temperature for HTTP backends")
                         ->capture_default_str();
    run->add_option("--trials", r.trials, "Override trials per puzzle (0 = manifest value)");
    run->add_option("--max-steps", r.max_steps, "Override step budget (0 = manifest value)");
    run->add_option("--parallelism", r.parallelism,
                    "Max concurrent trials (0 = hardware, capped by backend)")
        ->capture_default_str();
    run->add_flag("--resume", r.resume, "Skip trials whose traces are already complete");
    run->add_option("--out", r.out_dir, "Trace output directory")->capture_default_str();

    struct {
        std::string trace_dir;
        std::string out_dir = "report";
        int max_steps = 0;
    } p;
    auto* rep = app.add_subcommand("report", "Aggregate traces into report.json and CSV curves");
    rep->add_option("traces", p.trace_dir, "Directory of *.trace.jsonl files")->required();
    rep->add_option("--out", p.out_dir, "Report output directory")->capture_default_str();
    rep->add_option("--max-steps", p.max_steps, "Solve-curve horizon (0 = max seen in traces)");

    struct {
        std::string puzzle;
        std::string agent = "idea";
        int max_steps = 15;
        std::string trace_out;
    } y;
    auto* play = app.add_subcommand("play", "Drive one puzzle by hand from the terminal");
    play->add_option("puzzle", y.puzzle, "Puzzle JSON file")->required();
    play->add_option("--agent", y.agent, "Variant to play as: idea|baseline|deduction")
        ->capture_default_str();
    play->add_option("--max-steps", y.max_steps, "Interactive step budget")
        ->capture_default_str();
    play->add_option("--out", y.trace_out, "Trace output path (default <puzzle>.trace.jsonl)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(g.seed, g.out_dir, g.families, g.count, g.trials, g.max_steps);
        if (val->parsed()) return cmd_validate(val_suite);
        if (run->parsed())
            return cmd_run(r.suite, r.agent, r.backend_id, r.backends_path, r.seed,
                           r.temperature, !temp_opt->empty(), r.trials, r.max_steps,
                           r.parallelism, r.resume, r.out_dir);
        if (rep->parsed()) return cmd_report(p.trace_dir, p.out_dir, p.max_steps);
        if (play->parsed()) return cmd_play(y.puzzle, y.agent, y.max_steps, y.trace_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
