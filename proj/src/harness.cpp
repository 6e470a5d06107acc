#include "rulearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "rulearn/environment.hpp"
#include "rulearn/function_operator.hpp"
#include "rulearn/oracle.hpp"
#include "rulearn/reactor.hpp"
#include "rulearn/rng.hpp"
#include "rulearn/room_escape.hpp"
#include "rulearn/trace_io.hpp"

namespace fs = std::filesystem;

namespace rulearn {

namespace {

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

std::string family_prefix(const std::string& family) {
    if (family == "function_operator") return "fo";
    if (family == "room_escape") return "re";
    if (family == "reactor") return "rx";
    throw ValidationFailure("unknown family: " + family);
}

// Fixed tag per family so suite seeds stay portable across compilers.
std::uint64_t family_tag(const std::string& family) {
    const std::string prefix = family_prefix(family);
    return (static_cast<std::uint64_t>(prefix[0]) << 8) | static_cast<std::uint64_t>(prefix[1]);
}

std::unique_ptr<Environment> generate_for(const std::string& family, std::uint64_t seed,
                                          const json& params) {
    if (family == "function_operator") {
        FoDifficulty d;
        d.constant_count = params.at("constant_count").get<int>();
        d.max_terms = params.at("max_terms").get<int>();
        return generate_fo_puzzle(seed, d);
    }
    if (family == "room_escape") {
        ReDifficulty d;
        d.painting_count = params.at("painting_count").get<int>();
        d.color_count = params.at("color_count").get<int>();
        return generate_re_puzzle(seed, d);
    }
    if (family == "reactor") {
        RxDifficulty d;
        d.initial_materials = params.at("initial_materials").get<int>();
        d.min_reactions = params.at("min_reactions").get<int>();
        return generate_rx_puzzle(seed, d);
    }
    throw ValidationFailure("unknown family: " + family);
}

}  // namespace

json SuiteManifest::to_json() const {
    json list = json::array();
    for (const auto& p : puzzles)
        list.push_back(json{{"id", p.id},
                            {"family", p.family},
                            {"seed", p.seed},
                            {"tier", p.tier},
                            {"path", p.path}});
    return json{{"suite_id", suite_id},
                {"seed", seed},
                {"trials_per_puzzle", trials_per_puzzle},
                {"max_steps", max_steps},
                {"puzzles", list}};
}

SuiteManifest SuiteManifest::from_json(const json& j) {
    SuiteManifest m;
    m.suite_id = j.at("suite_id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.trials_per_puzzle = j.at("trials_per_puzzle").get<int>();
    m.max_steps = j.at("max_steps").get<int>();
    for (const auto& p : j.at("puzzles")) {
        SuitePuzzle sp;
        sp.id = p.at("id").get<std::string>();
        sp.family = p.at("family").get<std::string>();
        sp.seed = p.at("seed").get<std::uint64_t>();
        sp.tier = p.at("tier").get<std::string>();
        sp.path = p.at("path").get<std::string>();
        m.puzzles.push_back(std::move(sp));
    }
    return m;
}

void save_manifest(const std::string& path, const SuiteManifest& manifest) {
    write_text_file(path, manifest.to_json().dump(2) + "\n");
}

SuiteManifest load_manifest(const std::string& path) {
    return SuiteManifest::from_json(read_json_file(path));
}

std::vector<TierSpec> default_tiers(const std::string& family) {
    if (family == "function_operator")
        return {{"easy", json{{"constant_count", 3}, {"max_terms", 1}}},
                {"medium", json{{"constant_count", 3}, {"max_terms", 2}}},
                {"hard", json{{"constant_count", 3}, {"max_terms", 3}}}};
    if (family == "room_escape")
        return {{"easy", json{{"painting_count", 4}, {"color_count", 2}}},
                {"medium", json{{"painting_count", 8}, {"color_count", 3}}},
                {"hard", json{{"painting_count", 12}, {"color_count", 4}}}};
    if (family == "reactor")
        return {{"easy", json{{"initial_materials", 3}, {"min_reactions", 2}}},
                {"medium", json{{"initial_materials", 3}, {"min_reactions", 3}}},
                {"hard", json{{"initial_materials", 4}, {"min_reactions", 4}}}};
    throw ValidationFailure("unknown family: " + family);
}

SuiteManifest generate_suite(const std::string& out_dir, const GenerateOptions& options) {
    std::vector<std::string> families = options.families;
    if (families.empty()) families = {"function_operator", "room_escape", "reactor"};
    if (options.count_per_family < 1)
        throw GenerationFailure("count_per_family must be positive");
    if (options.trials_per_puzzle < 1) throw GenerationFailure("trials_per_puzzle must be positive");
    if (options.max_steps < 1) throw GenerationFailure("max_steps must be positive");

    SuiteManifest manifest;
    manifest.suite_id = "suite-" + std::to_string(options.seed);
    manifest.seed = options.seed;
    manifest.trials_per_puzzle = options.trials_per_puzzle;
    manifest.max_steps = options.max_steps;

    for (const auto& family : families) {
        const std::string prefix = family_prefix(family);
        const std::vector<TierSpec> tiers = default_tiers(family);
        Rng rng(mix_seed(options.seed, family_tag(family)));
        for (int i = 0; i < options.count_per_family; ++i) {
            // Deal the ladder in thirds: easy first, hard last.
            size_t tier_index = static_cast<size_t>(i) * tiers.size() /
                                static_cast<size_t>(options.count_per_family);
            const TierSpec& tier = tiers[tier_index];

            std::unique_ptr<Environment> env;
            std::uint64_t puzzle_seed = 0;
            for (int attempt = 0; attempt < 100 && !env; ++attempt) {
                puzzle_seed = rng.next();
                try {
                    env = generate_for(family, puzzle_seed, tier.params);
                } catch (const GenerationFailure&) {
                }
            }
            if (!env)
                throw GenerationFailure("no viable " + family + " instance for suite seed " +
                                        std::to_string(options.seed));

            char id[32];
            std::snprintf(id, sizeof(id), "%s-%02d", prefix.c_str(), i + 1);
            SuitePuzzle p;
            p.id = id;
            p.family = family;
            p.seed = puzzle_seed;
            p.tier = tier.name;
            p.path = "puzzles/" + std::string(id) + ".json";
            write_text_file((fs::path(out_dir) / p.path).string(),
                            env->to_json().dump(2) + "\n");
            manifest.puzzles.push_back(std::move(p));
        }
    }

    save_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
    return manifest;
}

json SuiteValidation::to_json() const {
    json list = json::array();
    for (const auto& p : puzzles) {
        json row{{"id", p.id},
                 {"family", p.family},
                 {"solved", p.solved},
                 {"oracle_steps", p.oracle_steps}};
        if (!p.error.empty()) row["error"] = p.error;
        list.push_back(std::move(row));
    }
    return json{{"all_ok", all_ok}, {"puzzles", list}};
}

SuiteValidation validate_suite(const SuiteManifest& manifest, const std::string& suite_dir) {
    SuiteValidation report;
    report.all_ok = true;
    for (const auto& p : manifest.puzzles) {
        PuzzleValidation v;
        v.id = p.id;
        v.family = p.family;
        try {
            json pj = read_json_file((fs::path(suite_dir) / p.path).string());
            std::unique_ptr<Environment> env = environment_from_json(pj);

            OracleBackend oracle;
            LoopOptions options;
            options.variant = AgentVariant::DeductionOnly;
            options.max_steps = manifest.max_steps;
            SessionInfo info =
                make_session_info(*env, p.id, AgentVariant::DeductionOnly, 0, options);
            TrialTrace trace = run_loop(*env, oracle, info, options).trace;

            v.solved = trace.solved();
            v.oracle_steps = trace.interactive_steps_used();
            if (!v.solved) v.error = "oracle failed to solve within the step budget";
        } catch (const std::exception& e) {
            v.solved = false;
            v.error = e.what();
        }
        if (!v.solved) report.all_ok = false;
        report.puzzles.push_back(std::move(v));
    }
    return report;
}

RunSummary run_suite(const SuiteManifest& manifest, const std::string& suite_dir,
                     DecisionBackend& backend, const RunOptions& options) {
    const int trials =
        options.trials_override > 0 ? options.trials_override : manifest.trials_per_puzzle;
    const int max_steps =
        options.max_steps_override > 0 ? options.max_steps_override : manifest.max_steps;
    if (trials < 1) throw Error("trials per puzzle must be positive");
    if (max_steps < 1) throw Error("max_steps must be positive");

    struct Task {
        const SuitePuzzle* puzzle;
        int trial_index;
    };
    std::vector<Task> tasks;
    for (const auto& p : manifest.puzzles)
        for (int t = 0; t < trials; ++t) tasks.push_back({&p, t});

    RunSummary summary;
    summary.trials.resize(tasks.size());

    int parallelism = options.parallelism > 0
                          ? options.parallelism
                          : static_cast<int>(std::thread::hardware_concurrency());
    if (parallelism < 1) parallelism = 1;
    int backend_cap = backend.max_parallel_sessions();
    if (backend_cap > 0) parallelism = std::min(parallelism, backend_cap);
    parallelism = std::min<int>(parallelism, static_cast<int>(tasks.size()));

    fs::create_directories(options.out_dir);

    std::atomic<size_t> next{0};
    std::atomic<bool> halted{false};
    std::mutex log_mutex;

    auto log_line = [&](const std::string& line) {
        if (!options.progress) return;
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "%s\n", line.c_str());
    };

    auto worker = [&]() {
        for (;;) {
            size_t index = next.fetch_add(1);
            if (index >= tasks.size()) return;
            const Task& task = tasks[index];
            TrialResult& result = summary.trials[index];
            result.puzzle_id = task.puzzle->id;
            result.trial_index = task.trial_index;

            std::string stem = task.puzzle->id + "-t" + std::to_string(task.trial_index);
            fs::path trace_path = fs::path(options.out_dir) / (stem + ".trace.jsonl");
            result.trace_path = trace_path.string();

            if (halted.load()) {
                result.skipped = true;
                result.error = "run halted after an authorization failure";
                continue;
            }

            if (options.resume) {
                try {
                    std::optional<TrialTrace> existing = load_trace(trace_path.string());
                    if (existing && existing->complete()) {
                        result.skipped = true;
                        result.outcome = existing->outcome;
                        result.interactive_steps = existing->interactive_steps_used();
                        log_line("[" + std::to_string(index + 1) + "/" +
                                 std::to_string(tasks.size()) + "] " + stem +
                                 ": already complete, skipped");
                        continue;
                    }
                } catch (const std::exception&) {
                    // Unreadable partial trace: re-run the trial.
                }
            }

            try {
                json pj = read_json_file((fs::path(suite_dir) / task.puzzle->path).string());
                std::unique_ptr<Environment> env = environment_from_json(pj);

                LoopOptions loop_options;
                loop_options.variant = options.variant;
                loop_options.max_steps = max_steps;
                loop_options.non_interactive_cap = 4 * max_steps;
                SessionInfo info = make_session_info(*env, task.puzzle->id, options.variant,
                                                     task.trial_index, loop_options);
                LoopResult res = run_loop(*env, backend, info, loop_options);

                save_trace(trace_path.string(), res.trace);
                save_transcripts(
                    (fs::path(options.out_dir) / (stem + ".transcript.jsonl")).string(),
                    res.transcripts);

                result.outcome = res.trace.outcome;
                result.interactive_steps = res.trace.interactive_steps_used();
                log_line("[" + std::to_string(index + 1) + "/" + std::to_string(tasks.size()) +
                         "] " + stem + ": " +
                         (res.trace.outcome ? to_string(*res.trace.outcome) : "incomplete") +
                         " (" + std::to_string(result.interactive_steps) + " steps)");
            } catch (const BackendError& e) {
                result.error = e.what();
                if (e.auth_failure) {
                    halted.store(true);
                    log_line("authorization failure, halting: " + std::string(e.what()));
                } else {
                    log_line("[" + std::to_string(index + 1) + "/" +
                             std::to_string(tasks.size()) + "] " + stem + ": error: " + e.what());
                }
            } catch (const std::exception& e) {
                result.error = e.what();
                log_line("[" + std::to_string(index + 1) + "/" + std::to_string(tasks.size()) +
                         "] " + stem + ": error: " + e.what());
            }
        }
    };

    std::vector<std::thread> pool;
    for (int i = 0; i < parallelism; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& r : summary.trials) {
        if (r.skipped && !r.outcome) {
            ++summary.skipped;
            ++summary.errors;
        } else if (r.skipped) {
            ++summary.skipped;
            if (r.outcome == Outcome::Solved) ++summary.solved;
            else ++summary.failed;
        } else if (!r.error.empty()) {
            ++summary.errors;
        } else if (r.outcome == Outcome::Solved) {
            ++summary.solved;
        } else {
            ++summary.failed;
        }
    }
    return summary;
}

std::vector<TrialTrace> load_trace_dir(const std::string& trace_dir) {
    std::vector<std::string> paths;
    if (!fs::is_directory(trace_dir)) throw Error("not a directory: " + trace_dir);
    for (const auto& entry : fs::directory_iterator(trace_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() > 12 && name.rfind(".trace.jsonl") == name.size() - 12)
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<TrialTrace> traces;
    for (const auto& path : paths) {
        std::optional<TrialTrace> t = load_trace(path);
        if (t) traces.push_back(std::move(*t));
    }
    return traces;
}

}  // namespace rulearn
