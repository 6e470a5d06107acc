#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rulearn/backend.hpp"
#include "rulearn/loop.hpp"
#include "rulearn/metrics.hpp"
#include "rulearn/types.hpp"

namespace rulearn {

// One entry of a generated suite; `path` is relative to the manifest's
// directory.
struct SuitePuzzle {
    std::string id;
    std::string family;
    std::uint64_t seed = 0;
    std::string tier;
    std::string path;
};

struct SuiteManifest {
    std::string suite_id;
    std::uint64_t seed = 0;
    int trials_per_puzzle = 5;
    int max_steps = 15;
    std::vector<SuitePuzzle> puzzles;

    json to_json() const;
    static SuiteManifest from_json(const json& j);
};

void save_manifest(const std::string& path, const SuiteManifest& manifest);
SuiteManifest load_manifest(const std::string& path);

// Difficulty ladder per family: generator parameters for easy, medium, hard.
// Puzzles are dealt across the ladder in order (first third easy, ...).
struct TierSpec {
    std::string name;
    json params;
};

std::vector<TierSpec> default_tiers(const std::string& family);

struct GenerateOptions {
    std::uint64_t seed = 1;
    std::vector<std::string> families;  // empty means all three
    int count_per_family = 20;
    int trials_per_puzzle = 5;
    int max_steps = 15;
};

// Writes puzzles/<id>.json files plus manifest.json under out_dir.
SuiteManifest generate_suite(const std::string& out_dir, const GenerateOptions& options);

struct PuzzleValidation {
    std::string id;
    std::string family;
    bool solved = false;
    int oracle_steps = 0;
    std::string error;
};

struct SuiteValidation {
    std::vector<PuzzleValidation> puzzles;
    bool all_ok = false;
    json to_json() const;
};

// Runs the rule-disclosed oracle over every puzzle; read-only on files.
SuiteValidation validate_suite(const SuiteManifest& manifest, const std::string& suite_dir);

struct RunOptions {
    AgentVariant variant = AgentVariant::Idea;
    int parallelism = 0;  // 0 means hardware concurrency, capped by the backend
    bool resume = false;
    int trials_override = 0;     // 0 means the manifest's trials_per_puzzle
    int max_steps_override = 0;  // 0 means the manifest's max_steps
    std::string out_dir = "run";
    bool progress = true;  // per-trial lines on stderr
};

struct TrialResult {
    std::string puzzle_id;
    int trial_index = 0;
    std::optional<Outcome> outcome;  // empty when the trial errored or was skipped
    bool skipped = false;            // already complete on disk (resume)
    int interactive_steps = 0;
    std::string trace_path;
    std::string error;
};

struct RunSummary {
    std::vector<TrialResult> trials;
    int solved = 0;
    int failed = 0;
    int skipped = 0;
    int errors = 0;  // trials that threw (transport, bad files)
};

// Executes trials_per_puzzle trials per puzzle against one backend, bounded
// by the parallelism cap, writing <id>-t<k>.trace.jsonl and
// <id>-t<k>.transcript.jsonl under out_dir.
RunSummary run_suite(const SuiteManifest& manifest, const std::string& suite_dir,
                     DecisionBackend& backend, const RunOptions& options);

// Loads every *.trace.jsonl under trace_dir (sorted by name).
std::vector<TrialTrace> load_trace_dir(const std::string& trace_dir);

}  // namespace rulearn
