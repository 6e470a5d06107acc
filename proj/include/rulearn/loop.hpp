#pragma once

#include <string>
#include <vector>

#include "rulearn/agent.hpp"
#include "rulearn/backend.hpp"
#include "rulearn/environment.hpp"

namespace rulearn {

struct LoopOptions {
    AgentVariant variant = AgentVariant::Idea;
    int max_steps = 15;
    // Perceptual and abductive actions are free; this cap (4x max_steps by
    // default) ends trials that never touch the environment.
    int non_interactive_cap = 60;
    int retry_limit = 3;
    int digest_budget = 8000;
};

struct LoopResult {
    TrialTrace trace;
    std::vector<TranscriptRecord> transcripts;
};

SessionInfo make_session_info(const Environment& env, const std::string& puzzle_id,
                              AgentVariant variant, int trial_index,
                              const LoopOptions& options);

// The main rule-learning loop: select, parse, execute, remember, repeat until
// solved or a budget is exhausted. `env` is mutated in place.
LoopResult run_loop(Environment& env, DecisionBackend& backend, const SessionInfo& info,
                    const LoopOptions& options);

// Buffer observations move to permanent memory (plus the facts the abduction
// chose to keep), action notes are dropped, the buffer is cleared, and
// hypothesis/plan are replaced.
void consolidate_memory(AgentState& state, const AbductionResult& result);

// Re-executes a persisted trace against a fresh environment and checks that
// every event's feedback and step counter reproduce exactly. On mismatch,
// `mismatch` names the first diverging event.
bool replay_trace(const TrialTrace& trace, Environment& env, std::string* mismatch);

}  // namespace rulearn
