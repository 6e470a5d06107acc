#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace rulearn {

using json = nlohmann::json;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GenerationFailure : Error {
    using Error::Error;
};

struct ValidationFailure : Error {
    using Error::Error;
};

// Transport-level backend failure. `auth_failure` marks non-retryable
// credential problems.
struct BackendError : Error {
    explicit BackendError(const std::string& msg, bool auth = false)
        : Error(msg), auth_failure(auth) {}
    bool auth_failure = false;
};

enum class ActionKind { Perceptual, Interactive, Abductive };

std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& s);

// Input payload schemas an interactive action can declare.
enum class InputSchema { None, Number, DigitTriple, MaterialPair, ValueAssignment };

std::string to_string(InputSchema schema);

struct DigitTriple {
    std::array<int, 3> digits{0, 0, 0};
    bool operator==(const DigitTriple&) const = default;
};

struct MaterialPair {
    std::string first;
    std::string second;
    bool operator==(const MaterialPair&) const = default;
};

struct ValueAssignment {
    std::map<std::string, int> values;
    bool operator==(const ValueAssignment&) const = default;
};

using ActionInput =
    std::variant<std::monostate, double, DigitTriple, MaterialPair, ValueAssignment>;

json input_to_json(const ActionInput& input);
ActionInput input_from_json(const json& j, InputSchema schema);

// An action the agent has committed to this turn.
struct Action {
    ActionKind kind = ActionKind::Perceptual;
    std::string object_id;
    std::string action_name;
    ActionInput input;
};

// One entry of the agent's dynamic action space. Menu ids are the
// 1-based position in the space; the space is append-only within a
// trial so ids stay stable.
struct ActionSpec {
    ActionKind kind = ActionKind::Perceptual;
    std::string object_id;
    std::string action_name;
    std::string description;
    InputSchema schema = InputSchema::None;
    // Current legal argument sets (digits, materials, constant ids); refreshed
    // every turn so menus track environment state.
    json payload_info = json::object();

    bool matches(ActionKind k, const std::string& obj, const std::string& name) const {
        return kind == k && object_id == obj && action_name == name;
    }
};

// Structured environment feedback. `text` is the natural-language
// rendering shown at the prompt boundary; `data` keeps the exact values.
struct Feedback {
    std::string type;
    std::string text;
    json data = json::object();
    bool solved = false;
    bool consumes_step = true;

    json to_json() const;

    static Feedback invalid(const std::string& reason) {
        Feedback f;
        f.type = "invalid";
        f.text = reason;
        f.consumes_step = false;
        return f;
    }
};

enum class RecordKind { Observation, ActionNote };

struct MemoryRecord {
    RecordKind kind = RecordKind::Observation;
    std::string text;
};

// Agent-side state for one trial.
struct AgentState {
    std::string goal;
    std::vector<MemoryRecord> buffer_memory;
    std::vector<MemoryRecord> permanent_memory;
    std::string hypothesis;
    std::string plan;
    std::vector<ActionSpec> action_space;
};

struct StepBudget {
    int max_steps = 15;
    // The interactive budget alone does not bound the trial: perceptual and
    // abductive actions are free. The cap below ends a trial that never
    // touches the environment.
    int non_interactive_cap = 60;
    int interactive_steps_used = 0;
    int non_interactive_used = 0;
};

enum class Outcome { Solved, StepLimit, BackendFailure };

std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& s);

struct TraceEvent {
    int index = 0;
    ActionKind kind = ActionKind::Perceptual;
    std::string target;
    std::string action_name;
    json input;  // null when the action carries no payload
    json feedback = json::object();
    std::string hypothesis_after;
    std::string plan_after;
    int interactive_steps_used = 0;
    // "initial" for the first successful hypothesis revision in a trial,
    // "refinement" for later ones, empty otherwise.
    std::string abduction_event;
};

struct TrialTrace {
    std::string puzzle_id;
    std::string family;
    std::uint64_t seed = 0;
    std::string agent_variant;
    std::string backend_id;
    int max_steps = 15;
    int trial_index = 0;
    std::vector<TraceEvent> events;
    std::optional<Outcome> outcome;

    bool solved() const { return outcome == Outcome::Solved; }
    bool complete() const { return outcome.has_value(); }
    int interactive_steps_used() const {
        return events.empty() ? 0 : events.back().interactive_steps_used;
    }
    int abduction_count() const;
};

struct TranscriptRecord {
    int call_index = 0;
    std::string purpose;  // "select" or "abduce"
    std::string request_text;
    std::string response_text;
    std::string parse_status;  // "ok" or the parse error
    int retry_index = 0;
};

// Canonical form used for action equality (duplicate detection): numeric
// payloads compare by value, string payloads trimmed and upper-cased.
std::string canonical_event_key(const TraceEvent& event);
std::string canonical_action_key(ActionKind kind, const std::string& target,
                                 const std::string& action_name, const ActionInput& input);

// %.Ng rendering used everywhere a real number meets text.
std::string format_double(double value, int significant_digits = 6);

std::string trim(const std::string& s);
std::string to_upper(const std::string& s);

// Deterministic seed mixing for derived rngs (splitmix64 step).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace rulearn
