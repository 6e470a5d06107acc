#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rulearn/types.hpp"

namespace rulearn {

// Descriptor of one interactive action bound to an object. `payload_info`
// carries the current legal argument sets (digits, materials, constant ids)
// so menus, parsers, and scripted backends stay in sync with the
// environment state.
struct InteractiveActionDesc {
    std::string name;
    std::string description;
    InputSchema schema = InputSchema::None;
    json payload_info = json::object();
};

struct ObjectView {
    std::string id;
    std::string description;
    std::vector<InteractiveActionDesc> actions;
};

// A puzzle environment: a deterministic state machine with named objects,
// typed interactive actions, and a goal predicate.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string family() const = 0;
    virtual std::uint64_t seed() const = 0;
    virtual std::string goal_text() const = 0;

    // Human-readable disclosure of the hidden rule (used when the rule is
    // handed to the agent up front).
    virtual std::string rule_text() const = 0;

    // Structure the agent is allowed to know from the start.
    virtual json disclosed_json() const = 0;

    // Structured form of the hidden rule, for rule-provided runs.
    virtual json rule_json() const = 0;

    virtual std::vector<ObjectView> objects() const = 0;

    // Result of a perceptual action on one object. Never consumes a step.
    virtual Feedback perceive(const std::string& object_id) const;

    // Execute one interactive action. Returns invalid() feedback (with
    // consumes_step=false) for precondition breaches.
    virtual Feedback apply(const std::string& object_id, const std::string& action_name,
                           const ActionInput& input) = 0;

    virtual bool solved() const = 0;

    // Puzzle-file body; loading it back yields an identical environment.
    virtual json to_json() const = 0;

    virtual std::unique_ptr<Environment> clone() const = 0;

    ObjectView find_object(const std::string& object_id) const;
    bool has_object(const std::string& object_id) const;
};

// Construct an environment of any family from its puzzle-file JSON.
std::unique_ptr<Environment> environment_from_json(const json& j);

}  // namespace rulearn
