#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rulearn/types.hpp"

namespace rulearn {

// Everything a backend may know when a trial starts. `rule` is null except
// for rule-provided runs.
struct SessionInfo {
    std::string puzzle_id;
    std::string family;
    std::uint64_t env_seed = 0;
    std::string agent_variant;
    int trial_index = 0;
    int max_steps = 15;
    std::string goal_text;
    json disclosed;
    json rule;
};

// One selectable menu item, mirrored in structured form so scripted backends
// never have to parse their own prompt.
struct MenuEntry {
    int id = 0;  // 1-based, stable within a trial
    ActionKind kind = ActionKind::Perceptual;
    std::string object_id;
    std::string action_name;
    std::string description;
    InputSchema schema = InputSchema::None;
    json payload_info = json::object();
};

struct TurnRequest {
    std::string purpose;  // "select" or "abduce"
    std::string prompt_text;
    std::vector<MenuEntry> menu;           // empty for abduce calls
    json last_feedback;                    // null before the first action
    json rule;                             // null unless the variant discloses it
    std::string hypothesis;
    std::string plan;
    int interactive_steps_used = 0;
    int max_steps = 15;
    int retry_index = 0;
    std::string parse_error;  // set when re-prompting after a bad reply
};

// Per-trial conversation with a decision maker.
class DecisionSession {
public:
    virtual ~DecisionSession() = default;
    virtual std::string complete(const TurnRequest& request) = 0;
};

class DecisionBackend {
public:
    virtual ~DecisionBackend() = default;
    virtual std::string id() const = 0;
    virtual std::unique_ptr<DecisionSession> start_session(const SessionInfo& info) = 0;
    // Upper bound on concurrently useful sessions; 0 means unlimited.
    virtual int max_parallel_sessions() const { return 0; }
};

enum class ReplayExhaustion { RepeatLast, Fail };

// Deterministic canned-response backend; every session replays the same
// script from the top.
class ReplayBackend : public DecisionBackend {
public:
    ReplayBackend(std::vector<std::string> script,
                  ReplayExhaustion exhaustion = ReplayExhaustion::Fail,
                  std::string id = "replay");

    std::string id() const override { return id_; }
    std::unique_ptr<DecisionSession> start_session(const SessionInfo& info) override;

private:
    std::vector<std::string> script_;
    ReplayExhaustion exhaustion_;
    std::string id_;
};

// Uniform random action choice with payloads drawn from small legal sets;
// deterministic per (backend seed, env seed, trial index).
class RandomBackend : public DecisionBackend {
public:
    explicit RandomBackend(std::uint64_t seed, std::string id = "random");

    std::string id() const override { return id_; }
    std::unique_ptr<DecisionSession> start_session(const SessionInfo& info) override;

private:
    std::uint64_t seed_;
    std::string id_;
};

struct BackendConfig {
    std::string id = "http";
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string model_name;
    std::string api_key_env = "RULEARN_API_KEY";
    double temperature = 1.0;
    int timeout_ms = 60000;
    int transport_retries = 3;
    int initial_backoff_ms = 250;
    int rate_limit = 4;  // max in-flight requests

    static BackendConfig from_json(const json& j);
    json to_json() const;
};

// OpenAI-compatible chat-completion client. One user message per call; the
// reply is choices[0].message.content.
class HttpBackend : public DecisionBackend {
public:
    explicit HttpBackend(BackendConfig config);
    ~HttpBackend() override;

    std::string id() const override;
    std::unique_ptr<DecisionSession> start_session(const SessionInfo& info) override;
    int max_parallel_sessions() const override;

    // Single round trip with retry/backoff and rate limiting.
    std::string complete_once(const std::string& prompt);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rulearn
