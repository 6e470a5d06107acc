#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rulearn/backend.hpp"
#include "rulearn/environment.hpp"
#include "rulearn/types.hpp"

namespace rulearn {

enum class AgentVariant { Idea, Baseline, DeductionOnly };

std::string to_string(AgentVariant variant);
AgentVariant agent_variant_from_string(const std::string& s);

struct PromptBundle {
    AgentVariant variant = AgentVariant::Idea;
    std::string system_preamble;
    std::string goal;
    std::vector<MemoryRecord> permanent;
    std::vector<MemoryRecord> buffer;
    std::string hypothesis;
    std::string plan;
    std::vector<MenuEntry> menu;
    std::string last_result;
    std::string parse_error;
    int digest_budget = 8000;
};

std::string default_system_preamble();

// Deterministic prompt text. Past the digest budget, oldest buffer records
// are elided first (with a marker), then oldest permanent facts.
std::string render_prompt(const PromptBundle& bundle);

// Abduction prompt: asks for HYPOTHESIS / PLAN / KEEP instead of a menu pick.
std::string render_abduction_prompt(const PromptBundle& bundle);

struct ParsedSelection {
    int menu_id = 0;
    ActionInput input;
};

// Parses "ACTION: <n>" (+ "INPUT: <payload>" when the chosen entry needs
// one) against the menu. Returns nullopt and sets `error` on any breach.
std::optional<ParsedSelection> parse_action_reply(const std::string& reply,
                                                  const std::vector<MenuEntry>& menu,
                                                  std::string* error);

struct AbductionResult {
    std::string hypothesis;
    std::string plan;
    std::vector<std::string> kept_facts;
};

// Parses the HYPOTHESIS: / PLAN: / KEEP: block grammar.
std::optional<AbductionResult> parse_abduction_reply(const std::string& reply,
                                                     std::string* error);

// Family-specific disclosure used by rule-provided runs.
std::string ground_truth_rule_text(const Environment& env);

// Human summary of a committed action, used for memory records.
std::string describe_action(const MenuEntry& entry, const ActionInput& input);

}  // namespace rulearn
