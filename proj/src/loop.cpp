#include "rulearn/loop.hpp"

#include <algorithm>
#include <unordered_set>

namespace rulearn {

namespace {

json abduction_feedback_json(bool revised) {
    Feedback f;
    f.type = "abduction";
    f.consumes_step = false;
    f.text = revised ? "Hypothesis and plan revised."
                     : "No usable revision produced; hypothesis and plan kept.";
    return f.to_json();
}

std::vector<MenuEntry> build_menu(const std::vector<ActionSpec>& space) {
    std::vector<MenuEntry> menu;
    int id = 0;
    for (const auto& spec : space) {
        MenuEntry entry;
        entry.id = ++id;
        entry.kind = spec.kind;
        entry.object_id = spec.object_id;
        entry.action_name = spec.action_name;
        entry.description = spec.description;
        entry.schema = spec.schema;
        entry.payload_info = spec.payload_info;
        menu.push_back(std::move(entry));
    }
    return menu;
}

// Interactive entries track live environment state (descriptions and legal
// payload sets); perceptual and abductive entries are static.
void refresh_action_space(const Environment& env, AgentState& state) {
    std::vector<ObjectView> views = env.objects();
    for (auto& spec : state.action_space) {
        if (spec.kind != ActionKind::Interactive) continue;
        for (const auto& view : views) {
            if (view.id != spec.object_id) continue;
            for (const auto& desc : view.actions) {
                if (desc.name != spec.action_name) continue;
                spec.description = desc.description;
                spec.schema = desc.schema;
                spec.payload_info = desc.payload_info;
            }
        }
    }
}

void unlock_interactive_actions(const Environment& env, AgentState& state,
                                const std::string& object_id) {
    for (const auto& view : env.objects()) {
        if (view.id != object_id) continue;
        for (const auto& desc : view.actions) {
            bool present = std::any_of(
                state.action_space.begin(), state.action_space.end(), [&](const ActionSpec& s) {
                    return s.matches(ActionKind::Interactive, object_id, desc.name);
                });
            if (present) continue;
            ActionSpec spec;
            spec.kind = ActionKind::Interactive;
            spec.object_id = object_id;
            spec.action_name = desc.name;
            spec.description = desc.description;
            spec.schema = desc.schema;
            spec.payload_info = desc.payload_info;
            state.action_space.push_back(std::move(spec));
        }
    }
}

void remember_feedback(AgentState& state, const Feedback& feedback) {
    if (feedback.data.contains("records")) {
        for (const auto& record : feedback.data["records"])
            state.buffer_memory.push_back(
                {RecordKind::Observation, record.get<std::string>()});
        return;
    }
    state.buffer_memory.push_back({RecordKind::Observation, feedback.text});
}

}  // namespace

SessionInfo make_session_info(const Environment& env, const std::string& puzzle_id,
                              AgentVariant variant, int trial_index,
                              const LoopOptions& options) {
    SessionInfo info;
    info.puzzle_id = puzzle_id;
    info.family = env.family();
    info.env_seed = env.seed();
    info.agent_variant = to_string(variant);
    info.trial_index = trial_index;
    info.max_steps = options.max_steps;
    info.goal_text = env.goal_text();
    info.disclosed = env.disclosed_json();
    info.rule = variant == AgentVariant::DeductionOnly ? env.rule_json() : json(nullptr);
    return info;
}

void consolidate_memory(AgentState& state, const AbductionResult& result) {
    for (const auto& record : state.buffer_memory)
        if (record.kind == RecordKind::Observation) state.permanent_memory.push_back(record);
    for (const auto& fact : result.kept_facts)
        state.permanent_memory.push_back({RecordKind::Observation, fact});
    state.buffer_memory.clear();
    state.hypothesis = result.hypothesis;
    state.plan = result.plan;
}

LoopResult run_loop(Environment& env, DecisionBackend& backend, const SessionInfo& info,
                    const LoopOptions& options) {
    LoopResult result;
    TrialTrace& trace = result.trace;
    trace.puzzle_id = info.puzzle_id;
    trace.family = info.family;
    trace.seed = info.env_seed;
    trace.agent_variant = info.agent_variant;
    trace.backend_id = backend.id();
    trace.max_steps = options.max_steps;
    trace.trial_index = info.trial_index;

    const AgentVariant variant = agent_variant_from_string(info.agent_variant);

    AgentState state;
    state.goal = info.goal_text;
    for (const auto& view : env.objects()) {
        ActionSpec spec;
        spec.kind = ActionKind::Perceptual;
        spec.object_id = view.id;
        spec.action_name = "perceive";
        spec.description = "take a close look at " + view.id;
        state.action_space.push_back(std::move(spec));
    }
    if (variant == AgentVariant::Idea) {
        ActionSpec abduce;
        abduce.kind = ActionKind::Abductive;
        abduce.action_name = "abduce";
        abduce.description = "step back to revise your hypothesis and plan";
        state.action_space.push_back(std::move(abduce));
    }
    if (variant == AgentVariant::DeductionOnly) state.hypothesis = env.rule_text();

    StepBudget budget;
    budget.max_steps = options.max_steps;
    budget.non_interactive_cap = options.non_interactive_cap;

    if (env.solved()) {
        trace.outcome = Outcome::Solved;
        return result;
    }

    std::unique_ptr<DecisionSession> session = backend.start_session(info);
    int call_index = 0;
    int abductions = 0;
    json last_feedback;
    std::string last_result_text;
    std::optional<Outcome> outcome;

    auto transcript = [&](const std::string& purpose, const std::string& request,
                          const std::string& response, const std::string& status, int retry) {
        result.transcripts.push_back({call_index++, purpose, request, response, status, retry});
    };

    auto record_event = [&](ActionKind kind, const std::string& target,
                            const std::string& action_name, const json& input,
                            const json& feedback, const std::string& abduction_event) {
        TraceEvent event;
        event.index = static_cast<int>(trace.events.size());
        event.kind = kind;
        event.target = target;
        event.action_name = action_name;
        event.input = input;
        event.feedback = feedback;
        event.hypothesis_after = state.hypothesis;
        event.plan_after = state.plan;
        event.interactive_steps_used = budget.interactive_steps_used;
        event.abduction_event = abduction_event;
        trace.events.push_back(std::move(event));
    };

    auto make_request = [&](const std::string& purpose, const std::string& prompt,
                            const std::vector<MenuEntry>& menu, int retry,
                            const std::string& parse_error) {
        TurnRequest request;
        request.purpose = purpose;
        request.prompt_text = prompt;
        request.menu = menu;
        request.last_feedback = last_feedback;
        request.rule =
            variant == AgentVariant::DeductionOnly ? env.rule_json() : json(nullptr);
        request.hypothesis = state.hypothesis;
        request.plan = state.plan;
        request.interactive_steps_used = budget.interactive_steps_used;
        request.max_steps = budget.max_steps;
        request.retry_index = retry;
        request.parse_error = parse_error;
        return request;
    };

    while (!outcome) {
        refresh_action_space(env, state);
        state.goal = env.goal_text();
        if (variant == AgentVariant::DeductionOnly)
            state.goal += " Ground-truth rule: " + env.rule_text();

        std::vector<MenuEntry> menu = build_menu(state.action_space);

        PromptBundle bundle;
        bundle.variant = variant;
        bundle.system_preamble = default_system_preamble();
        bundle.goal = state.goal;
        bundle.permanent = state.permanent_memory;
        bundle.buffer = state.buffer_memory;
        bundle.hypothesis = state.hypothesis;
        bundle.plan = state.plan;
        bundle.menu = menu;
        bundle.last_result = last_result_text;
        bundle.digest_budget = options.digest_budget;

        // Select (and for interactive actions, execute) with parse retries.
        // Rejected replies and precondition breaches never cost a step.
        const MenuEntry* chosen = nullptr;
        ActionInput chosen_input;
        Feedback feedback;
        bool executed = false;
        std::string error;
        try {
            for (int attempt = 0; attempt <= options.retry_limit && !executed; ++attempt) {
                bundle.parse_error = error;
                std::string prompt = render_prompt(bundle);
                std::string response =
                    session->complete(make_request("select", prompt, menu, attempt, error));
                std::string parse_error;
                std::optional<ParsedSelection> selection =
                    parse_action_reply(response, menu, &parse_error);
                if (!selection) {
                    transcript("select", prompt, response, parse_error, attempt);
                    error = parse_error;
                    continue;
                }
                const MenuEntry& entry = menu[static_cast<size_t>(selection->menu_id - 1)];
                if (entry.kind == ActionKind::Interactive) {
                    Feedback candidate =
                        env.apply(entry.object_id, entry.action_name, selection->input);
                    if (candidate.type == "invalid") {
                        transcript("select", prompt, response, "invalid: " + candidate.text,
                                   attempt);
                        error = candidate.text;
                        continue;
                    }
                    feedback = std::move(candidate);
                } else if (entry.kind == ActionKind::Perceptual) {
                    feedback = env.perceive(entry.object_id);
                    if (feedback.type == "invalid") {
                        transcript("select", prompt, response, "invalid: " + feedback.text,
                                   attempt);
                        error = feedback.text;
                        continue;
                    }
                }
                transcript("select", prompt, response, "ok", attempt);
                chosen = &entry;
                chosen_input = selection->input;
                executed = true;
            }
        } catch (const BackendError& e) {
            if (e.auth_failure) throw;
            outcome = Outcome::BackendFailure;
            break;
        }

        if (!executed) {
            if (outcome) break;
            // Forced perceptual no-op after exhausted retries.
            const ActionSpec* fallback = nullptr;
            for (const auto& spec : state.action_space)
                if (spec.kind == ActionKind::Perceptual) {
                    fallback = &spec;
                    break;
                }
            if (!fallback) {
                outcome = Outcome::StepLimit;
                break;
            }
            feedback = env.perceive(fallback->object_id);
            remember_feedback(state, feedback);
            budget.non_interactive_used++;
            record_event(ActionKind::Perceptual, fallback->object_id, "perceive", nullptr,
                         feedback.to_json(), "");
            last_feedback = feedback.to_json();
            last_result_text = feedback.text;
            if (budget.non_interactive_used >= budget.non_interactive_cap)
                outcome = Outcome::StepLimit;
            continue;
        }

        if (chosen->kind == ActionKind::Abductive) {
            budget.non_interactive_used++;
            bool revised = false;
            std::string abduce_error;
            try {
                for (int attempt = 0; attempt <= options.retry_limit && !revised; ++attempt) {
                    bundle.parse_error = abduce_error;
                    std::string prompt = render_abduction_prompt(bundle);
                    std::string response = session->complete(
                        make_request("abduce", prompt, {}, attempt, abduce_error));
                    std::string parse_error;
                    std::optional<AbductionResult> abduction =
                        parse_abduction_reply(response, &parse_error);
                    if (!abduction) {
                        transcript("abduce", prompt, response, parse_error, attempt);
                        abduce_error = parse_error;
                        continue;
                    }
                    transcript("abduce", prompt, response, "ok", attempt);
                    consolidate_memory(state, *abduction);
                    revised = true;
                }
            } catch (const BackendError& e) {
                if (e.auth_failure) throw;
                outcome = Outcome::BackendFailure;
                break;
            }
            std::string abduction_event;
            if (revised) abduction_event = ++abductions == 1 ? "initial" : "refinement";
            json fj = abduction_feedback_json(revised);
            record_event(ActionKind::Abductive, "", "abduce", nullptr, fj, abduction_event);
            last_feedback = fj;
            last_result_text = fj["text"].get<std::string>();
            if (budget.non_interactive_used >= budget.non_interactive_cap)
                outcome = Outcome::StepLimit;
            continue;
        }

        if (chosen->kind == ActionKind::Perceptual) {
            budget.non_interactive_used++;
            unlock_interactive_actions(env, state, chosen->object_id);
            remember_feedback(state, feedback);
            record_event(ActionKind::Perceptual, chosen->object_id, "perceive", nullptr,
                         feedback.to_json(), "");
            last_feedback = feedback.to_json();
            last_result_text = feedback.text;
            if (budget.non_interactive_used >= budget.non_interactive_cap)
                outcome = Outcome::StepLimit;
            continue;
        }

        // Interactive, already executed.
        if (feedback.consumes_step) budget.interactive_steps_used++;
        std::string summary = describe_action(*chosen, chosen_input);
        state.buffer_memory.push_back(
            {RecordKind::ActionNote,
             "step " + std::to_string(budget.interactive_steps_used) + ": " + summary});
        state.buffer_memory.push_back({RecordKind::Observation,
                                       summary + " -> " + feedback.text});
        record_event(ActionKind::Interactive, chosen->object_id, chosen->action_name,
                     input_to_json(chosen_input), feedback.to_json(), "");
        last_feedback = feedback.to_json();
        last_result_text = summary + " -> " + feedback.text;

        if (feedback.solved)
            outcome = Outcome::Solved;
        else if (budget.interactive_steps_used >= budget.max_steps)
            outcome = Outcome::StepLimit;
    }

    trace.outcome = outcome;
    return result;
}

bool replay_trace(const TrialTrace& trace, Environment& env, std::string* mismatch) {
    auto set_mismatch = [&](int index, const std::string& detail) {
        if (mismatch) *mismatch = "event " + std::to_string(index) + ": " + detail;
        return false;
    };

    int steps = 0;
    for (const auto& event : trace.events) {
        Feedback feedback;
        if (event.kind == ActionKind::Abductive) {
            // Backend-side only; nothing to recompute against the environment.
            continue;
        } else if (event.kind == ActionKind::Perceptual) {
            feedback = env.perceive(event.target);
        } else {
            InputSchema schema = InputSchema::None;
            bool found = false;
            for (const auto& view : env.objects()) {
                if (view.id != event.target) continue;
                for (const auto& desc : view.actions)
                    if (desc.name == event.action_name) {
                        schema = desc.schema;
                        found = true;
                    }
            }
            if (!found)
                return set_mismatch(event.index, "action " + event.action_name + " on " +
                                                     event.target + " does not exist");
            feedback =
                env.apply(event.target, event.action_name,
                          input_from_json(event.input, schema));
            if (feedback.consumes_step) ++steps;
        }
        if (feedback.to_json().dump() != event.feedback.dump())
            return set_mismatch(event.index, "feedback diverged: got " +
                                                 feedback.to_json().dump() + ", trace has " +
                                                 event.feedback.dump());
        if (steps != event.interactive_steps_used)
            return set_mismatch(event.index,
                                "step counter diverged: got " + std::to_string(steps) +
                                    ", trace has " +
                                    std::to_string(event.interactive_steps_used));
    }
    if (trace.outcome == Outcome::Solved && !env.solved())
        return set_mismatch(static_cast<int>(trace.events.size()),
                            "trace says solved but environment is not");
    if (mismatch) mismatch->clear();
    return true;
}

}  // namespace rulearn
