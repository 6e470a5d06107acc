#include "rulearn/trace_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace rulearn {

namespace {

json event_to_json(const TraceEvent& event) {
    return json{{"record", "event"},
                {"index", event.index},
                {"kind", to_string(event.kind)},
                {"target", event.target},
                {"action", event.action_name},
                {"input", event.input},
                {"feedback", event.feedback},
                {"hypothesis_after", event.hypothesis_after},
                {"plan_after", event.plan_after},
                {"interactive_steps_used", event.interactive_steps_used},
                {"abduction_event", event.abduction_event}};
}

TraceEvent event_from_json(const json& j) {
    TraceEvent event;
    event.index = j.at("index").get<int>();
    event.kind = action_kind_from_string(j.at("kind").get<std::string>());
    event.target = j.at("target").get<std::string>();
    event.action_name = j.at("action").get<std::string>();
    event.input = j.at("input");
    event.feedback = j.at("feedback");
    event.hypothesis_after = j.at("hypothesis_after").get<std::string>();
    event.plan_after = j.at("plan_after").get<std::string>();
    event.interactive_steps_used = j.at("interactive_steps_used").get<int>();
    event.abduction_event = j.value("abduction_event", "");
    return event;
}

}  // namespace

std::string trace_to_jsonl(const TrialTrace& trace) {
    std::string out;
    json header{{"record", "header"},
                {"puzzle_id", trace.puzzle_id},
                {"family", trace.family},
                {"seed", trace.seed},
                {"agent_variant", trace.agent_variant},
                {"backend_id", trace.backend_id},
                {"max_steps", trace.max_steps},
                {"trial_index", trace.trial_index}};
    out += header.dump() + "\n";
    for (const auto& event : trace.events) out += event_to_json(event).dump() + "\n";
    if (trace.outcome) {
        json footer{{"record", "outcome"},
                    {"outcome", to_string(*trace.outcome)},
                    {"interactive_steps_used", trace.interactive_steps_used()},
                    {"events", trace.events.size()}};
        out += footer.dump() + "\n";
    }
    return out;
}

TrialTrace trace_from_jsonl(const std::string& text) {
    TrialTrace trace;
    bool seen_header = false;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        const std::string record = j.at("record").get<std::string>();
        if (record == "header") {
            if (seen_header) throw ValidationFailure("trace has two header records");
            seen_header = true;
            trace.puzzle_id = j.at("puzzle_id").get<std::string>();
            trace.family = j.at("family").get<std::string>();
            trace.seed = j.at("seed").get<std::uint64_t>();
            trace.agent_variant = j.at("agent_variant").get<std::string>();
            trace.backend_id = j.at("backend_id").get<std::string>();
            trace.max_steps = j.at("max_steps").get<int>();
            trace.trial_index = j.value("trial_index", 0);
        } else if (record == "event") {
            if (!seen_header) throw ValidationFailure("trace event before header");
            trace.events.push_back(event_from_json(j));
        } else if (record == "outcome") {
            if (!seen_header) throw ValidationFailure("trace outcome before header");
            trace.outcome = outcome_from_string(j.at("outcome").get<std::string>());
        } else {
            throw ValidationFailure("unknown trace record kind: " + record);
        }
    }
    if (!seen_header) throw ValidationFailure("trace has no header record");
    return trace;
}

void save_trace(const std::string& path, const TrialTrace& trace) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write trace file: " + path);
    out << trace_to_jsonl(trace);
}

std::optional<TrialTrace> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::stringstream buffer;
    buffer << in.rdbuf();
    return trace_from_jsonl(buffer.str());
}

std::string transcripts_to_jsonl(const std::vector<TranscriptRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json j{{"call_index", r.call_index},
               {"purpose", r.purpose},
               {"request_text", r.request_text},
               {"response_text", r.response_text},
               {"parse_status", r.parse_status},
               {"retry_index", r.retry_index}};
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<TranscriptRecord> transcripts_from_jsonl(const std::string& text) {
    std::vector<TranscriptRecord> records;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json j = json::parse(line);
        TranscriptRecord r;
        r.call_index = j.at("call_index").get<int>();
        r.purpose = j.at("purpose").get<std::string>();
        r.request_text = j.at("request_text").get<std::string>();
        r.response_text = j.at("response_text").get<std::string>();
        r.parse_status = j.at("parse_status").get<std::string>();
        r.retry_index = j.at("retry_index").get<int>();
        records.push_back(std::move(r));
    }
    return records;
}

void save_transcripts(const std::string& path, const std::vector<TranscriptRecord>& records) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write transcript file: " + path);
    out << transcripts_to_jsonl(records);
}

}  // namespace rulearn
