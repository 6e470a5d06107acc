#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rulearn/trace_io.hpp"
#include "test_support.hpp"

using namespace rulearn;
using test_support::TempDir;

namespace {

TrialTrace sample_trace(bool with_outcome = true) {
    TrialTrace t;
    t.puzzle_id = "rx-easy-01";
    t.family = "reactor";
    t.seed = 0xfeedbeefULL;
    t.agent_variant = "idea";
    t.backend_id = "replay";
    t.max_steps = 15;
    t.trial_index = 3;

    TraceEvent perceive;
    perceive.index = 0;
    perceive.kind = ActionKind::Perceptual;
    perceive.target = "reactor";
    perceive.action_name = "perceive";
    perceive.input = json(nullptr);
    perceive.feedback = json{{"type", "description"}, {"text", "a reactor"}, {"solved", false}};
    t.events.push_back(perceive);

    TraceEvent abduce;
    abduce.index = 1;
    abduce.kind = ActionKind::Abductive;
    abduce.action_name = "abduce";
    abduce.input = json(nullptr);
    abduce.feedback = json{{"type", "abduction"}, {"text", "revised"}, {"solved", false}};
    abduce.hypothesis_after = "concatenation";
    abduce.plan_after = "react AB with C";
    abduce.abduction_event = "initial";
    t.events.push_back(abduce);

    TraceEvent react;
    react.index = 2;
    react.kind = ActionKind::Interactive;
    react.target = "reactor";
    react.action_name = "react";
    react.input = json::array({"AB", "C"});
    react.feedback =
        json{{"type", "reaction"}, {"text", "Reacting AB with C produced ABC."},
             {"solved", false},
             {"data", json{{"products", json::array({"ABC"})}}}};
    react.hypothesis_after = "concatenation";
    react.plan_after = "react AB with C";
    react.interactive_steps_used = 1;
    t.events.push_back(react);

    if (with_outcome) t.outcome = Outcome::StepLimit;
    return t;
}

}  // namespace

TEST_CASE("traces round trip through jsonl byte for byte") {
    TrialTrace trace = sample_trace();
    std::string text = trace_to_jsonl(trace);
    TrialTrace loaded = trace_from_jsonl(text);

    CHECK(loaded.puzzle_id == trace.puzzle_id);
    CHECK(loaded.family == trace.family);
    CHECK(loaded.seed == trace.seed);
    CHECK(loaded.agent_variant == trace.agent_variant);
    CHECK(loaded.backend_id == trace.backend_id);
    CHECK(loaded.max_steps == trace.max_steps);
    CHECK(loaded.trial_index == trace.trial_index);
    REQUIRE(loaded.events.size() == trace.events.size());
    for (size_t i = 0; i < trace.events.size(); ++i) {
        CHECK(loaded.events[i].kind == trace.events[i].kind);
        CHECK(loaded.events[i].input == trace.events[i].input);
        CHECK(loaded.events[i].feedback == trace.events[i].feedback);
        CHECK(loaded.events[i].abduction_event == trace.events[i].abduction_event);
    }
    CHECK(loaded.outcome == trace.outcome);
    CHECK(trace_to_jsonl(loaded) == text);
}

TEST_CASE("the header line carries the full trial identity") {
    std::string text = trace_to_jsonl(sample_trace());
    std::string first = text.substr(0, text.find('\n'));
    json header = json::parse(first);
    CHECK(header["record"] == "header");
    CHECK(header["puzzle_id"] == "rx-easy-01");
    CHECK(header["family"] == "reactor");
    CHECK(header["seed"] == 0xfeedbeefULL);
    CHECK(header["agent_variant"] == "idea");
    CHECK(header["backend_id"] == "replay");
    CHECK(header["max_steps"] == 15);
    CHECK(header["trial_index"] == 3);
}

TEST_CASE("the outcome footer summarizes the trial and is omitted if unfinished") {
    std::string text = trace_to_jsonl(sample_trace());
    std::string last = text.substr(text.rfind('\n', text.size() - 2) + 1);
    json footer = json::parse(last);
    CHECK(footer["record"] == "outcome");
    CHECK(footer["outcome"] == "step_limit");
    CHECK(footer["interactive_steps_used"] == 1);
    CHECK(footer["events"] == 3);

    std::string unfinished = trace_to_jsonl(sample_trace(false));
    CHECK(unfinished.find("\"record\":\"outcome\"") == std::string::npos);
    TrialTrace loaded = trace_from_jsonl(unfinished);
    CHECK_FALSE(loaded.complete());
    CHECK_FALSE(loaded.solved());
}

TEST_CASE("malformed trace text is rejected with a pointed error") {
    std::string good = trace_to_jsonl(sample_trace());
    CHECK_THROWS_WITH_AS(trace_from_jsonl(good + good), "trace has two header records",
                         ValidationFailure);
    CHECK_THROWS_WITH_AS(trace_from_jsonl(""), "trace has no header record",
                         ValidationFailure);

    std::string header_line = good.substr(0, good.find('\n') + 1);
    std::string event_line = good.substr(good.find('\n') + 1);
    event_line = event_line.substr(0, event_line.find('\n') + 1);
    CHECK_THROWS_WITH_AS(trace_from_jsonl(event_line), "trace event before header",
                         ValidationFailure);
    CHECK_THROWS_WITH_AS(
        trace_from_jsonl("{\"record\":\"outcome\",\"outcome\":\"solved\"}\n"),
        "trace outcome before header", ValidationFailure);
    CHECK_THROWS_WITH_AS(trace_from_jsonl(header_line + "{\"record\":\"mystery\"}\n"),
                         "unknown trace record kind: mystery", ValidationFailure);
}

TEST_CASE("blank lines in a trace file are harmless") {
    std::string text = trace_to_jsonl(sample_trace());
    size_t first_newline = text.find('\n');
    std::string padded = text.substr(0, first_newline + 1) + "\n  \n" +
                         text.substr(first_newline + 1) + "\n";
    TrialTrace loaded = trace_from_jsonl(padded);
    CHECK(loaded.events.size() == 3);
    CHECK(loaded.complete());
}

TEST_CASE("save and load traces through nested directories") {
    TempDir dir;
    std::string path = dir.sub("a/b/c.trace.jsonl");
    TrialTrace trace = sample_trace();
    save_trace(path, trace);

    auto loaded = load_trace(path);
    REQUIRE(loaded.has_value());
    CHECK(trace_to_jsonl(*loaded) == trace_to_jsonl(trace));

    CHECK_FALSE(load_trace(dir.sub("missing.jsonl")).has_value());

    std::string bad_path = dir.sub("bad.jsonl");
    std::ofstream(bad_path) << "{\"record\":\"event\"}\n";
    CHECK_THROWS_AS(load_trace(bad_path), ValidationFailure);
}

TEST_CASE("transcripts round trip with their parse status and retries") {
    std::vector<TranscriptRecord> records;
    TranscriptRecord a;
    a.call_index = 0;
    a.purpose = "select";
    a.request_text = "== Goal ==\nescape\n";
    a.response_text = "ACTION: 7";
    a.parse_status = "action number 7 is not on the menu (1-2)";
    a.retry_index = 0;
    records.push_back(a);
    TranscriptRecord b;
    b.call_index = 1;
    b.purpose = "abduce";
    b.request_text = "revise";
    b.response_text = "HYPOTHESIS: h\nPLAN: p";
    b.parse_status = "ok";
    b.retry_index = 1;
    records.push_back(b);

    std::string text = transcripts_to_jsonl(records);
    auto loaded = transcripts_from_jsonl(text);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].call_index == 0);
    CHECK(loaded[0].purpose == "select");
    CHECK(loaded[0].request_text == records[0].request_text);
    CHECK(loaded[0].response_text == "ACTION: 7");
    CHECK(loaded[0].parse_status == records[0].parse_status);
    CHECK(loaded[1].retry_index == 1);

    TempDir dir;
    std::string path = dir.sub("run/x.transcript.jsonl");
    save_transcripts(path, records);
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str() == text);
}
