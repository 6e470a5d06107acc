#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "rulearn/rng.hpp"
#include "rulearn/types.hpp"

using namespace rulearn;

TEST_CASE("mix_seed is deterministic, asymmetric, and spreads nearby inputs") {
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 32; ++a)
        for (std::uint64_t b = 0; b < 32; ++b) seen.insert(mix_seed(a, b));
    CHECK(seen.size() == 32 * 32);
}

TEST_CASE("format_double renders 6 significant digits by default") {
    CHECK(format_double(12.0) == "12");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(-3.25) == "-3.25");
    CHECK(format_double(7.8902968936552755) == "7.8903");
    CHECK(format_double(1234567.0) == "1.23457e+06");
    CHECK(format_double(2.0, 12) == "2");
}

TEST_CASE("trim and to_upper") {
    CHECK(trim("  ab \t\n") == "ab");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
    CHECK(to_upper("aBc1") == "ABC1");
}

TEST_CASE("enum string round trips") {
    for (ActionKind k : {ActionKind::Perceptual, ActionKind::Interactive, ActionKind::Abductive})
        CHECK(action_kind_from_string(to_string(k)) == k);
    for (Outcome o : {Outcome::Solved, Outcome::StepLimit, Outcome::BackendFailure})
        CHECK(outcome_from_string(to_string(o)) == o);
    CHECK_THROWS_AS(action_kind_from_string("bogus"), Error);
    CHECK_THROWS_AS(outcome_from_string("bogus"), Error);
}

TEST_CASE("action input json round trips per schema") {
    ActionInput number = 4.5;
    CHECK(std::get<double>(input_from_json(input_to_json(number), InputSchema::Number)) == 4.5);

    ActionInput triple = DigitTriple{{1, 0, 3}};
    CHECK(std::get<DigitTriple>(input_from_json(input_to_json(triple), InputSchema::DigitTriple)) ==
          DigitTriple{{1, 0, 3}});

    ActionInput pair = MaterialPair{"AB", "C"};
    CHECK(std::get<MaterialPair>(
              input_from_json(input_to_json(pair), InputSchema::MaterialPair)) ==
          MaterialPair{"AB", "C"});

    ActionInput values = ValueAssignment{{{"a", 3}, {"b", 2}}};
    CHECK(std::get<ValueAssignment>(
              input_from_json(input_to_json(values), InputSchema::ValueAssignment)) ==
          ValueAssignment{{{"a", 3}, {"b", 2}}});

    CHECK(input_to_json(std::monostate{}).is_null());
    CHECK(std::holds_alternative<std::monostate>(input_from_json(nullptr, InputSchema::None)));
}

TEST_CASE("invalid feedback never consumes a step") {
    Feedback f = Feedback::invalid("nope");
    CHECK(f.type == "invalid");
    CHECK(f.text == "nope");
    CHECK_FALSE(f.consumes_step);
    CHECK_FALSE(f.solved);
}

TEST_CASE("feedback json keeps structured data and omits it when empty") {
    Feedback f;
    f.type = "evaluation";
    f.text = "F1(2) = 8.";
    f.data["value"] = 8.0;
    json j = f.to_json();
    CHECK(j["type"] == "evaluation");
    CHECK(j["data"]["value"] == 8.0);
    Feedback bare;
    bare.type = "perception";
    CHECK_FALSE(bare.to_json().contains("data"));
}

TEST_CASE("canonical action keys equate trimmed, case-folded payloads") {
    std::string a = canonical_action_key(ActionKind::Interactive, "reactor", "react",
                                         MaterialPair{"ab ", " c"});
    std::string b = canonical_action_key(ActionKind::Interactive, "reactor", "react",
                                         MaterialPair{"AB", "C"});
    CHECK(a == b);

    std::string x = canonical_action_key(ActionKind::Interactive, "F1", "evaluate", 1.0);
    std::string y = canonical_action_key(ActionKind::Interactive, "F1", "evaluate", 2.0);
    CHECK(x != y);

    std::string assigned = canonical_action_key(ActionKind::Interactive, "console", "submit",
                                                ValueAssignment{{{"a", 3}, {"b", 2}}});
    std::string reordered = canonical_action_key(ActionKind::Interactive, "console", "submit",
                                                 ValueAssignment{{{"b", 2}, {"a", 3}}});
    CHECK(assigned == reordered);
}

TEST_CASE("canonical event keys match canonical action keys across json forms") {
    TraceEvent event;
    event.kind = ActionKind::Interactive;
    event.target = "reactor";
    event.action_name = "react";
    event.input = json::array({"ab", "c"});
    CHECK(canonical_event_key(event) ==
          canonical_action_key(ActionKind::Interactive, "reactor", "react",
                               MaterialPair{"AB", "C"}));

    TraceEvent number;
    number.kind = ActionKind::Interactive;
    number.target = "F1";
    number.action_name = "evaluate";
    number.input = 1;
    CHECK(canonical_event_key(number) ==
          canonical_action_key(ActionKind::Interactive, "F1", "evaluate", 1.0));

    TraceEvent triple;
    triple.kind = ActionKind::Interactive;
    triple.target = "door";
    triple.action_name = "enter_code";
    triple.input = json::array({0, 0, 3});
    CHECK(canonical_event_key(triple) ==
          canonical_action_key(ActionKind::Interactive, "door", "enter_code",
                               DigitTriple{{0, 0, 3}}));
}

TEST_CASE("rng is deterministic and respects bounds") {
    Rng a(99);
    Rng b(99);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    Rng r(7);
    for (int i = 0; i < 200; ++i) {
        int v = r.below(5);
        CHECK(v >= 0);
        CHECK(v < 5);
        int w = r.range(3, 9);
        CHECK(w >= 3);
        CHECK(w <= 9);
        double u = r.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    CHECK_THROWS_AS(r.below(0), Error);
}

TEST_CASE("rng shuffle is a deterministic permutation") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> w = v;
    Rng a(123);
    Rng b(123);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("trace step counter reads from the last event") {
    TrialTrace trace;
    CHECK(trace.interactive_steps_used() == 0);
    TraceEvent e1;
    e1.interactive_steps_used = 1;
    TraceEvent e2;
    e2.interactive_steps_used = 2;
    trace.events = {e1, e2};
    CHECK(trace.interactive_steps_used() == 2);
    CHECK_FALSE(trace.complete());
    trace.outcome = Outcome::Solved;
    CHECK(trace.complete());
    CHECK(trace.solved());
}

TEST_CASE("abduction_count counts only marked events") {
    TrialTrace trace;
    TraceEvent plain;
    TraceEvent initial;
    initial.abduction_event = "initial";
    TraceEvent refinement;
    refinement.abduction_event = "refinement";
    trace.events = {plain, initial, plain, refinement};
    CHECK(trace.abduction_count() == 2);
}
