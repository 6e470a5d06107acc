#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "rulearn/environment.hpp"
#include "rulearn/rng.hpp"
#include "test_support.hpp"

using namespace rulearn;
using test_support::sample_rx_env;

namespace {

std::multiset<char> char_multiset(const std::vector<std::string>& strings) {
    std::multiset<char> out;
    for (const auto& s : strings)
        for (char c : s) out.insert(c);
    return out;
}

// Brute-force iterative-deepening search used to cross-check BFS optimality.
bool dfs_reaches(std::vector<std::string> inventory, ReactorRule rule, const std::string& target,
                 int depth, int max_len) {
    if (std::find(inventory.begin(), inventory.end(), target) != inventory.end()) return true;
    if (depth == 0) return false;
    for (size_t i = 0; i < inventory.size(); ++i)
        for (size_t j = 0; j < inventory.size(); ++j) {
            std::vector<std::string> products = react_products(rule, inventory[i], inventory[j]);
            bool fizzles = std::any_of(products.begin(), products.end(), [&](const auto& p) {
                return static_cast<int>(p.size()) > max_len;
            });
            if (fizzles) continue;
            std::vector<std::string> next = inventory;
            bool grew = false;
            for (const auto& p : products)
                if (std::find(next.begin(), next.end(), p) == next.end()) {
                    next.push_back(p);
                    grew = true;
                }
            if (!grew) continue;
            if (dfs_reaches(std::move(next), rule, target, depth - 1, max_len)) return true;
        }
    return false;
}

int brute_force_shortest(const std::vector<std::string>& inventory, ReactorRule rule,
                         const std::string& target, int cap, int max_len) {
    for (int depth = 0; depth <= cap; ++depth)
        if (dfs_reaches(inventory, rule, target, depth, max_len)) return depth;
    return -1;
}

}  // namespace

TEST_CASE("each combination rule reproduces its reference reactions") {
    CHECK(react_products(ReactorRule::SimpleConcat, "XY", "Z") ==
          std::vector<std::string>{"XYZ"});
    CHECK(react_products(ReactorRule::SimpleConcat, "ABC", "DE") ==
          std::vector<std::string>{"ABCDE"});
    CHECK(react_products(ReactorRule::ReverseConcat, "XY", "Z") ==
          std::vector<std::string>{"ZXY"});
    CHECK(react_products(ReactorRule::ReverseConcat, "ABC", "DE") ==
          std::vector<std::string>{"DEABC"});
    CHECK(react_products(ReactorRule::MiddleInsert, "XY", "Z") ==
          std::vector<std::string>{"XZY"});
    CHECK(react_products(ReactorRule::MiddleInsert, "ABC", "DE") ==
          std::vector<std::string>{"ABDEC"});
    CHECK(react_products(ReactorRule::PrefixReplace, "XY", "Z") ==
          std::vector<std::string>{"XZ", "Y"});
    CHECK(react_products(ReactorRule::PrefixReplace, "ABC", "DE") ==
          std::vector<std::string>{"ADE", "BC"});
}

TEST_CASE("single-character first operands follow the same split rules") {
    CHECK(react_products(ReactorRule::MiddleInsert, "A", "B") == std::vector<std::string>{"AB"});
    CHECK(react_products(ReactorRule::PrefixReplace, "A", "B") ==
          std::vector<std::string>{"AB"});
    CHECK(react_products(ReactorRule::MiddleInsert, "ABCD", "X") ==
          std::vector<std::string>{"ABXCD"});
}

TEST_CASE("character conservation and length laws hold for random reactions") {
    Rng rng(42);
    const std::string alphabet = "ABCDE";
    for (int trial = 0; trial < 1000; ++trial) {
        std::string a, b;
        int la = rng.range(1, 4);
        int lb = rng.range(1, 4);
        for (int i = 0; i < la; ++i) a += alphabet[static_cast<size_t>(rng.below(5))];
        for (int i = 0; i < lb; ++i) b += alphabet[static_cast<size_t>(rng.below(5))];
        for (ReactorRule rule : kAllReactorRules) {
            std::vector<std::string> products = react_products(rule, a, b);
            CHECK(char_multiset(products) == char_multiset({a, b}));
            size_t total = 0;
            for (const auto& p : products) total += p.size();
            CHECK(total == a.size() + b.size());
            if (rule == ReactorRule::PrefixReplace)
                CHECK(products.size() == (a.size() >= 2 ? 2 : 1));
            else
                CHECK(products.size() == 1);
        }
    }
}

TEST_CASE("a two-character probe separates all four rules; a one-character probe cannot") {
    std::map<ReactorRule, std::vector<std::string>> outputs;
    for (ReactorRule rule : kAllReactorRules) outputs[rule] = react_products(rule, "AB", "C");
    CHECK(outputs[ReactorRule::SimpleConcat] == std::vector<std::string>{"ABC"});
    CHECK(outputs[ReactorRule::ReverseConcat] == std::vector<std::string>{"CAB"});
    CHECK(outputs[ReactorRule::MiddleInsert] == std::vector<std::string>{"ACB"});
    CHECK(outputs[ReactorRule::PrefixReplace] == std::vector<std::string>{"AC", "B"});

    for (ReactorRule rule : kAllReactorRules) {
        CHECK(rules_consistent_with("AB", "C", outputs[rule]) ==
              std::vector<ReactorRule>{rule});
        CHECK(identify_rule("AB", "C", outputs[rule]) == rule);
    }

    // |a| = 1 collapses SimpleConcat, MiddleInsert, and PrefixReplace onto "ab".
    std::vector<ReactorRule> coincident = rules_consistent_with("A", "B", {"AB"});
    CHECK(coincident.size() == 3);
    CHECK_FALSE(identify_rule("A", "B", {"AB"}).has_value());
}

TEST_CASE("product order does not matter for rule identification") {
    CHECK(identify_rule("AB", "C", {"B", "AC"}) == ReactorRule::PrefixReplace);
}

TEST_CASE("shortest synthesis plans are found with deterministic tie-breaking") {
    std::optional<ReactionPlan> plan =
        bfs_shortest_synthesis({"A", "B"}, ReactorRule::SimpleConcat, "ABAB", 15);
    REQUIRE(plan.has_value());
    CHECK(plan->size() == 2);
    std::optional<ReactionPlan> again =
        bfs_shortest_synthesis({"A", "B"}, ReactorRule::SimpleConcat, "ABAB", 15);
    CHECK(*plan == *again);

    CHECK(bfs_shortest_synthesis({"A", "AB"}, ReactorRule::SimpleConcat, "AB", 15)->empty());
    CHECK_FALSE(
        bfs_shortest_synthesis({"A", "B"}, ReactorRule::SimpleConcat, "AZ", 15).has_value());
    CHECK_FALSE(
        bfs_shortest_synthesis({"A", "B"}, ReactorRule::SimpleConcat, "AB", 0).has_value());
}

TEST_CASE("executing a synthesis plan actually reaches the target") {
    for (int trial = 0; trial < 40; ++trial) {
        auto env = generate_rx_puzzle(1000 + static_cast<std::uint64_t>(trial),
                                      RxDifficulty{3, 2});
        std::optional<ReactionPlan> plan =
            bfs_shortest_synthesis(env->inventory(), env->rule(), env->target(), 15);
        REQUIRE(plan.has_value());
        for (const auto& step : *plan)
            env->apply("reactor", "react", MaterialPair{step.a, step.b});
        CHECK(env->solved());
    }
}

TEST_CASE("bfs plan lengths match a brute-force iterative-deepening search") {
    Rng rng(7);
    const std::string alphabet = "ABC";
    int compared = 0;
    for (int trial = 0; trial < 60 && compared < 25; ++trial) {
        std::vector<std::string> inventory;
        for (int i = 0; i < 2; ++i) {
            std::string m;
            int len = rng.range(1, 2);
            for (int k = 0; k < len; ++k) m += alphabet[static_cast<size_t>(rng.below(3))];
            if (std::find(inventory.begin(), inventory.end(), m) == inventory.end())
                inventory.push_back(m);
        }
        if (inventory.size() < 2) continue;
        ReactorRule rule = kAllReactorRules[static_cast<size_t>(rng.below(4))];
        std::string target;
        int tl = rng.range(2, 4);
        for (int k = 0; k < tl; ++k) target += alphabet[static_cast<size_t>(rng.below(3))];

        std::optional<ReactionPlan> plan = bfs_shortest_synthesis(inventory, rule, target, 4, 8);
        int brute = brute_force_shortest(inventory, rule, target, 4, 8);
        if (plan)
            CHECK(static_cast<int>(plan->size()) == brute);
        else
            CHECK(brute == -1);
        ++compared;
    }
    CHECK(compared == 25);
}

TEST_CASE("the state-cap safety valve throws instead of running away") {
    CHECK_THROWS_AS(
        bfs_shortest_synthesis({"A", "B", "C"}, ReactorRule::SimpleConcat, "ABCABCABCABC", 15,
                               12, 5),
        Error);
}

TEST_CASE("reacting known materials grows the inventory and reports products") {
    auto env = sample_rx_env(ReactorRule::SimpleConcat);
    Feedback f = env->apply("reactor", "react", MaterialPair{"AB", "C"});
    CHECK(f.type == "reaction");
    CHECK(f.text == "Reacting AB with C produced ABC. Now in inventory: ABC.");
    CHECK(f.data["products"] == json::array({"ABC"}));
    CHECK(f.data["new_materials"] == json::array({"ABC"}));
    CHECK(f.consumes_step);
    CHECK_FALSE(f.solved);
    CHECK(env->inventory() == std::vector<std::string>{"AB", "C", "ABC"});

    Feedback done = env->apply("reactor", "react", MaterialPair{"ABC", "C"});
    CHECK(done.solved);
    CHECK(done.text ==
          "Reacting ABC with C produced ABCC. Now in inventory: ABCC. The target material ABCC "
          "has been synthesized.");
    CHECK(env->solved());
}

TEST_CASE("repeating a reaction reports the product without an inventory change") {
    auto env = sample_rx_env();
    env->apply("reactor", "react", MaterialPair{"AB", "C"});
    size_t before = env->inventory().size();
    Feedback f = env->apply("reactor", "react", MaterialPair{"AB", "C"});
    CHECK(f.text == "Reacting AB with C produced ABC.");
    CHECK(f.data["new_materials"] == json::array());
    CHECK(env->inventory().size() == before);
}

TEST_CASE("reaction inputs are case-folded and order-sensitive") {
    auto env = sample_rx_env(ReactorRule::ReverseConcat);
    Feedback f = env->apply("reactor", "react", MaterialPair{" ab", "c "});
    CHECK(f.data["products"] == json::array({"CAB"}));
    Feedback g = env->apply("reactor", "react", MaterialPair{"C", "AB"});
    CHECK(g.data["products"] == json::array({"ABC"}));
}

TEST_CASE("unknown materials are invalid actions, not steps") {
    auto env = sample_rx_env();
    Feedback f = env->apply("reactor", "react", MaterialPair{"QQ", "C"});
    CHECK(f.type == "invalid");
    CHECK(f.text == "unknown material: QQ");
    CHECK_FALSE(f.consumes_step);
    CHECK(env->apply("reactor", "react", ActionInput{std::monostate{}}).type == "invalid");
    CHECK(env->apply("reactor", "mix", MaterialPair{"AB", "C"}).type == "invalid");
    CHECK(env->apply("cauldron", "react", MaterialPair{"AB", "C"}).type == "invalid");
    CHECK(env->inventory().size() == 2);
}

TEST_CASE("overlong products fizzle, costing the step but producing nothing") {
    ReactorEnv env(ReactorRule::SimpleConcat, {"AAAAAAA", "BBBBBB"}, "AB", 3, 12);
    Feedback f = env.apply("reactor", "react", MaterialPair{"AAAAAAA", "BBBBBB"});
    CHECK(f.type == "fizzle");
    CHECK(f.text ==
          "The reaction between AAAAAAA and BBBBBB fizzles out: the product would exceed the "
          "stable length limit of 12 characters. Nothing is produced.");
    CHECK(f.consumes_step);
    CHECK_FALSE(f.data.contains("products"));
    CHECK(env.inventory().size() == 2);
}

TEST_CASE("reactor construction rejects malformed materials") {
    CHECK_THROWS_AS(ReactorEnv(ReactorRule::SimpleConcat, {"ab", "C"}, "ABC", 1),
                    ValidationFailure);
    CHECK_THROWS_AS(ReactorEnv(ReactorRule::SimpleConcat, {"A", "C"}, "a1", 1),
                    ValidationFailure);
    CHECK_THROWS_AS(ReactorEnv(ReactorRule::SimpleConcat, {"A", ""}, "AC", 1),
                    ValidationFailure);
    CHECK_THROWS_AS(ReactorEnv(ReactorRule::SimpleConcat, {"A", "A"}, "AA", 1),
                    ValidationFailure);
}

TEST_CASE("generated reactors are deterministic and honor the reaction floor") {
    RxDifficulty d{3, 2};
    auto a = generate_rx_puzzle(5, d);
    auto b = generate_rx_puzzle(5, d);
    CHECK(a->to_json().dump() == b->to_json().dump());

    for (std::uint64_t seed : {1, 2, 3, 4, 5, 6}) {
        auto env = generate_rx_puzzle(seed, d);
        CHECK(env->inventory().size() == 3);
        CHECK_FALSE(env->has_material(env->target()));
        std::optional<ReactionPlan> plan =
            bfs_shortest_synthesis(env->inventory(), env->rule(), env->target(), 15);
        REQUIRE(plan.has_value());
        CHECK(plan->size() >= 2);
        CHECK(plan->size() <= 15);
    }
}

TEST_CASE("reactor json round trips to an identical environment") {
    auto env = generate_rx_puzzle(77, RxDifficulty{3, 3});
    json j = env->to_json();
    auto back = ReactorEnv::from_json(j);
    CHECK(back->to_json().dump() == j.dump());

    auto generic = environment_from_json(j);
    CHECK(generic->family() == "reactor");
}

TEST_CASE("the hidden rule never leaks into disclosed structure or goal text") {
    auto env = sample_rx_env(ReactorRule::MiddleInsert);
    CHECK(env->disclosed_json().dump().find("middle") == std::string::npos);
    CHECK(env->goal_text().find("middle") == std::string::npos);
    CHECK(env->rule_text().find("middle") != std::string::npos);
}
