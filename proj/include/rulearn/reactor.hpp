#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rulearn/environment.hpp"

namespace rulearn {

enum class ReactorRule { SimpleConcat, ReverseConcat, MiddleInsert, PrefixReplace };

constexpr std::array<ReactorRule, 4> kAllReactorRules = {
    ReactorRule::SimpleConcat, ReactorRule::ReverseConcat, ReactorRule::MiddleInsert,
    ReactorRule::PrefixReplace};

std::string to_string(ReactorRule rule);
ReactorRule reactor_rule_from_string(const std::string& s);

// Pure application of one combination rule to ordered operands.
// SimpleConcat: ab. ReverseConcat: ba. MiddleInsert: a split after
// ceil(|a|/2) characters into (x, y), product x+b+y. PrefixReplace: a split
// into first character x and remainder y, products x+b and y (empty y
// dropped).
std::vector<std::string> react_products(ReactorRule rule, const std::string& a,
                                        const std::string& b);

// Rules whose output on (a, b) equals `products` (order-insensitive).
std::vector<ReactorRule> rules_consistent_with(const std::string& a, const std::string& b,
                                               const std::vector<std::string>& products);

// Unique consistent rule, if the probe separates one.
std::optional<ReactorRule> identify_rule(const std::string& a, const std::string& b,
                                         const std::vector<std::string>& products);

struct ReactionStep {
    std::string a;
    std::string b;
    bool operator==(const ReactionStep&) const = default;
};

using ReactionPlan = std::vector<ReactionStep>;

// Minimal-length reaction sequence turning `inventory` into a set containing
// `target`, or nullopt if none exists within depth_cap. Deterministic: ties
// break by lexicographic (a, b) expansion order. `state_cap` bounds the
// explored state count as a safety valve; exceeding it throws.
std::optional<ReactionPlan> bfs_shortest_synthesis(const std::vector<std::string>& inventory,
                                                   ReactorRule rule, const std::string& target,
                                                   int depth_cap, int max_material_len = 12,
                                                   size_t state_cap = 2000000);

struct RxDifficulty {
    int initial_materials = 3;
    int min_reactions = 2;
};

class ReactorEnv : public Environment {
public:
    ReactorEnv(ReactorRule rule, std::vector<std::string> inventory, std::string target,
               std::uint64_t seed, int max_material_len = 12);

    static std::unique_ptr<ReactorEnv> from_json(const json& j);

    std::string family() const override { return "reactor"; }
    std::uint64_t seed() const override { return seed_; }
    std::string goal_text() const override;
    std::string rule_text() const override;
    json disclosed_json() const override;
    json rule_json() const override;
    std::vector<ObjectView> objects() const override;
    Feedback apply(const std::string& object_id, const std::string& action_name,
                   const ActionInput& input) override;
    bool solved() const override;
    json to_json() const override;
    std::unique_ptr<Environment> clone() const override;

    ReactorRule rule() const { return rule_; }
    const std::vector<std::string>& inventory() const { return inventory_; }
    const std::string& target() const { return target_; }
    int max_material_len() const { return max_material_len_; }
    bool has_material(const std::string& m) const;

private:
    ReactorRule rule_;
    std::vector<std::string> inventory_;  // insertion order, no duplicates
    std::string target_;
    std::uint64_t seed_ = 0;
    int max_material_len_ = 12;
};

std::unique_ptr<ReactorEnv> generate_rx_puzzle(std::uint64_t seed, const RxDifficulty& difficulty);

}  // namespace rulearn
