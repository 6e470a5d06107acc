#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rulearn/environment.hpp"

namespace rulearn {

enum class SubfunctionKind { Const, Identity, Square, Sine, Reciprocal, Abs, Negate };

constexpr std::array<SubfunctionKind, 7> kAllSubfunctionKinds = {
    SubfunctionKind::Const,      SubfunctionKind::Identity, SubfunctionKind::Square,
    SubfunctionKind::Sine,       SubfunctionKind::Reciprocal,
    SubfunctionKind::Abs,        SubfunctionKind::Negate};

std::string to_string(SubfunctionKind kind);
SubfunctionKind subfunction_kind_from_string(const std::string& s);

// Value of the bare subfunction at x, or nullopt where undefined
// (Reciprocal at 0).
std::optional<double> subfunction_value(SubfunctionKind kind, double x);

struct FunctionTerm {
    std::string const_id;
    SubfunctionKind kind = SubfunctionKind::Const;
    bool operator==(const FunctionTerm&) const = default;
};

struct FunctionSpec {
    std::string id;
    std::vector<FunctionTerm> terms;
};

using ConstantTable = std::map<std::string, int>;

// Sum over terms of constant * subfunction(x); nullopt where undefined.
std::optional<double> evaluate_spec(const FunctionSpec& spec, const ConstantTable& constants,
                                    double x);

struct FoDifficulty {
    int constant_count = 3;
    int max_terms = 2;
};

class FunctionOperatorEnv : public Environment {
public:
    FunctionOperatorEnv(std::vector<FunctionSpec> functions, ConstantTable constants,
                        std::uint64_t seed);

    static std::unique_ptr<FunctionOperatorEnv> from_json(const json& j);

    std::string family() const override { return "function_operator"; }
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

    const std::vector<FunctionSpec>& functions() const { return functions_; }
    const ConstantTable& constants() const { return constants_; }
    std::vector<std::string> constant_ids() const;
    std::optional<double> evaluate(const std::string& function_id, double x) const;

    static constexpr double kProbeMin = -100.0;
    static constexpr double kProbeMax = 100.0;

private:
    const FunctionSpec* find_function(const std::string& id) const;

    std::vector<FunctionSpec> functions_;
    ConstantTable constants_;
    std::uint64_t seed_ = 0;
    bool solved_ = false;
};

// True when exactly one constant table over [0,9] is consistent with the true
// outputs at every probe in `probes`, across everything a solver cannot see:
// subfunction kinds and the assignment of each function's disclosed constant
// ids to its term slots.
bool fo_identifiable(const std::vector<FunctionSpec>& functions, const ConstantTable& constants,
                     const std::vector<double>& probes);

std::unique_ptr<FunctionOperatorEnv> generate_fo_puzzle(std::uint64_t seed,
                                                        const FoDifficulty& difficulty);

}  // namespace rulearn
