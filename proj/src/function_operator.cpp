#include "rulearn/function_operator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rulearn/rng.hpp"

namespace rulearn {

std::string to_string(SubfunctionKind kind) {
    switch (kind) {
        case SubfunctionKind::Const: return "const";
        case SubfunctionKind::Identity: return "identity";
        case SubfunctionKind::Square: return "square";
        case SubfunctionKind::Sine: return "sine";
        case SubfunctionKind::Reciprocal: return "reciprocal";
        case SubfunctionKind::Abs: return "abs";
        case SubfunctionKind::Negate: return "negate";
    }
    return "const";
}

SubfunctionKind subfunction_kind_from_string(const std::string& s) {
    for (SubfunctionKind k : kAllSubfunctionKinds)
        if (to_string(k) == s) return k;
    throw ValidationFailure("unknown subfunction kind: " + s);
}

std::optional<double> subfunction_value(SubfunctionKind kind, double x) {
    switch (kind) {
        case SubfunctionKind::Const: return 1.0;  // x^0, with 0^0 = 1
        case SubfunctionKind::Identity: return x;
        case SubfunctionKind::Square: return x * x;
        case SubfunctionKind::Sine: return std::sin(x);
        case SubfunctionKind::Reciprocal:
            if (x == 0.0) return std::nullopt;
            return 1.0 / x;
        case SubfunctionKind::Abs: return std::fabs(x);
        case SubfunctionKind::Negate: return -x;
    }
    return std::nullopt;
}

std::optional<double> evaluate_spec(const FunctionSpec& spec, const ConstantTable& constants,
                                    double x) {
    double sum = 0.0;
    for (const auto& term : spec.terms) {
        std::optional<double> sub = subfunction_value(term.kind, x);
        if (!sub) return std::nullopt;
        auto it = constants.find(term.const_id);
        if (it == constants.end()) throw Error("unknown constant: " + term.const_id);
        sum += static_cast<double>(it->second) * *sub;
    }
    return sum;
}

namespace {

std::string render_term(const FunctionTerm& term) {
    switch (term.kind) {
        case SubfunctionKind::Const: return term.const_id;
        case SubfunctionKind::Identity: return term.const_id + "*x";
        case SubfunctionKind::Square: return term.const_id + "*x^2";
        case SubfunctionKind::Sine: return term.const_id + "*sin(x)";
        case SubfunctionKind::Reciprocal: return term.const_id + "/x";
        case SubfunctionKind::Abs: return term.const_id + "*|x|";
        case SubfunctionKind::Negate: return term.const_id + "*(-x)";
    }
    return term.const_id;
}

std::string render_formula(const FunctionSpec& spec) {
    std::string out = spec.id + "(x) = ";
    for (size_t i = 0; i < spec.terms.size(); ++i) {
        if (i) out += " + ";
        out += render_term(spec.terms[i]);
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::vector<std::string> sorted_distinct_ids(const FunctionSpec& spec) {
    std::vector<std::string> ids;
    for (const auto& t : spec.terms) ids.push_back(t.const_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

}  // namespace

bool fo_identifiable(const std::vector<FunctionSpec>& functions, const ConstantTable& constants,
                     const std::vector<double>& probes) {
    std::vector<std::string> ids;
    for (const auto& [id, value] : constants) ids.push_back(id);
    const int nc = static_cast<int>(ids.size());
    const int np = static_cast<int>(probes.size());

    // True outputs; entries may be undefined (skipped).
    std::vector<std::vector<std::optional<double>>> observed;
    for (const auto& fn : functions) {
        std::vector<std::optional<double>> row;
        for (double x : probes) row.push_back(evaluate_spec(fn, constants, x));
        observed.push_back(std::move(row));
    }

    // Bare subfunction values per (kind, probe).
    double sub[7][8];
    bool sub_ok[7][8];
    for (int k = 0; k < 7; ++k)
        for (int p = 0; p < np; ++p) {
            auto v = subfunction_value(kAllSubfunctionKinds[static_cast<size_t>(k)], probes[p]);
            sub_ok[k][p] = v.has_value();
            sub[k][p] = v.value_or(0.0);
        }

    // What a solver sees per function: the distinct constant ids, as global
    // indices. Which slot uses which id (and how often) stays hidden, so the
    // fit check ranges over every onto assignment of ids to term slots.
    std::vector<std::vector<int>> distinct_ids;
    for (const auto& fn : functions) {
        std::vector<int> row;
        for (const auto& id : sorted_distinct_ids(fn)) {
            auto it = std::find(ids.begin(), ids.end(), id);
            row.push_back(static_cast<int>(it - ids.begin()));
        }
        distinct_ids.push_back(std::move(row));
    }

    auto function_fits = [&](size_t fi, const std::vector<int>& values) {
        const int nt = static_cast<int>(functions[fi].terms.size());
        const auto& dids = distinct_ids[fi];
        const int nd = static_cast<int>(dids.size());
        long assign_total = 1;
        for (int i = 0; i < nt; ++i) assign_total *= nd;
        long kind_total = 1;
        for (int i = 0; i < nt; ++i) kind_total *= 7;
        for (long acode = 0; acode < assign_total; ++acode) {
            long arest = acode;
            int assign[3];
            unsigned used = 0;
            for (int i = 0; i < nt; ++i) {
                assign[i] = static_cast<int>(arest % nd);
                used |= 1u << assign[i];
                arest /= nd;
            }
            if (used != (1u << nd) - 1u) continue;
            for (long code = 0; code < kind_total; ++code) {
                long rest = code;
                int kinds[3];
                for (int i = 0; i < nt; ++i) {
                    kinds[i] = static_cast<int>(rest % 7);
                    rest /= 7;
                }
                bool fits = true;
                for (int p = 0; p < np && fits; ++p) {
                    if (!observed[fi][static_cast<size_t>(p)]) continue;
                    double sum = 0.0;
                    for (int i = 0; i < nt; ++i) {
                        if (!sub_ok[kinds[i]][p]) {
                            fits = false;
                            break;
                        }
                        sum += values[static_cast<size_t>(dids[static_cast<size_t>(assign[i])])] *
                               sub[kinds[i]][p];
                    }
                    if (!fits) break;
                    double want = *observed[fi][static_cast<size_t>(p)];
                    if (std::fabs(sum - want) > 1e-9 * std::max(1.0, std::fabs(want))) fits = false;
                }
                if (fits) return true;
            }
        }
        return false;
    };

    long total = 1;
    for (int i = 0; i < nc; ++i) total *= 10;
    int consistent = 0;
    std::vector<int> values(static_cast<size_t>(nc), 0);
    for (long code = 0; code < total; ++code) {
        long rest = code;
        for (int i = 0; i < nc; ++i) {
            values[static_cast<size_t>(i)] = static_cast<int>(rest % 10);
            rest /= 10;
        }
        bool all = true;
        for (size_t fi = 0; fi < functions.size() && all; ++fi)
            if (!function_fits(fi, values)) all = false;
        if (all && ++consistent > 1) return false;
    }
    return consistent == 1;
}

FunctionOperatorEnv::FunctionOperatorEnv(std::vector<FunctionSpec> functions,
                                         ConstantTable constants, std::uint64_t seed)
    : functions_(std::move(functions)), constants_(std::move(constants)), seed_(seed) {
    if (functions_.empty()) throw ValidationFailure("function_operator: no functions");
    std::unordered_set<std::string> seen;
    for (const auto& fn : functions_) {
        if (fn.id.empty()) throw ValidationFailure("function_operator: empty function id");
        if (!seen.insert(fn.id).second)
            throw ValidationFailure("function_operator: duplicate function id " + fn.id);
        if (fn.terms.empty() || fn.terms.size() > 3)
            throw ValidationFailure("function_operator: " + fn.id + " needs 1 to 3 terms");
        for (const auto& t : fn.terms)
            if (!constants_.count(t.const_id))
                throw ValidationFailure("function_operator: no value for constant " +
                                        t.const_id);
    }
    for (const auto& [id, value] : constants_)
        if (value < 0 || value > 9)
            throw ValidationFailure("function_operator: constant " + id + " out of [0,9]");
}

std::vector<std::string> FunctionOperatorEnv::constant_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, value] : constants_) ids.push_back(id);
    return ids;
}

std::optional<double> FunctionOperatorEnv::evaluate(const std::string& function_id,
                                                    double x) const {
    const FunctionSpec* fn = find_function(function_id);
    if (!fn) throw Error("no such function: " + function_id);
    return evaluate_spec(*fn, constants_, x);
}

const FunctionSpec* FunctionOperatorEnv::find_function(const std::string& id) const {
    for (const auto& fn : functions_)
        if (fn.id == id) return &fn;
    return nullptr;
}

std::string FunctionOperatorEnv::goal_text() const {
    std::vector<std::string> fn_ids;
    for (const auto& fn : functions_) fn_ids.push_back(fn.id);
    return "Determine the hidden integer constants " + join(constant_ids(), ", ") +
           ", each from 0 to 9. The function machines " + join(fn_ids, ", ") +
           " compute hidden formulas that share these constants. Probe the machines with "
           "numbers of your choice, work out the constant values, and submit all of them at "
           "the console.";
}

std::string FunctionOperatorEnv::rule_text() const {
    std::vector<std::string> formulas;
    for (const auto& fn : functions_) formulas.push_back(render_formula(fn));
    return "Hidden formulas: " + join(formulas, "; ") + ".";
}

json FunctionOperatorEnv::disclosed_json() const {
    json fns = json::array();
    for (const auto& fn : functions_) {
        fns.push_back(json{{"id", fn.id},
                           {"term_count", fn.terms.size()},
                           {"constant_ids", sorted_distinct_ids(fn)}});
    }
    return json{{"constants", constant_ids()},
                {"functions", fns},
                {"probe_range", json::array({kProbeMin, kProbeMax})}};
}

json FunctionOperatorEnv::rule_json() const {
    json fns = json::array();
    for (const auto& fn : functions_) {
        json terms = json::array();
        for (const auto& t : fn.terms)
            terms.push_back(json{{"const_id", t.const_id}, {"kind", to_string(t.kind)}});
        fns.push_back(json{{"id", fn.id}, {"terms", terms}});
    }
    return json{{"functions", fns}};
}

std::vector<ObjectView> FunctionOperatorEnv::objects() const {
    std::vector<ObjectView> views;
    for (const auto& fn : functions_) {
        ObjectView v;
        v.id = fn.id;
        v.description = "Function machine " + fn.id + ": computes a hidden formula with " +
                        std::to_string(fn.terms.size()) + " term(s) using constant(s) " +
                        join(sorted_distinct_ids(fn), ", ") + ". Feed it a number x between " +
                        format_double(kProbeMin) + " and " + format_double(kProbeMax) +
                        " to see " + fn.id + "(x).";
        InteractiveActionDesc eval;
        eval.name = "evaluate";
        eval.description = "evaluate " + fn.id + " at a number x of your choice";
        eval.schema = InputSchema::Number;
        eval.payload_info = json{{"min", kProbeMin}, {"max", kProbeMax}};
        v.actions.push_back(std::move(eval));
        views.push_back(std::move(v));
    }
    ObjectView console;
    console.id = "console";
    console.description =
        "A console with one input slot per constant (" + join(constant_ids(), ", ") +
        "). It accepts a full set of integer values from 0 to 9 and unlocks only on the exact "
        "hidden values.";
    InteractiveActionDesc submit;
    submit.name = "submit";
    submit.description = "submit integer values from 0 to 9 for all constants at once";
    submit.schema = InputSchema::ValueAssignment;
    submit.payload_info = json{{"constants", constant_ids()}, {"min", 0}, {"max", 9}};
    console.actions.push_back(std::move(submit));
    views.push_back(std::move(console));
    return views;
}

Feedback FunctionOperatorEnv::apply(const std::string& object_id, const std::string& action_name,
                                    const ActionInput& input) {
    if (object_id == "console") {
        if (action_name != "submit") return Feedback::invalid("unknown action: " + action_name);
        const ValueAssignment* guess = std::get_if<ValueAssignment>(&input);
        if (!guess)
            return Feedback::invalid("submit expects an assignment like a=3, b=2, c=7");
        ValueAssignment normalized;
        for (const auto& [key, value] : guess->values) {
            std::string id = trim(key);
            std::transform(id.begin(), id.end(), id.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            normalized.values[id] = value;
        }
        for (const auto& [id, value] : constants_)
            if (!normalized.values.count(id))
                return Feedback::invalid("submission must include every constant: " +
                                         join(constant_ids(), ", "));
        for (const auto& [id, value] : normalized.values) {
            if (!constants_.count(id)) return Feedback::invalid("unknown constant: " + id);
            if (value < 0 || value > 9)
                return Feedback::invalid("constant " + id + " must be between 0 and 9");
        }
        Feedback f;
        f.type = "submission";
        f.data["guess"] = normalized.values;
        bool correct = true;
        for (const auto& [id, value] : constants_)
            if (normalized.values.at(id) != value) correct = false;
        if (correct) {
            solved_ = true;
            f.solved = true;
            std::vector<std::string> parts;
            for (const auto& [id, value] : constants_)
                parts.push_back(id + "=" + std::to_string(value));
            f.text = "Correct. The console accepts {" + join(parts, ", ") +
                     "} and the machines power down.";
        } else {
            f.text = "Incorrect. That is not the right set of constant values.";
        }
        return f;
    }

    const FunctionSpec* fn = find_function(object_id);
    if (!fn) return Feedback::invalid("no such object: " + object_id);
    if (action_name != "evaluate") return Feedback::invalid("unknown action: " + action_name);
    const double* x = std::get_if<double>(&input);
    if (!x) return Feedback::invalid("evaluate expects a single number x");
    if (!(*x >= kProbeMin && *x <= kProbeMax))
        return Feedback::invalid("x must be between " + format_double(kProbeMin) + " and " +
                                 format_double(kProbeMax));

    Feedback f;
    f.data["function"] = fn->id;
    f.data["x"] = *x;
    std::optional<double> y = evaluate_spec(*fn, constants_, *x);
    if (!y) {
        f.type = "evaluation_undefined";
        f.text = fn->id + " is undefined at x = " + format_double(*x) + " (division by zero).";
        f.data["defined"] = false;
        return f;
    }
    f.type = "evaluation";
    f.text = fn->id + "(" + format_double(*x) + ") = " + format_double(*y) + ".";
    f.data["defined"] = true;
    f.data["value"] = *y;
    return f;
}

bool FunctionOperatorEnv::solved() const { return solved_; }

json FunctionOperatorEnv::to_json() const {
    json j = rule_json();
    j["family"] = "function_operator";
    j["seed"] = seed_;
    j["constants"] = constants_;
    j["disclosed"] = disclosed_json();
    return j;
}

std::unique_ptr<Environment> FunctionOperatorEnv::clone() const {
    return std::make_unique<FunctionOperatorEnv>(*this);
}

std::unique_ptr<FunctionOperatorEnv> FunctionOperatorEnv::from_json(const json& j) {
    if (j.at("family").get<std::string>() != "function_operator")
        throw ValidationFailure("not a function_operator puzzle");
    std::vector<FunctionSpec> functions;
    for (const auto& fj : j.at("functions")) {
        FunctionSpec fn;
        fn.id = fj.at("id").get<std::string>();
        for (const auto& tj : fj.at("terms"))
            fn.terms.push_back(
                {tj.at("const_id").get<std::string>(),
                 subfunction_kind_from_string(tj.at("kind").get<std::string>())});
        functions.push_back(std::move(fn));
    }
    return std::make_unique<FunctionOperatorEnv>(std::move(functions),
                                                 j.at("constants").get<ConstantTable>(),
                                                 j.at("seed").get<std::uint64_t>());
}

std::unique_ptr<FunctionOperatorEnv> generate_fo_puzzle(std::uint64_t seed,
                                                        const FoDifficulty& difficulty) {
    if (difficulty.constant_count < 1 || difficulty.constant_count > 9)
        throw GenerationFailure("function_operator: constant_count out of [1,9]");
    if (difficulty.max_terms < 1 || difficulty.max_terms > 3)
        throw GenerationFailure("function_operator: max_terms out of [1,3]");

    Rng rng(mix_seed(seed, 0x666fULL));
    const int nc = difficulty.constant_count;
    // At most three probes per machine plus one submission must fit in the
    // 15-step budget, so the machine count stays at four or fewer.
    const int nf = std::min(nc, 4);

    std::vector<std::string> ids;
    for (int i = 0; i < nc; ++i) ids.push_back(std::string(1, static_cast<char>('a' + i)));

    for (int attempt = 0; attempt < 500; ++attempt) {
        std::vector<int> term_counts;
        int total = 0;
        for (int i = 0; i < nf; ++i) {
            int t = rng.range(1, difficulty.max_terms);
            term_counts.push_back(t);
            total += t;
        }
        if (total < nc) continue;

        // Guarantee every constant appears somewhere: deal the ids onto a
        // shuffled subset of slots, fill the rest randomly.
        std::vector<int> slot_order(static_cast<size_t>(total));
        for (int i = 0; i < total; ++i) slot_order[static_cast<size_t>(i)] = i;
        rng.shuffle(slot_order);
        std::vector<std::string> slot_ids(static_cast<size_t>(total));
        for (int i = 0; i < nc; ++i)
            slot_ids[static_cast<size_t>(slot_order[static_cast<size_t>(i)])] =
                ids[static_cast<size_t>(i)];
        for (int i = 0; i < total; ++i)
            if (slot_ids[static_cast<size_t>(i)].empty())
                slot_ids[static_cast<size_t>(i)] = ids[static_cast<size_t>(rng.below(nc))];

        std::vector<FunctionSpec> functions;
        int slot = 0;
        for (int i = 0; i < nf; ++i) {
            FunctionSpec fn;
            fn.id = "F" + std::to_string(i + 1);
            for (int t = 0; t < term_counts[static_cast<size_t>(i)]; ++t, ++slot)
                fn.terms.push_back({slot_ids[static_cast<size_t>(slot)],
                                    kAllSubfunctionKinds[static_cast<size_t>(rng.below(7))]});
            functions.push_back(std::move(fn));
        }

        ConstantTable constants;
        for (const auto& id : ids) constants[id] = rng.range(0, 9);

        if (!fo_identifiable(functions, constants, {1.0, 2.0, 3.0})) continue;
        return std::make_unique<FunctionOperatorEnv>(std::move(functions), std::move(constants),
                                                     seed);
    }
    throw GenerationFailure("function_operator: generation failed for seed " +
                            std::to_string(seed));
}

}  // namespace rulearn
