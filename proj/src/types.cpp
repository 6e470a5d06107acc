#include "rulearn/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace rulearn {

std::string to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::Perceptual: return "perceptual";
        case ActionKind::Interactive: return "interactive";
        case ActionKind::Abductive: return "abductive";
    }
    return "perceptual";
}

ActionKind action_kind_from_string(const std::string& s) {
    if (s == "perceptual") return ActionKind::Perceptual;
    if (s == "interactive") return ActionKind::Interactive;
    if (s == "abductive") return ActionKind::Abductive;
    throw Error("unknown action kind: " + s);
}

std::string to_string(InputSchema schema) {
    switch (schema) {
        case InputSchema::None: return "none";
        case InputSchema::Number: return "number";
        case InputSchema::DigitTriple: return "digit_triple";
        case InputSchema::MaterialPair: return "material_pair";
        case InputSchema::ValueAssignment: return "value_assignment";
    }
    return "none";
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::Solved: return "solved";
        case Outcome::StepLimit: return "step_limit";
        case Outcome::BackendFailure: return "backend_failure";
    }
    return "step_limit";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "solved") return Outcome::Solved;
    if (s == "step_limit") return Outcome::StepLimit;
    if (s == "backend_failure") return Outcome::BackendFailure;
    throw Error("unknown outcome: " + s);
}

json input_to_json(const ActionInput& input) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return nullptr;
            } else if constexpr (std::is_same_v<T, double>) {
                return v;
            } else if constexpr (std::is_same_v<T, DigitTriple>) {
                return json::array({v.digits[0], v.digits[1], v.digits[2]});
            } else if constexpr (std::is_same_v<T, MaterialPair>) {
                return json::array({v.first, v.second});
            } else {
                json obj = json::object();
                for (const auto& [key, value] : v.values) obj[key] = value;
                return obj;
            }
        },
        input);
}

ActionInput input_from_json(const json& j, InputSchema schema) {
    switch (schema) {
        case InputSchema::None:
            return std::monostate{};
        case InputSchema::Number:
            return j.get<double>();
        case InputSchema::DigitTriple: {
            DigitTriple t;
            for (int i = 0; i < 3; ++i) t.digits[i] = j.at(i).get<int>();
            return t;
        }
        case InputSchema::MaterialPair:
            return MaterialPair{j.at(0).get<std::string>(), j.at(1).get<std::string>()};
        case InputSchema::ValueAssignment: {
            ValueAssignment a;
            for (auto it = j.begin(); it != j.end(); ++it) a.values[it.key()] = it->get<int>();
            return a;
        }
    }
    return std::monostate{};
}

json Feedback::to_json() const {
    json j = json::object();
    j["type"] = type;
    j["text"] = text;
    j["solved"] = solved;
    if (!data.empty()) j["data"] = data;
    return j;
}

int TrialTrace::abduction_count() const {
    int n = 0;
    for (const auto& e : events)
        if (!e.abduction_event.empty()) ++n;
    return n;
}

std::string format_double(double value, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
    return buf;
}

std::string trim(const std::string& s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string to_upper(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

namespace {

std::string canonical_number(double v) {
    if (std::floor(v) == v && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
        return buf;
    }
    return format_double(v, 12);
}

std::string canonical_input(const ActionInput& input) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                return canonical_number(v);
            } else if constexpr (std::is_same_v<T, DigitTriple>) {
                return std::to_string(v.digits[0]) + "," + std::to_string(v.digits[1]) + "," +
                       std::to_string(v.digits[2]);
            } else if constexpr (std::is_same_v<T, MaterialPair>) {
                return to_upper(trim(v.first)) + "+" + to_upper(trim(v.second));
            } else {
                std::string out;
                for (const auto& [key, value] : v.values) {
                    if (!out.empty()) out += ",";
                    out += to_upper(trim(key)) + "=" + std::to_string(value);
                }
                return out;
            }
        },
        input);
}

}  // namespace

std::string canonical_action_key(ActionKind kind, const std::string& target,
                                 const std::string& action_name, const ActionInput& input) {
    return to_string(kind) + "|" + to_upper(trim(target)) + "|" + to_upper(trim(action_name)) +
           "|" + canonical_input(input);
}

std::string canonical_event_key(const TraceEvent& event) {
    ActionInput input = std::monostate{};
    if (!event.input.is_null()) {
        if (event.input.is_number()) {
            input = event.input.get<double>();
        } else if (event.input.is_array() && event.input.size() == 3 &&
                   event.input[0].is_number()) {
            input = input_from_json(event.input, InputSchema::DigitTriple);
        } else if (event.input.is_array() && event.input.size() == 2) {
            input = input_from_json(event.input, InputSchema::MaterialPair);
        } else if (event.input.is_object()) {
            input = input_from_json(event.input, InputSchema::ValueAssignment);
        }
    }
    return canonical_action_key(event.kind, event.target, event.action_name, input);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL + (b << 1 | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace rulearn
