#include "rulearn/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

namespace rulearn {

std::string to_string(AgentVariant variant) {
    switch (variant) {
        case AgentVariant::Idea: return "idea";
        case AgentVariant::Baseline: return "baseline";
        case AgentVariant::DeductionOnly: return "deduction";
    }
    return "idea";
}

AgentVariant agent_variant_from_string(const std::string& s) {
    if (s == "idea") return AgentVariant::Idea;
    if (s == "baseline") return AgentVariant::Baseline;
    if (s == "deduction" || s == "deduction_only") return AgentVariant::DeductionOnly;
    throw Error("unknown agent variant: " + s);
}

std::string default_system_preamble() {
    return "You are an agent inside an interactive puzzle. Each turn, pick exactly one action "
           "from the numbered menu and reply only in the stated format. When an action takes "
           "an input, follow the format its menu line shows.";
}

std::string ground_truth_rule_text(const Environment& env) { return env.rule_text(); }

namespace {

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// Matches "<decoration>MARKER<decoration>: value", where the decoration is
// markdown noise like '*', '#', '-', or spaces. Returns true and the value on
// a hit.
bool match_marker(const std::string& line, const std::string& marker, std::string* value) {
    size_t i = 0;
    auto is_noise = [](char c) {
        return c == ' ' || c == '\t' || c == '*' || c == '#' || c == '-' || c == '>';
    };
    while (i < line.size() && is_noise(line[i])) ++i;
    for (char m : marker) {
        if (i >= line.size() ||
            std::toupper(static_cast<unsigned char>(line[i])) != m)
            return false;
        ++i;
    }
    while (i < line.size() && (line[i] == ' ' || line[i] == '*')) ++i;
    if (i >= line.size() || line[i] != ':') return false;
    ++i;
    std::string rest = line.substr(i);
    // Trim decoration from the value ends.
    size_t b = 0, e = rest.size();
    while (b < e && (rest[b] == ' ' || rest[b] == '*')) ++b;
    while (e > b && (rest[e - 1] == ' ' || rest[e - 1] == '*' || rest[e - 1] == '\t')) --e;
    *value = rest.substr(b, e - b);
    return true;
}

std::optional<std::string> find_marker_value(const std::string& text,
                                             const std::string& marker) {
    for (const auto& line : split_lines(text)) {
        std::string value;
        if (match_marker(line, marker, &value)) return value;
    }
    return std::nullopt;
}

std::optional<double> first_number(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.'))
            continue;
        const char* start = text.c_str() + i;
        char* end = nullptr;
        double v = std::strtod(start, &end);
        if (end != start) return v;
    }
    return std::nullopt;
}

std::vector<std::string> digit_runs(const std::string& text) {
    std::vector<std::string> runs;
    std::string current;
    for (char c : text) {
        if (std::isdigit(static_cast<unsigned char>(c))) {
            current += c;
        } else if (!current.empty()) {
            runs.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) runs.push_back(current);
    return runs;
}

std::string schema_hint(const MenuEntry& entry) {
    switch (entry.schema) {
        case InputSchema::None: return "";
        case InputSchema::Number: {
            std::string hint = "a number";
            if (entry.payload_info.contains("min") && entry.payload_info.contains("max"))
                hint += " between " +
                        format_double(entry.payload_info["min"].get<double>()) + " and " +
                        format_double(entry.payload_info["max"].get<double>());
            return hint;
        }
        case InputSchema::DigitTriple: return "three digits 0-9, like 0 0 3";
        case InputSchema::MaterialPair: {
            std::string hint = "two materials as an ordered pair, like AB, C";
            if (entry.payload_info.contains("materials")) {
                std::string mats;
                for (const auto& m : entry.payload_info["materials"]) {
                    if (!mats.empty()) mats += ", ";
                    mats += m.get<std::string>();
                }
                hint += " (on hand: " + mats + ")";
            }
            return hint;
        }
        case InputSchema::ValueAssignment: {
            std::string hint = "an integer 0-9 per constant, like a=3, b=2";
            if (entry.payload_info.contains("constants")) {
                std::string ids;
                for (const auto& c : entry.payload_info["constants"]) {
                    if (!ids.empty()) ids += ", ";
                    ids += c.get<std::string>();
                }
                hint += " (constants: " + ids + ")";
            }
            return hint;
        }
    }
    return "";
}

std::string render_menu_line(const MenuEntry& entry) {
    std::string tag;
    switch (entry.kind) {
        case ActionKind::Perceptual: tag = "[look]"; break;
        case ActionKind::Interactive: tag = "[do]"; break;
        case ActionKind::Abductive: tag = "[think]"; break;
    }
    std::string line = std::to_string(entry.id) + ". " + tag + " ";
    if (entry.kind == ActionKind::Abductive) {
        line += entry.description;
    } else if (entry.kind == ActionKind::Perceptual) {
        line += entry.object_id + ": " + entry.description;
    } else {
        line += entry.object_id + "." + entry.action_name + ": " + entry.description;
        std::string hint = schema_hint(entry);
        if (!hint.empty()) line += " (INPUT: " + hint + ")";
    }
    return line;
}

void append_records(std::string& out, const std::string& heading,
                    const std::vector<MemoryRecord>& records, bool elided) {
    out += "== " + heading + " ==\n";
    if (elided) out += "- [earlier entries elided]\n";
    if (records.empty() && !elided) out += "(none)\n";
    for (const auto& r : records) out += "- " + r.text + "\n";
    out += "\n";
}

std::string render_body(const PromptBundle& bundle,
                        const std::vector<MemoryRecord>& permanent, bool permanent_elided,
                        const std::vector<MemoryRecord>& buffer, bool buffer_elided) {
    std::string out = bundle.system_preamble;
    out += "\n\n== Goal ==\n" + bundle.goal + "\n\n";
    if (bundle.variant != AgentVariant::Baseline) {
        out += "== Hypothesis ==\n";
        out += (bundle.hypothesis.empty() ? "(none yet)" : bundle.hypothesis);
        out += "\n\n== Plan ==\n";
        out += (bundle.plan.empty() ? "(none yet)" : bundle.plan);
        out += "\n\n";
    }
    append_records(out, "Known facts", permanent, permanent_elided);
    append_records(out, "Recent observations", buffer, buffer_elided);
    if (!bundle.last_result.empty()) out += "== Last result ==\n" + bundle.last_result + "\n\n";
    return out;
}

// Drops oldest buffer records first, then oldest facts, until the rendered
// body fits the budget.
std::string render_digest_limited(const PromptBundle& bundle, const std::string& tail) {
    std::vector<MemoryRecord> permanent = bundle.permanent;
    std::vector<MemoryRecord> buffer = bundle.buffer;
    bool permanent_elided = false;
    bool buffer_elided = false;
    std::string body = render_body(bundle, permanent, permanent_elided, buffer, buffer_elided);
    while (static_cast<int>(body.size() + tail.size()) > bundle.digest_budget) {
        if (!buffer.empty()) {
            buffer.erase(buffer.begin());
            buffer_elided = true;
        } else if (!permanent.empty()) {
            permanent.erase(permanent.begin());
            permanent_elided = true;
        } else {
            break;
        }
        body = render_body(bundle, permanent, permanent_elided, buffer, buffer_elided);
    }
    return body + tail;
}

}  // namespace

std::string render_prompt(const PromptBundle& bundle) {
    std::string tail = "== Actions ==\n";
    for (const auto& entry : bundle.menu) tail += render_menu_line(entry) + "\n";
    tail += "\n== Reply format ==\nACTION: <number>\n";
    tail += "INPUT: <payload, only when the chosen action lists an INPUT>\n";
    if (!bundle.parse_error.empty())
        tail += "\nYour previous reply could not be used: " + bundle.parse_error +
                "\nReply again, strictly in the format above.\n";
    return render_digest_limited(bundle, tail);
}

std::string render_abduction_prompt(const PromptBundle& bundle) {
    std::string tail =
        "== Task ==\n"
        "Step back and reason about the hidden rule. Revise your hypothesis to fit every "
        "observation, and lay out a plan to test it or to finish the goal.\n\n"
        "== Reply format ==\n"
        "HYPOTHESIS: <your best current explanation of the hidden rule>\n"
        "PLAN: <the concrete next moves>\n"
        "KEEP: <facts worth keeping, one per line; may be empty>\n";
    if (!bundle.parse_error.empty())
        tail += "\nYour previous reply could not be used: " + bundle.parse_error +
                "\nReply again, strictly in the format above.\n";
    return render_digest_limited(bundle, tail);
}

std::optional<ParsedSelection> parse_action_reply(const std::string& reply,
                                                  const std::vector<MenuEntry>& menu,
                                                  std::string* error) {
    auto fail = [&](const std::string& message) {
        if (error) *error = message;
        return std::nullopt;
    };

    std::optional<std::string> action_value = find_marker_value(reply, "ACTION");
    if (!action_value) return fail("reply must contain a line 'ACTION: <number>'");
    std::vector<std::string> runs = digit_runs(*action_value);
    if (runs.empty()) return fail("no action number after 'ACTION:'");
    long id = std::strtol(runs.front().c_str(), nullptr, 10);
    if (id < 1 || id > static_cast<long>(menu.size()))
        return fail("action number " + std::to_string(id) + " is not on the menu (1-" +
                    std::to_string(menu.size()) + ")");
    const MenuEntry& entry = menu[static_cast<size_t>(id - 1)];

    ParsedSelection out;
    out.menu_id = static_cast<int>(id);
    if (entry.schema == InputSchema::None) {
        out.input = std::monostate{};
        return out;
    }

    std::optional<std::string> payload = find_marker_value(reply, "INPUT");
    if (!payload || trim(*payload).empty())
        return fail("action " + std::to_string(id) + " (" + entry.action_name +
                    ") needs an input line 'INPUT: " + schema_hint(entry) + "'");
    const std::string& text = *payload;

    switch (entry.schema) {
        case InputSchema::Number: {
            std::optional<double> v = first_number(text);
            if (!v) return fail("could not find a number in INPUT");
            out.input = *v;
            return out;
        }
        case InputSchema::DigitTriple: {
            std::vector<std::string> parts = digit_runs(text);
            DigitTriple triple;
            if (parts.size() == 1 && parts[0].size() == 3) {
                for (int i = 0; i < 3; ++i) triple.digits[i] = parts[0][i] - '0';
            } else if (parts.size() == 3) {
                for (int i = 0; i < 3; ++i) {
                    long d = std::strtol(parts[static_cast<size_t>(i)].c_str(), nullptr, 10);
                    if (d < 0 || d > 9) return fail("each digit must be 0-9");
                    triple.digits[i] = static_cast<int>(d);
                }
            } else {
                return fail("INPUT must give exactly three digits, like 0 0 3");
            }
            out.input = triple;
            return out;
        }
        case InputSchema::MaterialPair: {
            std::string upper = to_upper(text);
            size_t sep = upper.find_first_of("+,");
            std::vector<std::string> sides;
            if (sep != std::string::npos) {
                sides.push_back(trim(upper.substr(0, sep)));
                sides.push_back(trim(upper.substr(sep + 1)));
            } else {
                std::istringstream in(upper);
                std::string token;
                while (in >> token) sides.push_back(token);
            }
            if (sides.size() != 2)
                return fail("INPUT must name two materials, like AB, C");
            for (const auto& side : sides) {
                if (side.empty() ||
                    !std::all_of(side.begin(), side.end(),
                                 [](char c) { return c >= 'A' && c <= 'Z'; }))
                    return fail("materials are uppercase letter strings, like AB, C");
            }
            out.input = MaterialPair{sides[0], sides[1]};
            return out;
        }
        case InputSchema::ValueAssignment: {
            ValueAssignment assignment;
            std::string normalized = text;
            std::replace(normalized.begin(), normalized.end(), ';', ',');
            std::istringstream in(normalized);
            std::string part;
            while (std::getline(in, part, ',')) {
                part = trim(part);
                if (part.empty()) continue;
                size_t eq = part.find_first_of("=:");
                if (eq == std::string::npos)
                    return fail("assignments look like a=3, b=2, c=7");
                std::string key = trim(part.substr(0, eq));
                std::string value = trim(part.substr(eq + 1));
                std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
                    return static_cast<char>(std::tolower(c));
                });
                if (key.empty() ||
                    !std::all_of(key.begin(), key.end(),
                                 [](char c) { return c >= 'a' && c <= 'z'; }))
                    return fail("constant names are letters, like a=3");
                char* end = nullptr;
                long v = std::strtol(value.c_str(), &end, 10);
                if (end == value.c_str()) return fail("no integer value in '" + part + "'");
                assignment.values[key] = static_cast<int>(v);
            }
            if (assignment.values.empty())
                return fail("INPUT must assign values, like a=3, b=2, c=7");
            out.input = assignment;
            return out;
        }
        case InputSchema::None: break;
    }
    return fail("unsupported input schema");
}

std::optional<AbductionResult> parse_abduction_reply(const std::string& reply,
                                                     std::string* error) {
    auto fail = [&](const std::string& message) {
        if (error) *error = message;
        return std::nullopt;
    };

    enum class Section { NoneYet, Hypothesis, Plan, Keep };
    Section current = Section::NoneYet;
    std::string hypothesis;
    std::string plan;
    std::vector<std::string> kept;

    auto append = [](std::string& dst, const std::string& text) {
        if (text.empty()) return;
        if (!dst.empty()) dst += " ";
        dst += text;
    };
    auto keep_line = [&kept](const std::string& raw) {
        std::string fact = trim(raw);
        while (!fact.empty() && (fact.front() == '-' || fact.front() == '*'))
            fact = trim(fact.substr(1));
        if (!fact.empty()) kept.push_back(fact);
    };

    for (const auto& line : split_lines(reply)) {
        std::string value;
        if (match_marker(line, "HYPOTHESIS", &value)) {
            current = Section::Hypothesis;
            append(hypothesis, trim(value));
        } else if (match_marker(line, "PLAN", &value)) {
            current = Section::Plan;
            append(plan, trim(value));
        } else if (match_marker(line, "KEEP", &value)) {
            current = Section::Keep;
            keep_line(value);
        } else {
            switch (current) {
                case Section::NoneYet: break;
                case Section::Hypothesis: append(hypothesis, trim(line)); break;
                case Section::Plan: append(plan, trim(line)); break;
                case Section::Keep: keep_line(line); break;
            }
        }
    }

    if (trim(hypothesis).empty()) return fail("reply must contain 'HYPOTHESIS: <text>'");
    if (trim(plan).empty()) return fail("reply must contain 'PLAN: <text>'");
    AbductionResult out;
    out.hypothesis = trim(hypothesis);
    out.plan = trim(plan);
    out.kept_facts = kept;
    return out;
}

std::string describe_action(const MenuEntry& entry, const ActionInput& input) {
    switch (entry.kind) {
        case ActionKind::Perceptual: return "looked at " + entry.object_id;
        case ActionKind::Abductive: return "revised hypothesis and plan";
        case ActionKind::Interactive: break;
    }
    std::string payload = std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
                return "";
            } else if constexpr (std::is_same_v<T, double>) {
                return format_double(v);
            } else if constexpr (std::is_same_v<T, DigitTriple>) {
                return std::to_string(v.digits[0]) + " " + std::to_string(v.digits[1]) + " " +
                       std::to_string(v.digits[2]);
            } else if constexpr (std::is_same_v<T, MaterialPair>) {
                return v.first + ", " + v.second;
            } else {
                std::string out;
                for (const auto& [key, value] : v.values) {
                    if (!out.empty()) out += ", ";
                    out += key + "=" + std::to_string(value);
                }
                return out;
            }
        },
        input);
    std::string text = entry.action_name + " on " + entry.object_id;
    if (!payload.empty()) text += " with " + payload;
    return text;
}

}  // namespace rulearn
