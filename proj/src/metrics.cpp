#include "rulearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

namespace rulearn {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

WilsonInterval wilson_ci(int successes, int trials, double confidence) {
    if (trials < 1) throw Error("wilson_ci: empty sample");
    if (successes < 0 || successes > trials) throw Error("wilson_ci: successes out of range");
    if (std::fabs(confidence - 0.95) > 1e-12)
        throw Error("wilson_ci: only 95% confidence is supported");

    const double z = 1.959964;
    const double n = trials;
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;

    WilsonInterval out;
    out.confidence = confidence;
    out.low = round2(std::max(0.0, center - half) * 100.0);
    out.high = round2(std::min(1.0, center + half) * 100.0);
    return out;
}

int count_repeats(const TrialTrace& trace) {
    std::unordered_set<std::string> seen;
    int repeats = 0;
    for (const auto& event : trace.events) {
        if (event.kind != ActionKind::Interactive) continue;
        if (!seen.insert(canonical_event_key(event)).second) ++repeats;
    }
    return repeats;
}

RefinementStats refinement_stats(const std::vector<TrialTrace>& traces) {
    RefinementStats stats;
    for (const auto& t : traces) {
        ++stats.total;
        bool refined = t.abduction_count() >= 2;
        if (refined) {
            ++stats.with_refinement;
            if (t.solved()) ++stats.solved_with;
        } else {
            ++stats.without_refinement;
            if (t.solved()) ++stats.solved_without;
        }
    }
    if (stats.with_refinement > 0)
        stats.success_rate_with =
            round2(100.0 * stats.solved_with / stats.with_refinement);
    if (stats.without_refinement > 0)
        stats.success_rate_without =
            round2(100.0 * stats.solved_without / stats.without_refinement);
    return stats;
}

std::vector<int> solve_curve(const std::vector<TrialTrace>& traces, int max_steps) {
    std::vector<int> curve(static_cast<size_t>(max_steps) + 1, 0);
    for (const auto& t : traces) {
        if (!t.solved()) continue;
        int used = std::min(t.interactive_steps_used(), max_steps);
        for (int k = used; k <= max_steps; ++k) curve[static_cast<size_t>(k)]++;
    }
    return curve;
}

namespace {

ReportCell make_cell(const std::string& variant, const std::string& family,
                     const std::string& backend, const std::vector<const TrialTrace*>& members,
                     int max_steps) {
    ReportCell cell;
    cell.agent_variant = variant;
    cell.family = family;
    cell.backend_id = backend;
    cell.trials = static_cast<int>(members.size());

    std::vector<TrialTrace> copies;
    double repeat_sum = 0.0;
    double step_sum = 0.0;
    for (const TrialTrace* t : members) {
        copies.push_back(*t);
        if (!t->complete()) ++cell.unfinished;
        if (t->solved()) {
            ++cell.solved;
            step_sum += t->interactive_steps_used();
        }
        repeat_sum += count_repeats(*t);
    }
    cell.success_rate = round2(100.0 * cell.solved / cell.trials);
    cell.ci = wilson_ci(cell.solved, cell.trials);
    cell.mean_repeats = repeat_sum / cell.trials;
    cell.mean_steps_when_solved = cell.solved ? step_sum / cell.solved : 0.0;
    cell.refinements = refinement_stats(copies);
    cell.curve = solve_curve(copies, max_steps);
    return cell;
}

}  // namespace

SuiteReport aggregate_report(const std::vector<TrialTrace>& traces, int max_steps) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const TrialTrace*>>
        groups;
    for (const auto& t : traces)
        groups[{t.agent_variant, t.family, t.backend_id}].push_back(&t);

    SuiteReport report;
    for (const auto& [key, members] : groups) {
        for (const TrialTrace* t : members)
            if (!t->complete())
                report.unfinished_trials.push_back(t->puzzle_id + "#" +
                                                   std::to_string(t->trial_index));
        report.cells.push_back(make_cell(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                         members, max_steps));
    }

    // Pooled rows across families, one per (setup, backend) that spans more
    // than one family.
    std::map<std::pair<std::string, std::string>, std::vector<const TrialTrace*>> pooled;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> pooled_families;
    for (const auto& t : traces) {
        pooled[{t.agent_variant, t.backend_id}].push_back(&t);
        pooled_families[{t.agent_variant, t.backend_id}].insert(t.family);
    }
    for (const auto& [key, members] : pooled) {
        if (pooled_families[key].size() < 2) continue;
        report.cells.push_back(make_cell(key.first, "all", key.second, members, max_steps));
    }
    return report;
}

json SuiteReport::to_json() const {
    json cells_json = json::array();
    for (const auto& c : cells) {
        json rj = json::object();
        rj["total"] = c.refinements.total;
        rj["with_refinement"] = c.refinements.with_refinement;
        rj["without_refinement"] = c.refinements.without_refinement;
        rj["solved_with"] = c.refinements.solved_with;
        rj["solved_without"] = c.refinements.solved_without;
        if (c.refinements.success_rate_with)
            rj["success_rate_with"] = *c.refinements.success_rate_with;
        if (c.refinements.success_rate_without)
            rj["success_rate_without"] = *c.refinements.success_rate_without;

        cells_json.push_back(json{{"setup", c.agent_variant},
                                  {"family", c.family},
                                  {"backend", c.backend_id},
                                  {"trials", c.trials},
                                  {"solved", c.solved},
                                  {"unfinished", c.unfinished},
                                  {"success_rate", c.success_rate},
                                  {"wilson_ci", json::array({c.ci.low, c.ci.high})},
                                  {"mean_repeats", c.mean_repeats},
                                  {"mean_steps_when_solved", c.mean_steps_when_solved},
                                  {"refinements", rj},
                                  {"solve_curve", c.curve}});
    }
    json out;
    out["cells"] = cells_json;
    out["unfinished_trials"] = unfinished_trials;
    out["notes"] = json::array(
        {"unparseable trials count as failures",
         "repeat counts consider schema-valid interactive actions only"});
    return out;
}

std::string SuiteReport::curves_csv() const {
    std::string csv = "step,setup,family,backend,cumulative\n";
    for (const auto& c : cells)
        for (size_t k = 0; k < c.curve.size(); ++k)
            csv += std::to_string(k) + "," + c.agent_variant + "," + c.family + "," +
                   c.backend_id + "," + std::to_string(c.curve[k]) + "\n";
    return csv;
}

}  // namespace rulearn
