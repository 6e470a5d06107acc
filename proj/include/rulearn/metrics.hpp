#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rulearn/types.hpp"

namespace rulearn {

struct WilsonInterval {
    double low = 0.0;   // percentage, rounded to 2 decimals
    double high = 0.0;  // percentage, rounded to 2 decimals
    double confidence = 0.95;
};

// Wilson score interval for s successes out of n, as percentages rounded to
// 2 decimals. Only 95% confidence is supported; it uses z = 1.959964.
WilsonInterval wilson_ci(int successes, int trials, double confidence = 0.95);

// Interactive actions whose canonical form duplicates an earlier interactive
// action in the same trace.
int count_repeats(const TrialTrace& trace);

struct RefinementStats {
    int total = 0;
    int with_refinement = 0;
    int without_refinement = 0;
    int solved_with = 0;
    int solved_without = 0;
    // Percentages; absent when the stratum is empty.
    std::optional<double> success_rate_with;
    std::optional<double> success_rate_without;
};

// A trace counts as "with refinement" iff it holds at least two abduction
// events (the initial hypothesis plus one revision).
RefinementStats refinement_stats(const std::vector<TrialTrace>& traces);

// curve[k] = traces solved using at most k interactive steps, k = 0..max_steps.
std::vector<int> solve_curve(const std::vector<TrialTrace>& traces, int max_steps);

struct ReportCell {
    std::string agent_variant;
    std::string family;
    std::string backend_id;
    int trials = 0;
    int solved = 0;
    int unfinished = 0;
    double success_rate = 0.0;  // percentage
    WilsonInterval ci;
    double mean_repeats = 0.0;
    double mean_steps_when_solved = 0.0;
    RefinementStats refinements;
    std::vector<int> curve;
};

struct SuiteReport {
    std::vector<ReportCell> cells;
    std::vector<std::string> unfinished_trials;  // "puzzle_id#trial" labels

    json to_json() const;
    // CSV rows (step, setup, family, backend, cumulative), with header.
    std::string curves_csv() const;
};

// Groups traces by (agent_variant, family, backend_id). Incomplete traces
// count as failures and are listed as unfinished.
SuiteReport aggregate_report(const std::vector<TrialTrace>& traces, int max_steps);

}  // namespace rulearn
