#include "rulearn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "rulearn/loop.hpp"

namespace rulearn {

namespace {

std::string action_line(int id) { return "ACTION: " + std::to_string(id); }

std::string action_line(int id, const std::string& payload) {
    return "ACTION: " + std::to_string(id) + "\nINPUT: " + payload;
}

const MenuEntry* find_entry(const std::vector<MenuEntry>& menu, ActionKind kind,
                            const std::string& object_id, const std::string& action_name) {
    for (const auto& e : menu)
        if (e.kind == kind && e.object_id == object_id && e.action_name == action_name)
            return &e;
    return nullptr;
}

const MenuEntry* require_entry(const std::vector<MenuEntry>& menu, ActionKind kind,
                               const std::string& object_id, const std::string& action_name) {
    const MenuEntry* e = find_entry(menu, kind, object_id, action_name);
    if (!e)
        throw BackendError("oracle: menu offers no " + action_name + " on " + object_id);
    return e;
}

// Shared skeleton: look at every object first (interactive actions unlock on
// perception), then run the family strategy. The oracle only ever emits
// well-formed, legal replies, so a re-prompt means a bug worth failing loudly.
class OracleSession : public DecisionSession {
public:
    std::string complete(const TurnRequest& request) final {
        if (request.retry_index > 0)
            throw BackendError("oracle: reply rejected: " + request.parse_error);
        if (request.purpose == "abduce")
            return "HYPOTHESIS: scripted solver, nothing to revise\n"
                   "PLAN: continue the scripted strategy\nKEEP:";
        return decide(request);
    }

protected:
    virtual std::string decide(const TurnRequest& request) = 0;

    std::string next_perception(const std::vector<MenuEntry>& menu) {
        for (const auto& e : menu) {
            if (e.kind != ActionKind::Perceptual || e.action_name != "perceive") continue;
            if (perceived_.insert(e.object_id).second) return action_line(e.id);
        }
        return "";
    }

private:
    std::set<std::string> perceived_;
};

// Probes machines at x = 1, 2, 3 only until exactly one constant table is
// consistent with the samples, then submits it. The hypothesis space matches
// what the prompts disclose: per function the term count and the set of
// constant ids, with kinds and id-to-slot assignment free; when the rule is
// disclosed the space collapses to the stated terms.
class FoOracleSession : public OracleSession {
public:
    explicit FoOracleSession(const SessionInfo& info) {
        constant_ids_ = info.disclosed.at("constants").get<std::vector<std::string>>();
        for (const auto& fn : info.disclosed.at("functions")) {
            FnView v;
            v.id = fn.at("id").get<std::string>();
            v.term_count = fn.at("term_count").get<int>();
            for (const auto& cid : fn.at("constant_ids")) {
                auto it = std::find(constant_ids_.begin(), constant_ids_.end(),
                                    cid.get<std::string>());
                if (it == constant_ids_.end())
                    throw BackendError("oracle: undisclosed constant id " +
                                       cid.get<std::string>());
                v.dids.push_back(static_cast<int>(it - constant_ids_.begin()));
            }
            int alive_total = 1;
            for (size_t i = 0; i < v.dids.size(); ++i) alive_total *= 10;
            v.alive.assign(static_cast<size_t>(alive_total), 1);
            fns_.push_back(std::move(v));
        }
        if (info.rule.is_object() && info.rule.contains("functions")) {
            for (const auto& fn : info.rule.at("functions")) {
                const std::string id = fn.at("id").get<std::string>();
                FnView* view = nullptr;
                for (auto& v : fns_)
                    if (v.id == id) view = &v;
                if (!view) throw BackendError("oracle: rule names unknown function " + id);
                for (const auto& term : fn.at("terms")) {
                    const std::string cid = term.at("const_id").get<std::string>();
                    auto it = std::find(constant_ids_.begin(), constant_ids_.end(), cid);
                    int global = static_cast<int>(it - constant_ids_.begin());
                    int local = -1;
                    for (size_t i = 0; i < view->dids.size(); ++i)
                        if (view->dids[i] == global) local = static_cast<int>(i);
                    if (local < 0)
                        throw BackendError("oracle: rule term uses undisclosed constant " + cid);
                    view->known_terms.push_back(
                        {local, subfunction_kind_from_string(term.at("kind").get<std::string>())});
                }
            }
        }
    }

protected:
    std::string decide(const TurnRequest& request) override {
        if (pending_fn_ >= 0) {
            const json& fb = request.last_feedback;
            if (!fb.is_object() || fb.value("type", "") != "evaluation")
                throw BackendError("oracle: expected an evaluation result");
            FnView& fn = fns_[static_cast<size_t>(pending_fn_)];
            fn.samples[pending_x_] = fb.at("data").at("value").get<double>();
            refilter(fn);
            pending_fn_ = -1;
        }
        if (std::string reply = next_perception(request.menu); !reply.empty()) return reply;

        std::vector<int> table;
        int consistent = count_consistent(&table);
        if (consistent == 1) {
            const MenuEntry* e =
                require_entry(request.menu, ActionKind::Interactive, "console", "submit");
            std::string payload;
            for (size_t i = 0; i < constant_ids_.size(); ++i) {
                if (!payload.empty()) payload += ", ";
                payload += constant_ids_[i] + "=" + std::to_string(table[i]);
            }
            return action_line(e->id, payload);
        }

        for (size_t fi = 0; fi < fns_.size(); ++fi)
            for (int x : {1, 2, 3})
                if (!fns_[fi].samples.count(x)) {
                    const MenuEntry* e = require_entry(request.menu, ActionKind::Interactive,
                                                       fns_[fi].id, "evaluate");
                    pending_fn_ = static_cast<int>(fi);
                    pending_x_ = x;
                    return action_line(e->id, std::to_string(x));
                }
        throw BackendError("oracle: constants not identifiable from full probing");
    }

private:
    struct FnView {
        std::string id;
        int term_count = 0;
        std::vector<int> dids;  // global indices of the disclosed constant ids
        std::vector<std::pair<int, SubfunctionKind>> known_terms;  // local id index, kind
        std::map<int, double> samples;  // probe x -> exact observed value
        std::vector<char> alive;        // projected-table code -> still fits samples
    };

    static bool close_enough(double got, double want) {
        return std::fabs(got - want) <= 1e-9 * std::max(1.0, std::fabs(want));
    }

    // Whether projected constant values can reproduce every sample of fn.
    static bool projected_fits(const FnView& fn, const std::vector<int>& values) {
        if (fn.samples.empty()) return true;
        if (!fn.known_terms.empty()) {
            for (const auto& [x, want] : fn.samples) {
                double sum = 0.0;
                for (const auto& [local, kind] : fn.known_terms)
                    sum += values[static_cast<size_t>(local)] *
                           *subfunction_value(kind, static_cast<double>(x));
                if (!close_enough(sum, want)) return false;
            }
            return true;
        }
        const int nt = fn.term_count;
        const int nd = static_cast<int>(fn.dids.size());
        long assign_total = 1;
        for (int i = 0; i < nt; ++i) assign_total *= nd;
        long kind_total = 1;
        for (int i = 0; i < nt; ++i) kind_total *= 7;
        std::vector<int> assign(static_cast<size_t>(nt));
        std::vector<int> kinds(static_cast<size_t>(nt));
        for (long acode = 0; acode < assign_total; ++acode) {
            long arest = acode;
            unsigned used = 0;
            for (int i = 0; i < nt; ++i) {
                assign[static_cast<size_t>(i)] = static_cast<int>(arest % nd);
                used |= 1u << assign[static_cast<size_t>(i)];
                arest /= nd;
            }
            if (used != (1u << nd) - 1u) continue;
            for (long kcode = 0; kcode < kind_total; ++kcode) {
                long rest = kcode;
                for (int i = 0; i < nt; ++i) {
                    kinds[static_cast<size_t>(i)] = static_cast<int>(rest % 7);
                    rest /= 7;
                }
                bool fits = true;
                for (const auto& [x, want] : fn.samples) {
                    double sum = 0.0;
                    for (int i = 0; i < nt; ++i)
                        sum += values[static_cast<size_t>(assign[static_cast<size_t>(i)])] *
                               *subfunction_value(
                                   kAllSubfunctionKinds[static_cast<size_t>(
                                       kinds[static_cast<size_t>(i)])],
                                   static_cast<double>(x));
                    if (!close_enough(sum, want)) {
                        fits = false;
                        break;
                    }
                }
                if (fits) return true;
            }
        }
        return false;
    }

    void refilter(FnView& fn) {
        std::vector<int> values(fn.dids.size());
        for (size_t code = 0; code < fn.alive.size(); ++code) {
            if (!fn.alive[code]) continue;
            size_t rest = code;
            for (size_t i = 0; i < values.size(); ++i) {
                values[i] = static_cast<int>(rest % 10);
                rest /= 10;
            }
            if (!projected_fits(fn, values)) fn.alive[code] = 0;
        }
    }

    // Number of full constant tables every function accepts; stops at 2.
    // Assigns ids depth-first and checks each function as soon as all of its
    // ids have values, so dead branches fall away early.
    int count_consistent(std::vector<int>* unique_table) const {
        const size_t nc = constant_ids_.size();
        std::vector<std::vector<size_t>> ready_at(nc + 1);
        for (size_t fi = 0; fi < fns_.size(); ++fi) {
            size_t deepest = 0;
            for (int gid : fns_[fi].dids)
                deepest = std::max(deepest, static_cast<size_t>(gid) + 1);
            ready_at[deepest].push_back(fi);
        }
        std::vector<int> values(nc, 0);
        std::vector<int> found;
        int consistent = 0;
        auto dfs = [&](auto&& self, size_t depth) -> bool {
            for (size_t fi : ready_at[depth]) {
                const FnView& fn = fns_[fi];
                size_t projected = 0;
                for (size_t i = fn.dids.size(); i-- > 0;)
                    projected =
                        projected * 10 +
                        static_cast<size_t>(values[static_cast<size_t>(fn.dids[i])]);
                if (!fn.alive[projected]) return false;
            }
            if (depth == nc) {
                if (++consistent == 1) {
                    found = values;
                    return false;
                }
                return true;
            }
            for (int v = 0; v <= 9; ++v) {
                values[depth] = v;
                if (self(self, depth + 1)) return true;
            }
            return false;
        };
        dfs(dfs, 0);
        if (consistent == 1 && unique_table) *unique_table = found;
        return consistent;
    }

    std::vector<std::string> constant_ids_;
    std::vector<FnView> fns_;
    int pending_fn_ = -1;
    int pending_x_ = 0;
};

// With the active color disclosed the first code is the answer. Without it,
// candidate colors are eliminated by the per-digit feedback inside a rotation
// epoch; a rotation notice resets the candidates and shifts the starting
// candidate so epochs never repeat the same guess sequence.
class ReOracleSession : public OracleSession {
public:
    explicit ReOracleSession(const SessionInfo& info) {
        for (const auto& p : info.disclosed.at("paintings")) {
            paintings_.push_back(
                {p.at("type").get<std::string>(), p.at("color").get<std::string>()});
            const std::string& color = paintings_.back().color;
            if (std::find(colors_.begin(), colors_.end(), color) == colors_.end())
                colors_.push_back(color);
        }
        if (info.rule.is_object() && info.rule.contains("active_color"))
            rule_known_ = true;
        candidates_ = colors_;
    }

protected:
    std::string decide(const TurnRequest& request) override {
        if (pending_) {
            pending_ = false;
            const json& fb = request.last_feedback;
            if (!fb.is_object() || fb.value("type", "") != "door")
                throw BackendError("oracle: expected keypad feedback");
            const json& data = fb.at("data");
            if (data.at("rotated").get<bool>()) {
                ++epoch_;
                candidates_.clear();
                for (size_t i = 0; i < colors_.size(); ++i)
                    candidates_.push_back(colors_[(epoch_ + i) % colors_.size()]);
            } else {
                std::vector<bool> correct;
                for (const auto& c : data.at("digit_correct")) correct.push_back(c.get<bool>());
                std::vector<std::string> kept;
                for (const auto& color : candidates_) {
                    std::array<int, 3> t = triple(color);
                    bool ok = true;
                    for (int i = 0; i < 3; ++i)
                        if ((t[static_cast<size_t>(i)] == last_guess_[static_cast<size_t>(i)]) !=
                            correct[static_cast<size_t>(i)])
                            ok = false;
                    if (ok) kept.push_back(color);
                }
                candidates_ = std::move(kept);
                if (candidates_.empty())
                    throw BackendError("oracle: no candidate color matches the feedback");
            }
        }
        if (std::string reply = next_perception(request.menu); !reply.empty()) return reply;

        std::string color;
        if (rule_known_) {
            if (!request.rule.is_object() || !request.rule.contains("active_color"))
                throw BackendError("oracle: disclosed rule lost its active color");
            color = request.rule.at("active_color").get<std::string>();
        } else {
            color = candidates_.front();
        }
        std::array<int, 3> t = triple(color);
        const MenuEntry* e =
            require_entry(request.menu, ActionKind::Interactive, "door", "enter_code");
        last_guess_ = t;
        pending_ = true;
        return action_line(e->id, std::to_string(t[0]) + " " + std::to_string(t[1]) + " " +
                                      std::to_string(t[2]));
    }

private:
    struct PaintingView {
        std::string type;
        std::string color;
    };

    std::array<int, 3> triple(const std::string& color) const {
        std::array<int, 3> counts{0, 0, 0};
        for (const auto& p : paintings_) {
            if (p.color != color) continue;
            if (p.type == "oil") ++counts[0];
            else if (p.type == "acrylic") ++counts[1];
            else ++counts[2];
        }
        return counts;
    }

    std::vector<PaintingView> paintings_;
    std::vector<std::string> colors_;      // distinct, in disclosure order
    std::vector<std::string> candidates_;  // colors still possible this epoch
    std::array<int, 3> last_guess_{0, 0, 0};
    bool rule_known_ = false;
    bool pending_ = false;
    size_t epoch_ = 0;
};

// With the rule disclosed, executes the shortest synthesis found by search.
// Without it, runs reactions whose predicted outcomes differ across the still
// consistent rules until one remains, then plans under that rule.
class RxOracleSession : public OracleSession {
public:
    explicit RxOracleSession(const SessionInfo& info) {
        target_ = info.disclosed.at("target").get<std::string>();
        inventory_ = info.disclosed.at("inventory").get<std::vector<std::string>>();
        max_len_ = info.disclosed.at("max_material_len").get<int>();
        consistent_.assign(kAllReactorRules.begin(), kAllReactorRules.end());
        if (info.rule.is_object() && info.rule.contains("rule"))
            consistent_ = {reactor_rule_from_string(info.rule.at("rule").get<std::string>())};
    }

protected:
    std::string decide(const TurnRequest& request) override {
        if (pending_) {
            const json& fb = request.last_feedback;
            const std::string type = fb.is_object() ? fb.value("type", "") : "";
            std::string observed;
            if (type == "fizzle") {
                observed = kFizzleSignature;
            } else if (type == "reaction") {
                std::vector<std::string> products =
                    fb.at("data").at("products").get<std::vector<std::string>>();
                observed = signature_of(products);
                for (const auto& m :
                     fb.at("data").at("new_materials").get<std::vector<std::string>>())
                    inventory_.push_back(m);
            } else {
                throw BackendError("oracle: expected a reaction result");
            }
            std::vector<ReactorRule> kept;
            for (ReactorRule r : consistent_)
                if (predicted_signature(r, pending_->a, pending_->b) == observed)
                    kept.push_back(r);
            if (kept.empty())
                throw BackendError("oracle: no combination rule matches the outcome");
            consistent_ = std::move(kept);
            pending_.reset();
        }
        if (std::string reply = next_perception(request.menu); !reply.empty()) return reply;

        if (consistent_.size() > 1) {
            if (auto probe = best_probe()) return react(request.menu, probe->a, probe->b);
        }
        int remaining = request.max_steps - request.interactive_steps_used;
        if (consistent_.size() == 1) {
            // The rule is pinned (the true rule is always among the survivors,
            // so a single survivor is it); the plan stays valid because the
            // inventory only grows.
            if (plan_pos_ >= plan_.size()) {
                std::optional<ReactionPlan> plan =
                    try_plan(consistent_.front(), remaining);
                if (!plan || plan->empty())
                    throw BackendError("oracle: target unreachable within the remaining steps");
                plan_ = std::move(*plan);
                plan_pos_ = 0;
            }
            const ReactionStep& step = plan_[plan_pos_++];
            return react(request.menu, step.a, step.b);
        }
        // No probe tells the remaining rules apart on the current inventory,
        // so they all predict the same products for any runnable reaction.
        // Advance one step under a rule that can still reach the target and
        // re-evaluate once the inventory has grown. Deepening the searches in
        // lockstep keeps a rule without any plan from forcing an exhaustive
        // sweep of its whole reachable space.
        std::set<ReactorRule> hopeless;
        for (int depth = 1; depth <= remaining; ++depth)
            for (ReactorRule r : consistent_) {
                if (hopeless.count(r)) continue;
                try {
                    std::optional<ReactionPlan> plan =
                        bfs_shortest_synthesis(inventory_, r, target_, depth, max_len_);
                    if (plan && !plan->empty())
                        return react(request.menu, plan->front().a, plan->front().b);
                } catch (const Error&) {
                    hopeless.insert(r);
                }
            }
        throw BackendError("oracle: target unreachable within the remaining steps");
    }

private:
    struct Probe {
        std::string a;
        std::string b;
    };

    static constexpr const char* kFizzleSignature = "\x01?fizzle";

    static std::string signature_of(std::vector<std::string> products) {
        std::sort(products.begin(), products.end());
        std::string out;
        for (const auto& p : products) {
            out += '\x01';
            out += p;
        }
        return out;
    }

    std::string predicted_signature(ReactorRule rule, const std::string& a,
                                    const std::string& b) const {
        std::vector<std::string> products = react_products(rule, a, b);
        for (const auto& p : products)
            if (static_cast<int>(p.size()) > max_len_) return kFizzleSignature;
        return signature_of(products);
    }

    // Ordered pair whose predicted outcome splits the consistent rules the
    // most. Inventory is scanned sorted so ties break lexicographically.
    std::optional<Probe> best_probe() const {
        std::vector<std::string> sorted = inventory_;
        std::sort(sorted.begin(), sorted.end());
        std::optional<Probe> best;
        size_t best_split = 1;
        for (const auto& a : sorted)
            for (const auto& b : sorted) {
                std::set<std::string> signatures;
                for (ReactorRule r : consistent_) signatures.insert(predicted_signature(r, a, b));
                if (signatures.size() > best_split) {
                    best_split = signatures.size();
                    best = Probe{a, b};
                }
            }
        return best;
    }

    std::string react(const std::vector<MenuEntry>& menu, const std::string& a,
                      const std::string& b) {
        const MenuEntry* e = require_entry(menu, ActionKind::Interactive, "reactor", "react");
        pending_ = Probe{a, b};
        return action_line(e->id, a + " + " + b);
    }

    // A search that overruns its state cap counts as finding no plan; that
    // only happens when the target is unreachable under the assumed rule.
    std::optional<ReactionPlan> try_plan(ReactorRule rule, int depth_cap) const {
        try {
            return bfs_shortest_synthesis(inventory_, rule, target_, depth_cap, max_len_);
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    std::string target_;
    std::vector<std::string> inventory_;
    int max_len_ = 12;
    std::vector<ReactorRule> consistent_;
    std::optional<Probe> pending_;
    ReactionPlan plan_;
    size_t plan_pos_ = 0;
};

}  // namespace

OracleBackend::OracleBackend(std::string id) : id_(std::move(id)) {}

std::unique_ptr<DecisionSession> OracleBackend::start_session(const SessionInfo& info) {
    if (info.family == "function_operator") return std::make_unique<FoOracleSession>(info);
    if (info.family == "room_escape") return std::make_unique<ReOracleSession>(info);
    if (info.family == "reactor") return std::make_unique<RxOracleSession>(info);
    throw BackendError("oracle: unsupported family " + info.family);
}

namespace {

TrialTrace run_oracle(Environment& env, AgentVariant variant) {
    OracleBackend backend;
    LoopOptions options;
    options.variant = variant;
    SessionInfo info = make_session_info(
        env, env.family() + "-" + std::to_string(env.seed()), variant, 0, options);
    return run_loop(env, backend, info, options).trace;
}

}  // namespace

TrialTrace oracle_solve_fo(const FunctionOperatorEnv& env) {
    std::unique_ptr<Environment> copy = env.clone();
    return run_oracle(*copy, AgentVariant::DeductionOnly);
}

TrialTrace oracle_solve_re(const RoomEscapeEnv& env, bool knows_color) {
    std::unique_ptr<Environment> copy = env.clone();
    return run_oracle(*copy, knows_color ? AgentVariant::DeductionOnly : AgentVariant::Baseline);
}

TrialTrace oracle_solve_rx(const ReactorEnv& env, bool rule_known) {
    std::unique_ptr<Environment> copy = env.clone();
    return run_oracle(*copy, rule_known ? AgentVariant::DeductionOnly : AgentVariant::Baseline);
}

}  // namespace rulearn
