#pragma once

#include <memory>
#include <string>

#include "rulearn/backend.hpp"
#include "rulearn/function_operator.hpp"
#include "rulearn/reactor.hpp"
#include "rulearn/room_escape.hpp"
#include "rulearn/types.hpp"

namespace rulearn {

// Scripted family solvers exposed as a decision backend. Sessions play by
// the rules: disclosed structure, menu entries, and feedback only. With the
// rule disclosed they execute directly; without it they probe first.
class OracleBackend : public DecisionBackend {
public:
    explicit OracleBackend(std::string id = "oracle");

    std::string id() const override { return id_; }
    std::unique_ptr<DecisionSession> start_session(const SessionInfo& info) override;

private:
    std::string id_;
};

// Convenience wrappers running the oracle over a copy of one environment.
TrialTrace oracle_solve_fo(const FunctionOperatorEnv& env);
TrialTrace oracle_solve_re(const RoomEscapeEnv& env, bool knows_color);
TrialTrace oracle_solve_rx(const ReactorEnv& env, bool rule_known);

}  // namespace rulearn
