#include "asos/profile.hpp"

#include <sstream>
#include <stdexcept>

namespace asos {

namespace {

const std::vector<RuleDef>& base_catalog() {
    static const std::vector<RuleDef> defs = {
        {"A1", RuleKind::Macro, "action invocation: consume inputs, start executing"},
        {"A2", RuleKind::Macro, "action termination: evaluate behavior, deliver outputs"},
        {"I1", RuleKind::Macro, "initial node termination: offer one control token"},
        {"F1", RuleKind::Micro, "fork consumption: pull forwardable tokens onto the input pin"},
        {"F2", RuleKind::Micro, "fork offer: duplicate tokens to passing output pins"},
        {"J1", RuleKind::Micro, "join invocation: consume one offer per satisfied input"},
        {"J2", RuleKind::Macro, "join ordering: register a newly offering data pin"},
        {"J3", RuleKind::Macro, "join ordering: drop a data pin that stopped offering"},
        {"J4", RuleKind::Micro, "join completion: emit the combined result"},
        {"M1", RuleKind::Micro, "merge transfer: route tokens straight to the output pin"},
        {"D1", RuleKind::Micro, "decision invocation: park equal-length inputs on the pins"},
        {"D2", RuleKind::Micro, "decision completion: all inputs routed"},
        {"D3", RuleKind::Micro, "decision routing on the token itself"},
        {"D4", RuleKind::Micro, "decision routing on a decision-flow token"},
        {"D5", RuleKind::Micro, "decision routing on an evaluated result"},
        {"D6", RuleKind::Micro, "decision evaluation start: copy heads to the behavior"},
        {"D7", RuleKind::Macro, "decision evaluation end: collect the behavior result"},
        {"FF1", RuleKind::Macro, "flow-final invocation: swallow one offer"},
        {"FF2", RuleKind::Macro, "flow-final termination"},
        {"AF1", RuleKind::Macro, "activity-final: stop an instance nobody waits on"},
        {"AF2", RuleKind::Macro, "activity-final: stop and hand outputs to the caller"},
        {"AE1", RuleKind::Macro, "accept-event arming: consume inputs, start waiting"},
        {"AE2", RuleKind::Macro, "accept-event delivery for an armed node"},
        {"AE3", RuleKind::Macro, "accept-event delivery for an always-armed node"},
        {"S1", RuleKind::Macro, "send-signal invocation: emit the event"},
        {"S2", RuleKind::Macro, "send-signal termination: offer control tokens"},
        {"C1", RuleKind::Macro, "call invocation via a parameter set with required inputs"},
        {"C2", RuleKind::Macro, "call invocation via a streaming-only parameter set"},
        {"C3", RuleKind::Macro, "streaming input delivery into a running callee"},
        {"C4", RuleKind::Micro, "streaming output delivery out of a running callee"},
        {"V1", RuleKind::Macro, "instance start: choose a parameter set covering the inputs"},
        {"V2", RuleKind::Macro, "instance termination: hand outputs to the synchronous caller"},
        {"V3", RuleKind::Micro, "transfer onto an output parameter"},
        {"X1", RuleKind::Macro, "exception raise: reset the instance, record the value"},
        {"X2", RuleKind::Micro, "exception handling: deliver the value to the handler"},
        {"X3", RuleKind::Macro, "exception propagation to the caller"},
        {"X4", RuleKind::Macro, "exception drop for an asynchronous callee"},
        {"X5", RuleKind::Macro, "handler completion: map results onto the call outputs"},
    };
    return defs;
}

}  // namespace

std::vector<RuleDef> SemanticsProfile::catalog() const {
    std::vector<RuleDef> defs = base_catalog();
    if (exec_time) {
        defs.push_back({"ExeTime", RuleKind::Macro,
                        "executing action becomes ready once its clock expires"});
        defs.push_back({"Tick", RuleKind::Micro, "advance every running clock by one unit"});
    }
    if (edge_transfer_rule)
        defs.push_back({"T1", RuleKind::Micro, "standalone token transfer across one edge"});
    return defs;
}

SemanticsProfile profile_reference() { return {}; }

SemanticsProfile extend_execution_time(SemanticsProfile p, std::map<std::string, int> timing) {
    p.exec_time = true;
    p.timing = std::move(timing);
    p.name += "+exec-time";
    return p;
}

SemanticsProfile extend_single_core(SemanticsProfile p) {
    p.single_core = true;
    p.name += "+single-core";
    return p;
}

SemanticsProfile extend_consumption(SemanticsProfile p, ConsumptionVariation v) {
    p.consumption = ConsumptionMode::FromPins;
    p.edge_transfer_rule = true;
    p.closure = v == ConsumptionVariation::EagerTransfer ? ClosurePolicy::EagerTransfer
                                                         : ClosurePolicy::Standard;
    p.name += v == ConsumptionVariation::EagerTransfer ? "+var1" : "+var2";
    return p;
}

SemanticsProfile parse_profile_spec(const std::string& spec,
                                    const std::map<std::string, int>& timing) {
    SemanticsProfile p = profile_reference();
    std::istringstream in(spec.empty() ? "reference" : spec);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part == "reference" || part.empty())
            continue;
        else if (part == "exec-time")
            p = extend_execution_time(std::move(p), timing);
        else if (part == "single-core")
            p = extend_single_core(std::move(p));
        else if (part == "var1")
            p = extend_consumption(std::move(p), ConsumptionVariation::EagerTransfer);
        else if (part == "var2")
            p = extend_consumption(std::move(p), ConsumptionVariation::TransferAnyTime);
        else
            throw std::invalid_argument("unknown profile part: " + part);
    }
    return p;
}

}  // namespace asos
