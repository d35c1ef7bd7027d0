#ifndef ASOS_VALIDATE_HPP
#define ASOS_VALIDATE_HPP

#include <string>
#include <vector>

#include "asos/model.hpp"

namespace asos {

struct ValidationIssue {
    std::string code;     // stable machine-readable identifier
    std::string element;  // offending element, e.g. "Main/A.out"
    std::string message;  // human-readable explanation
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

// Checks every structural well-formedness rule of the model. Each rule maps
// to exactly one issue code:
//   root-missing                 root does not name an activity
//   behavior-missing             call/decision behavior is not an activity
//   action-behavior-missing      action behavior key is not in the table
//   sync-recursion               cycle of synchronous calls or decision
//                                behaviors
//   edge-endpoint-missing        edge endpoint does not resolve
//   edge-direction               edge must run out-pin/input-APN ->
//                                in-pin/output-APN within one activity
//   parameter-set-unknown-apn    parameter set references unknown APN
//   duplicate-pin                two pins of one node share an id
//   fork-single-input            fork needs exactly one input pin
//   fork-output-missing          fork needs at least one output pin
//   initial-no-inputs            initial nodes take no inputs
//   initial-single-output        initial nodes have exactly one output pin
//   final-no-outputs             final nodes have no output pins
//   join-arity                   join needs >=1 inputs, exactly one output
//   merge-arity                  merge needs >=1 inputs, exactly one output
//   decision-input-arity         decision has exactly one regular input
//   decision-dflow-missing       d_flow is not one of the decision's inputs
//   decision-dflow-dbehavior     d_flow and d_behavior are exclusive
//   accept-result-missing        accept_event result is not an output pin
//   event-unknown                referenced event is not declared
//   pool-unknown                 referenced pool is not declared
//   call-control-edge            call nodes take no control-flow sugar
//   call-target-no-apns          callee has no parameter nodes
//   guard-else-context           `else` outside a decision output edge
//   guard-type-mismatch          guard literal type differs from the pin type
//   join-spec-unknown-pin        join_spec references a non-input pin
//   pin-bounds                   lower exceeds upper
//   control-pin-type             synthetic control pins carry control tokens
//   apn-exception-direction      exception parameters are outputs
//   apn-streaming-exception      streaming and exception are exclusive
//   handler-unknown              handler binding references unknown nodes
//   handler-arity                handler node needs exactly one input pin
ValidationReport validate(const Model& m);

}  // namespace asos

#endif
