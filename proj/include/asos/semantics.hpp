#ifndef ASOS_SEMANTICS_HPP
#define ASOS_SEMANTICS_HPP

#include <string>
#include <vector>

#include "asos/model.hpp"
#include "asos/profile.hpp"
#include "asos/state.hpp"

namespace asos {

// One applicable rule binding: which catalog rule, where it applies, and
// the state it produces. Instances are only valid against the exact state
// they were derived from.
struct RuleInstance {
    std::string rule;    // catalog id
    RuleKind kind = RuleKind::Macro;
    std::string scope;   // instance path the binding lives in
    std::string node;    // primary node id ("" for activity-level rules)
    std::string label;   // observable label: i(n), t(n), tau, tick, exeTime(n), r(a-b)
    std::string detail;  // binding description for diagnostics
    std::string source;  // fingerprint of the state the instance came from
    ExecState next;
};

// Every rule instance applicable in `s` under the profile, in deterministic
// catalog/binding order.
std::vector<RuleInstance> applicable(const Model& m, const ExecState& s,
                                     const SemanticsProfile& p);

// Applies a previously derived instance. Throws std::logic_error when the
// instance came from a different state.
ExecState fire(const ExecState& s, const RuleInstance& r);

struct Transition {
    std::string label;
    std::string rule;
    ExecState target;
};

struct TransitionOptions {
    int max_micro_depth = 100000;  // distinct intermediate states per closure
};

struct TransitionResult {
    std::vector<Transition> transitions;  // deduplicated, deterministic order
    std::vector<std::string> diagnostics;
};

// The observable transitions out of a visible state: small steps (any
// interleaving, or a greedy sweep under the eager policy) followed by one
// labelled step whose post-state satisfies the visibility side conditions.
TransitionResult transitions(const Model& m, const ExecState& s, const SemanticsProfile& p,
                             const TransitionOptions& opt = {});

// Every individual small and labelled step, unfiltered; used for the
// complete structure.
std::vector<Transition> raw_steps(const Model& m, const ExecState& s,
                                  const SemanticsProfile& p);

// Side conditions on visible states: switch-node input pins are empty,
// non-fork switch-node output pins are empty, every fork has at least one
// empty output pin. Pins of decisions with an attached evaluation behavior
// are exempt (their evaluation pipeline legitimately spans transitions).
bool visible_state_ok(const Model& m, const ExecState& s);

// One enumerated way of moving tokens across an edge: k tokens, taken as
// the first k guard-passing tokens of the source holder.
struct TransferChoice {
    int k = 0;
    TokenSeq tokens;
};

// All transfer choices for edge `e` in instance `scope`. Switch-node
// targets yield one choice per admissible k; other targets at most one.
std::vector<TransferChoice> transfer_choices(const Model& m, const ExecState& s,
                                             const std::string& scope, const Activity& act,
                                             const Edge& e);

}  // namespace asos

#endif
