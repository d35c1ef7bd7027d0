#ifndef ASOS_PROFILE_HPP
#define ASOS_PROFILE_HPP

#include <map>
#include <string>
#include <vector>

#include "asos/model.hpp"

namespace asos {

enum class RuleKind { Micro, Macro };

struct RuleDef {
    std::string id;
    RuleKind kind = RuleKind::Macro;
    std::string summary;
};

// How invocation steps acquire their input tokens: by pulling over the
// incoming edges (reference) or from the node's own input pins, with a
// standalone transfer step moving tokens across edges beforehand.
enum class ConsumptionMode { FromEdges, FromPins };

// How one observable transition is closed: any interleaving of small steps
// followed by one labelled step, or small steps driven greedily to
// quiescence first.
enum class ClosurePolicy { Standard, EagerTransfer };

// A pluggable semantics: the reference rule set plus optional extensions.
// Extensions compose; each one only adds rules or strengthens premises.
struct SemanticsProfile {
    std::string name = "reference";

    bool exec_time = false;
    std::map<std::string, int> timing;  // action node id -> time units

    bool single_core = false;

    ConsumptionMode consumption = ConsumptionMode::FromEdges;
    ClosurePolicy closure = ClosurePolicy::Standard;
    bool edge_transfer_rule = false;  // standalone edge-transfer small step

    // The active rule catalog, base rules plus extension rules, in the
    // deterministic order used for enumeration.
    std::vector<RuleDef> catalog() const;
};

SemanticsProfile profile_reference();

// Adds per-action execution times: invocation starts a clock, a global tick
// advances all clocks, actions become ready only once their clock reaches
// the configured time. The table must cover every action in the model the
// profile is used with (checked by the CLI when loading).
SemanticsProfile extend_execution_time(SemanticsProfile p, std::map<std::string, int> timing);

// Restricts every invocation step: it only fires while no other node is
// executing.
SemanticsProfile extend_single_core(SemanticsProfile p);

enum class ConsumptionVariation {
    EagerTransfer,   // transfers propagate greedily before each labelled step
    TransferAnyTime  // transfers interleave freely with labelled steps
};

// Splits token transfer out of the invocation steps: tokens move across
// edges in standalone small steps and invocations consume from their own
// input pins.
SemanticsProfile extend_consumption(SemanticsProfile p, ConsumptionVariation v);

// Parses a comma-separated profile spec: "reference", "exec-time",
// "single-core", "var1" (eager transfer), "var2" (transfer any time).
// Throws std::invalid_argument for unknown parts.
SemanticsProfile parse_profile_spec(const std::string& spec,
                                    const std::map<std::string, int>& timing = {});

}  // namespace asos

#endif
