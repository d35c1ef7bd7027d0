#ifndef ASOS_STATE_HPP
#define ASOS_STATE_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asos/model.hpp"
#include "asos/token.hpp"

namespace asos {

// Status of one node instance. Joins carry the order in which their data
// inputs began offering tokens; executing nodes carry the consumed input
// sequences keyed by pin id. Ready marks an action whose execution time has
// elapsed but whose termination step has not fired yet (timed profiles).
struct NodeStatus {
    enum class Kind { Idle, IdleOrdered, Executing, Ready };
    Kind kind = Kind::Idle;
    std::vector<std::string> p_order;      // IdleOrdered
    std::map<std::string, TokenSeq> f_in;  // Executing / Ready

    bool operator==(const NodeStatus&) const = default;
};

// Status of one activity instance. Executing instances remember the chosen
// parameter set and the parameter nodes that still have to be fed before
// the instance may terminate regularly.
struct ActivityStatus {
    enum class Kind { Idle, Executing, Exception };
    Kind kind = Kind::Idle;
    std::set<std::string> p_set;    // Executing: APN ids of the chosen set
    std::set<std::string> pending;  // Executing: APNs not yet fed
    TokenSeq exception;             // Exception: the thrown value sequence

    bool operator==(const ActivityStatus&) const = default;
};

// A full execution snapshot. All maps are sparse: entries equal to the
// default (idle status, empty holder, absent clock) are never stored, so
// structural equality coincides with semantic equality.
//
// Keys are instance-qualified: the root instance has path "", the callee
// behind call node c1 has path "c1/", the evaluation instance of decision
// d1's attached behavior has path "d1#db/". Node keys are "<path><node>",
// holder keys "<path><node>.<pin>" or "<path><apn>".
struct ExecState {
    std::map<std::string, NodeStatus> nodes;
    std::map<std::string, ActivityStatus> acts;
    std::map<std::string, TokenSeq> holders;
    std::map<std::string, TokenSeq> pools;  // canonical multisets
    std::map<std::string, int> clocks;

    bool operator==(const ExecState&) const = default;
    bool operator<(const ExecState& o) const;
};

NodeStatus node_status(const ExecState& s, const std::string& key);
ActivityStatus act_status(const ExecState& s, const std::string& path);
const TokenSeq& holder_content(const ExecState& s, const std::string& key);
std::optional<int> clock_value(const ExecState& s, const std::string& key);

// Setters normalize: writing a default erases the entry.
void set_node_status(ExecState& s, const std::string& key, NodeStatus st);
void set_act_status(ExecState& s, const std::string& path, ActivityStatus st);
void set_holder(ExecState& s, const std::string& key, TokenSeq v);
void set_clock(ExecState& s, const std::string& key, std::optional<int> v);
void add_to_pool(ExecState& s, const std::string& pool, const TokenValue& v);
bool remove_from_pool(ExecState& s, const std::string& pool, const TokenValue& v);

// Instance path helpers.
std::string child_path(const std::string& path, const std::string& call_node);
std::string dbehavior_path(const std::string& path, const std::string& decision_node);

struct CallerRef {
    std::string parent;  // caller instance path
    std::string node;    // call or decision node id in the caller activity
    bool dbehavior = false;
};

// Root has no caller.
std::optional<CallerRef> caller_of(const std::string& path);

// Resolves an instance path to its activity, following call-node behaviors
// and decision behaviors from the root. Null for broken paths.
const Activity* activity_of_instance(const Model& m, const std::string& path);

// Every instance path that occurs in the state, plus the root.
std::vector<std::string> live_instances(const Model& m, const ExecState& s);

// Splits a state-map key into instance path ("" or ending in "/") and the
// local part.
std::pair<std::string, std::string> split_key(const std::string& key);

// Initial snapshot: the root instance is executing with its full parameter
// set, initial nodes and parameterless accept-event actions are executing,
// every holder and pool is empty.
ExecState initial_state(const Model& m);

// Deterministic text form; two states are equal iff their serializations
// are equal.
std::string canonical_serialize(const ExecState& s);

// SHA-256 of the canonical serialization, hex-encoded.
std::string fingerprint(const ExecState& s);

// Serialization restricted to the observable part: switch-node pins and
// decision-behavior result holders are dropped.
std::string macro_view(const Model& m, const ExecState& s);

// Atomic propositions of a state: executing(n)/idle(n) per node of each
// live instance, exception(a) per instance in exception status, and
// `terminated` when the root instance is idle. (The explorer adds
// `deadlock` to states without successors.)
std::vector<std::string> propositions(const Model& m, const ExecState& s);

}  // namespace asos

#endif
