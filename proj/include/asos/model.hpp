#ifndef ASOS_MODEL_HPP
#define ASOS_MODEL_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asos/guard.hpp"
#include "asos/token.hpp"

namespace asos {

// Sentinel for "no limit" in pin capacities and for the edge weight "*"
// (move every available token).
constexpr int kUnbounded = -1;

enum class Ordering { Fifo, Lifo, Unordered };

enum class PinDirection { In, Out };

// A token holder attached to a node. `upper_bound` limits how many tokens
// the holder may contain at once; `upper`/`lower` bound how many tokens one
// execution of the owning node may consume or must receive.
struct Pin {
    std::string id;
    PinDirection direction = PinDirection::In;
    std::string value_type = "ControlToken";
    int upper_bound = kUnbounded;
    int upper = 1;
    int lower = 1;
    Ordering ordering = Ordering::Fifo;
    bool synthetic = false;  // created by control-flow desugaring
};

// Activity parameter node: a holder forming part of the activity interface.
struct Apn : Pin {
    bool streaming = false;
    bool exception = false;
};

struct Edge {
    std::string source;  // qualified pin id ("Node.pin") or APN id
    std::string target;
    GuardPtr guard;            // parsed form; defaults to `true`
    std::string guard_text;    // original spelling, kept for serialization
    int weight = 1;            // kUnbounded encodes "*": all passing tokens
};

enum class NodeKind {
    Action,
    Call,
    Fork,
    Join,
    Merge,
    Decision,
    Initial,
    FlowFinal,
    ActivityFinal,
    AcceptEvent,
    SendSignal,
};

struct Node {
    std::string id;
    NodeKind kind = NodeKind::Action;
    std::vector<Pin> in_pins;
    std::vector<Pin> out_pins;

    // Action: key into Model::behaviors. Call: callee activity name.
    std::string behavior;
    bool synchronous = true;               // Call only
    GuardPtr join_spec;                    // Join; defaults to all-inputs
    std::string join_spec_text;
    std::optional<std::string> d_flow;     // Decision: pin id among in_pins
    std::optional<std::string> d_behavior; // Decision: activity name
    std::string event;                     // AcceptEvent / SendSignal
    std::string result;                    // AcceptEvent: pin id among out_pins
    std::string pool = "main";             // AcceptEvent / SendSignal
};

// Binds an exception handler node (owned by the same activity as the
// protected call node) to the exceptions of the callee, by value type.
struct HandlerBinding {
    std::string protects;  // Call node id
    std::string handler;   // handler node id
    std::string exception_type;
};

struct Activity {
    std::string name;
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<Apn> apns;
    std::vector<std::vector<std::string>> parameter_sets;  // apn id groups
    std::vector<HandlerBinding> handlers;

    const Node* find_node(const std::string& id) const;
    const Apn* find_apn(const std::string& id) const;
};

// An action's input-to-output mapping: either a builtin function or an
// explicit table of rows. Unbound actions fall back to a default that emits
// one control token per control output and one null per data output.
struct Behavior {
    enum class Kind { Identity, Const, Add, Negate, Table };
    Kind kind = Kind::Identity;
    TokenValue const_value;  // Const
    struct Row {
        std::map<std::string, TokenSeq> in;
        std::map<std::string, TokenSeq> out;
    };
    std::vector<Row> rows;  // Table
};

// Where a holder id resolves to inside one activity.
struct HolderInfo {
    const Activity* activity = nullptr;
    const Node* node = nullptr;  // null for APNs
    const Pin* pin = nullptr;    // points into node pins or the APN itself
    bool is_apn = false;
    bool is_dbres = false;  // synthetic decision-behavior result holder
};

struct Model {
    std::vector<std::string> events;
    std::vector<std::string> datatypes;
    std::vector<std::string> pools{"main"};
    std::string root;
    std::map<std::string, Behavior> behaviors;
    std::vector<Activity> activities;

    const Activity* find_activity(const std::string& name) const;

    // Resolves "Node.pin", an APN id, or "Node.dbres" within `act`.
    // Returns nullopt for unknown ids.
    std::optional<HolderInfo> resolve_holder(const Activity& act, const std::string& id) const;

    // All holder ids of an activity (node pins, dbres holders, APNs) in
    // declaration order.
    std::vector<std::string> holder_ids(const Activity& act) const;

    // Incoming edge indices per target holder id, in edge declaration order.
    std::vector<int> edges_into(const Activity& act, const std::string& holder) const;
    std::vector<int> edges_out_of(const Activity& act, const std::string& holder) const;
};

// True for the switch-node kinds barred from holding tokens across visible
// states (join, fork, merge, decision).
bool is_switch_node(NodeKind k);

std::string qualified_pin_id(const Node& n, const Pin& p);

// The synthetic holder where a decision with an attached behavior receives
// the behavior's result before evaluating its edge guards.
std::string dbres_holder_id(const Node& decision);

// True when a decision node carries the given holder as its dbres holder.
bool is_dbres_id(const std::string& holder);

// Applies an ordering discipline to a token sequence about to be stored:
// FIFO keeps arrival order, LIFO reverses it, unordered sorts canonically.
TokenSeq order_tokens(Ordering o, TokenSeq s);

// Inserts freshly arriving tokens into existing holder content under the
// holder's discipline (append for FIFO, prepend-reversed for LIFO,
// canonical re-sort for unordered).
TokenSeq insert_tokens(Ordering o, const TokenSeq& existing, const TokenSeq& arriving);

// Evaluates an action behavior over consumed inputs. Output sequences are
// keyed by out-pin id. Missing binding uses the default described above.
std::map<std::string, TokenSeq> eval_behavior(const Model& m, const Node& action,
                                              const std::map<std::string, TokenSeq>& f_in);

// Serializes a model to its document form; parse_model(emit_model(m))
// yields a structurally equal model.
std::string emit_model(const Model& m);

bool operator==(const Model& a, const Model& b);

}  // namespace asos

#endif
