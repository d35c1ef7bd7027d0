#include "asos/validate.hpp"

#include <map>
#include <set>
#include <sstream>

namespace asos {

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    for (const auto& i : issues) os << i.code << " @ " << i.element << ": " << i.message << "\n";
    return os.str();
}

namespace {

class Checker {
  public:
    explicit Checker(const Model& m) : m_(m) {}

    ValidationReport run() {
        if (!m_.find_activity(m_.root))
            add("root-missing", m_.root, "root does not name an activity");
        for (const auto& act : m_.activities) check_activity(act);
        check_sync_recursion();
        return std::move(report_);
    }

  private:
    void add(const std::string& code, const std::string& element, const std::string& message) {
        report_.issues.push_back({code, element, message});
    }

    bool is_event(const std::string& name) const {
        for (const auto& e : m_.events)
            if (e == name) return true;
        return false;
    }

    bool is_pool(const std::string& name) const {
        for (const auto& p : m_.pools)
            if (p == name) return true;
        return false;
    }

    void check_pin(const Activity& act, const Node* n, const Pin& p) {
        std::string el = act.name + "/" + (n ? qualified_pin_id(*n, p) : p.id);
        if (p.upper != kUnbounded && p.lower > p.upper)
            add("pin-bounds", el, "lower exceeds upper");
        if (p.synthetic && n && p.id.rfind("ctl_", 0) == 0 && p.value_type != "ControlToken")
            add("control-pin-type", el, "synthetic control pins must carry control tokens");
    }

    void check_node(const Activity& act, const Node& n) {
        std::string el = act.name + "/" + n.id;
        std::set<std::string> pin_ids;
        for (const auto& p : n.in_pins) {
            if (!pin_ids.insert(p.id).second) add("duplicate-pin", el + "." + p.id, "pin id reused");
            check_pin(act, &n, p);
        }
        for (const auto& p : n.out_pins) {
            if (!pin_ids.insert(p.id).second) add("duplicate-pin", el + "." + p.id, "pin id reused");
            check_pin(act, &n, p);
        }
        switch (n.kind) {
            case NodeKind::Action:
                if (!n.behavior.empty() && !m_.behaviors.count(n.behavior))
                    add("action-behavior-missing", el, "behavior '" + n.behavior + "' is not defined");
                break;
            case NodeKind::Call: {
                const Activity* callee = m_.find_activity(n.behavior);
                if (!callee) {
                    add("behavior-missing", el, "call target '" + n.behavior + "' is not an activity");
                    break;
                }
                if (callee->apns.empty())
                    add("call-target-no-apns", el, "callee has no parameter nodes; it can never be invoked");
                for (const auto& p : n.in_pins)
                    if (!callee->find_apn(p.id))
                        add("call-control-edge", el + "." + p.id,
                            "call nodes accept no control-flow sugar; route control through a parameter");
                for (const auto& p : n.out_pins)
                    if (!callee->find_apn(p.id))
                        add("call-control-edge", el + "." + p.id,
                            "call nodes accept no control-flow sugar; route control through a parameter");
                break;
            }
            case NodeKind::Fork:
                if (n.in_pins.size() != 1)
                    add("fork-single-input", el, "fork needs exactly one input pin");
                if (n.out_pins.empty())
                    add("fork-output-missing", el, "fork needs at least one output pin");
                break;
            case NodeKind::Join: {
                if (n.in_pins.empty() || n.out_pins.size() != 1)
                    add("join-arity", el, "join needs >=1 input pins and exactly one output pin");
                std::vector<std::string> refs;
                collect_pin_refs(n.join_spec, refs);
                for (const auto& r : refs) {
                    bool known = false;
                    for (const auto& p : n.in_pins) known |= p.id == r;
                    if (!known)
                        add("join-spec-unknown-pin", el, "join_spec references '" + r + "'");
                }
                break;
            }
            case NodeKind::Merge:
                if (n.in_pins.empty() || n.out_pins.size() != 1)
                    add("merge-arity", el, "merge needs >=1 input pins and exactly one output pin");
                break;
            case NodeKind::Decision: {
                int regular = 0;
                bool dflow_found = false;
                for (const auto& p : n.in_pins) {
                    if (n.d_flow && p.id == *n.d_flow)
                        dflow_found = true;
                    else
                        ++regular;
                }
                if (regular != 1)
                    add("decision-input-arity", el, "decision needs exactly one regular input pin");
                if (n.d_flow && !dflow_found)
                    add("decision-dflow-missing", el, "d_flow is not one of the decision's input pins");
                if (n.d_flow && n.d_behavior)
                    add("decision-dflow-dbehavior", el, "d_flow and d_behavior cannot be combined");
                if (n.d_behavior && !m_.find_activity(*n.d_behavior))
                    add("behavior-missing", el, "decision behavior '" + *n.d_behavior + "' is not an activity");
                break;
            }
            case NodeKind::Initial:
                if (!n.in_pins.empty()) add("initial-no-inputs", el, "initial nodes take no inputs");
                if (n.out_pins.size() != 1)
                    add("initial-single-output", el, "initial nodes have exactly one output pin");
                break;
            case NodeKind::FlowFinal:
            case NodeKind::ActivityFinal:
                if (!n.out_pins.empty()) add("final-no-outputs", el, "final nodes have no outputs");
                break;
            case NodeKind::AcceptEvent: {
                bool found = false;
                for (const auto& p : n.out_pins) found |= p.id == n.result;
                if (!found)
                    add("accept-result-missing", el, "result must name one of the output pins");
                if (!is_event(n.event)) add("event-unknown", el, "event '" + n.event + "' not declared");
                if (!is_pool(n.pool)) add("pool-unknown", el, "pool '" + n.pool + "' not declared");
                break;
            }
            case NodeKind::SendSignal:
                if (!is_event(n.event)) add("event-unknown", el, "event '" + n.event + "' not declared");
                if (!is_pool(n.pool)) add("pool-unknown", el, "pool '" + n.pool + "' not declared");
                break;
        }
    }

    void check_edge(const Activity& act, const Edge& e) {
        std::string el = act.name + "/" + e.source + "->" + e.target;
        auto src = m_.resolve_holder(act, e.source);
        auto dst = m_.resolve_holder(act, e.target);
        if (!src || src->is_dbres) {
            add("edge-endpoint-missing", el, "source does not resolve to a pin or parameter");
            return;
        }
        if (!dst || dst->is_dbres) {
            add("edge-endpoint-missing", el, "target does not resolve to a pin or parameter");
            return;
        }
        bool src_ok = src->is_apn ? src->pin->direction == PinDirection::In
                                  : src->pin->direction == PinDirection::Out;
        bool dst_ok = dst->is_apn ? dst->pin->direction == PinDirection::Out
                                  : dst->pin->direction == PinDirection::In;
        if (!src_ok || !dst_ok) {
            add("edge-direction", el,
                "edges run from output pins or input parameters to input pins or output parameters");
            return;
        }
        if (is_else_guard(e.guard)) {
            bool decision_out = src->node && src->node->kind == NodeKind::Decision;
            if (!decision_out)
                add("guard-else-context", el, "`else` is only meaningful on decision output edges");
        } else {
            std::vector<TokenValue> constants;
            collect_compare_constants(e.guard, constants);
            for (const auto& c : constants)
                if (c.type_name() != src->pin->value_type)
                    add("guard-type-mismatch", el,
                        "guard compares against " + c.type_name() + " but the source pin holds " +
                            src->pin->value_type);
        }
    }

    void check_activity(const Activity& act) {
        for (const auto& n : act.nodes) check_node(act, n);
        for (const auto& e : act.edges) check_edge(act, e);
        for (const auto& a : act.apns) {
            std::string el = act.name + "/" + a.id;
            check_pin(act, nullptr, a);
            if (a.exception && a.direction != PinDirection::Out)
                add("apn-exception-direction", el, "exception parameters must be outputs");
            if (a.exception && a.streaming)
                add("apn-streaming-exception", el, "streaming and exception are exclusive");
        }
        for (const auto& ps : act.parameter_sets)
            for (const auto& id : ps)
                if (!act.find_apn(id))
                    add("parameter-set-unknown-apn", act.name, "parameter set references '" + id + "'");
        for (const auto& h : act.handlers) {
            std::string el = act.name + "/" + h.protects + "~" + h.handler;
            const Node* prot = act.find_node(h.protects);
            const Node* handler = act.find_node(h.handler);
            if (!prot || prot->kind != NodeKind::Call || !handler) {
                add("handler-unknown", el, "handler bindings protect a call node with another node");
                continue;
            }
            if (handler->in_pins.size() != 1)
                add("handler-arity", el, "handler nodes need exactly one input pin");
        }
    }

    // Cycles of synchronous invocation (calls and decision behaviors) would
    // allow unbounded nesting of instances awaiting each other.
    void check_sync_recursion() {
        std::map<std::string, int> color;  // 0 unvisited, 1 on stack, 2 done
        for (const auto& act : m_.activities)
            if (color[act.name] == 0) dfs(act, color);
    }

    void dfs(const Activity& act, std::map<std::string, int>& color) {
        color[act.name] = 1;
        for (const auto& n : act.nodes) {
            std::string callee;
            if (n.kind == NodeKind::Call && n.synchronous)
                callee = n.behavior;
            else if (n.kind == NodeKind::Decision && n.d_behavior)
                callee = *n.d_behavior;
            if (callee.empty()) continue;
            const Activity* next = m_.find_activity(callee);
            if (!next) continue;
            if (color[next->name] == 1)
                add("sync-recursion", act.name + "/" + n.id,
                    "synchronous invocation cycle through '" + callee + "'");
            else if (color[next->name] == 0)
                dfs(*next, color);
        }
        color[act.name] = 2;
    }

    const Model& m_;
    ValidationReport report_;
};

}  // namespace

ValidationReport validate(const Model& m) { return Checker(m).run(); }

}  // namespace asos
