#include "asos/parser.hpp"

#include <fstream>
#include <sstream>

namespace asos {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ParseError(msg); }

bool valid_id(const std::string& s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

std::string checked_id(const json& j, const std::string& what) {
    if (!j.is_string()) fail(what + " must be a string");
    std::string s = j.get<std::string>();
    if (!valid_id(s)) fail("invalid identifier '" + s + "' for " + what);
    return s;
}

int parse_limit(const json& j, const std::string& what) {
    if (j.is_string() && j.get<std::string>() == "*") return kUnbounded;
    if (j.is_number_integer()) {
        int v = j.get<int>();
        if (v < 0) fail(what + " must be non-negative or \"*\"");
        return v;
    }
    fail(what + " must be an integer or \"*\"");
}

Ordering parse_ordering(const json& j) {
    std::string s = j.get<std::string>();
    if (s == "fifo") return Ordering::Fifo;
    if (s == "lifo") return Ordering::Lifo;
    if (s == "unordered") return Ordering::Unordered;
    fail("unknown ordering '" + s + "'");
}

const char* ordering_name(Ordering o) {
    switch (o) {
        case Ordering::Fifo: return "fifo";
        case Ordering::Lifo: return "lifo";
        case Ordering::Unordered: return "unordered";
    }
    return "fifo";
}

NodeKind parse_kind(const std::string& s) {
    if (s == "action") return NodeKind::Action;
    if (s == "call") return NodeKind::Call;
    if (s == "fork") return NodeKind::Fork;
    if (s == "join") return NodeKind::Join;
    if (s == "merge") return NodeKind::Merge;
    if (s == "decision") return NodeKind::Decision;
    if (s == "initial") return NodeKind::Initial;
    if (s == "flow_final") return NodeKind::FlowFinal;
    if (s == "activity_final") return NodeKind::ActivityFinal;
    if (s == "accept_event") return NodeKind::AcceptEvent;
    if (s == "send_signal") return NodeKind::SendSignal;
    fail("unknown node kind '" + s + "'");
}

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Action: return "action";
        case NodeKind::Call: return "call";
        case NodeKind::Fork: return "fork";
        case NodeKind::Join: return "join";
        case NodeKind::Merge: return "merge";
        case NodeKind::Decision: return "decision";
        case NodeKind::Initial: return "initial";
        case NodeKind::FlowFinal: return "flow_final";
        case NodeKind::ActivityFinal: return "activity_final";
        case NodeKind::AcceptEvent: return "accept_event";
        case NodeKind::SendSignal: return "send_signal";
    }
    return "action";
}

void parse_pin_fields(const json& j, Pin& p, const std::string& ctx) {
    p.id = checked_id(j.at("id"), ctx + " pin id");
    if (j.contains("type")) p.value_type = j.at("type").get<std::string>();
    if (j.contains("upper_bound")) p.upper_bound = parse_limit(j.at("upper_bound"), "upper_bound");
    if (j.contains("upper")) p.upper = parse_limit(j.at("upper"), "upper");
    if (j.contains("lower")) {
        if (!j.at("lower").is_number_integer() || j.at("lower").get<int>() < 0)
            fail("lower must be a non-negative integer");
        p.lower = j.at("lower").get<int>();
    }
    if (j.contains("ordering")) p.ordering = parse_ordering(j.at("ordering"));
    if (j.contains("synthetic")) p.synthetic = j.at("synthetic").get<bool>();
}

Pin parse_pin(const json& j, PinDirection dir, const std::string& ctx) {
    Pin p;
    p.direction = dir;
    parse_pin_fields(j, p, ctx);
    return p;
}

Apn parse_apn(const json& j) {
    Apn a;
    parse_pin_fields(j, a, "parameter");
    std::string dir = j.at("direction").get<std::string>();
    if (dir == "in")
        a.direction = PinDirection::In;
    else if (dir == "out")
        a.direction = PinDirection::Out;
    else
        fail("parameter direction must be \"in\" or \"out\"");
    if (j.contains("streaming")) a.streaming = j.at("streaming").get<bool>();
    if (j.contains("exception")) a.exception = j.at("exception").get<bool>();
    return a;
}

Node parse_node(const json& j) {
    Node n;
    n.id = checked_id(j.at("id"), "node id");
    n.kind = parse_kind(j.at("kind").get<std::string>());
    std::string ctx = "node " + n.id;
    if (j.contains("in_pins"))
        for (const auto& pj : j.at("in_pins"))
            n.in_pins.push_back(parse_pin(pj, PinDirection::In, ctx));
    if (j.contains("out_pins"))
        for (const auto& pj : j.at("out_pins"))
            n.out_pins.push_back(parse_pin(pj, PinDirection::Out, ctx));
    if (n.kind == NodeKind::Call && (!n.in_pins.empty() || !n.out_pins.empty()))
        fail(ctx + ": call nodes derive their pins from the callee and must not declare any");
    if (j.contains("behavior")) n.behavior = j.at("behavior").get<std::string>();
    if (j.contains("synchronous")) n.synchronous = j.at("synchronous").get<bool>();
    if (j.contains("join_spec")) {
        n.join_spec_text = j.at("join_spec").get<std::string>();
        try {
            n.join_spec = parse_join_spec(n.join_spec_text);
        } catch (const GuardParseError& e) {
            fail(ctx + ": bad join_spec: " + e.what());
        }
    }
    if (j.contains("d_flow")) n.d_flow = j.at("d_flow").get<std::string>();
    if (j.contains("d_behavior")) n.d_behavior = j.at("d_behavior").get<std::string>();
    if (j.contains("event")) n.event = j.at("event").get<std::string>();
    if (j.contains("result")) n.result = j.at("result").get<std::string>();
    if (j.contains("pool")) n.pool = j.at("pool").get<std::string>();
    return n;
}

Edge parse_edge(const json& j) {
    Edge e;
    e.source = j.at("source").get<std::string>();
    e.target = j.at("target").get<std::string>();
    if (j.contains("guard")) e.guard_text = j.at("guard").get<std::string>();
    try {
        e.guard = parse_guard(e.guard_text.empty() ? "true" : e.guard_text);
    } catch (const GuardParseError& ex) {
        fail("edge " + e.source + " -> " + e.target + ": bad guard: " + ex.what());
    }
    if (j.contains("weight")) e.weight = parse_limit(j.at("weight"), "weight");
    if (e.weight == 0) fail("edge weight must be positive or \"*\"");
    return e;
}

Behavior parse_behavior(const json& j, const std::string& name) {
    Behavior b;
    if (j.contains("builtin")) {
        std::string s = j.at("builtin").get<std::string>();
        if (s == "identity")
            b.kind = Behavior::Kind::Identity;
        else if (s == "const") {
            b.kind = Behavior::Kind::Const;
            b.const_value = token_from_json(j.at("value"));
        } else if (s == "add")
            b.kind = Behavior::Kind::Add;
        else if (s == "negate")
            b.kind = Behavior::Kind::Negate;
        else
            fail("behavior " + name + ": unknown builtin '" + s + "'");
        return b;
    }
    if (j.contains("table")) {
        b.kind = Behavior::Kind::Table;
        for (const auto& rj : j.at("table")) {
            Behavior::Row row;
            for (const auto& [pin, seq] : rj.at("in").items())
                for (const auto& tj : seq) row.in[pin].push_back(token_from_json(tj));
            for (const auto& [pin, seq] : rj.at("out").items())
                for (const auto& tj : seq) row.out[pin].push_back(token_from_json(tj));
            b.rows.push_back(std::move(row));
        }
        return b;
    }
    fail("behavior " + name + ": expected \"builtin\" or \"table\"");
}

Pin synthetic_control_pin(const std::string& id, PinDirection dir) {
    Pin p;
    p.id = id;
    p.direction = dir;
    p.value_type = "ControlToken";
    p.lower = 1;
    p.upper = 1;
    p.upper_bound = kUnbounded;
    p.synthetic = true;
    return p;
}

// Rewrites bare node-name endpoints into synthetic control pins.
void desugar_control_edges(Activity& act) {
    auto mutable_node = [&act](const std::string& id) -> Node* {
        for (auto& n : act.nodes)
            if (n.id == id) return &n;
        return nullptr;
    };
    std::map<std::string, int> out_counter, in_counter;
    for (auto& e : act.edges) {
        if (e.source.find('.') == std::string::npos && !act.find_apn(e.source)) {
            Node* n = mutable_node(e.source);
            if (n) {
                bool per_edge = n->kind == NodeKind::Fork || n->kind == NodeKind::Decision;
                std::string pin_id = "ctl_out";
                if (per_edge) pin_id += std::to_string(++out_counter[n->id]);
                bool exists = false;
                for (const auto& p : n->out_pins) exists |= p.id == pin_id;
                if (!exists)
                    n->out_pins.push_back(synthetic_control_pin(pin_id, PinDirection::Out));
                e.source = n->id + "." + pin_id;
            }
        }
        if (e.target.find('.') == std::string::npos && !act.find_apn(e.target)) {
            Node* n = mutable_node(e.target);
            if (n) {
                bool per_edge = n->kind == NodeKind::Join || n->kind == NodeKind::Merge;
                std::string pin_id = "ctl_in";
                if (per_edge) pin_id += std::to_string(++in_counter[n->id]);
                bool exists = false;
                for (const auto& p : n->in_pins) exists |= p.id == pin_id;
                if (!exists) n->in_pins.push_back(synthetic_control_pin(pin_id, PinDirection::In));
                e.target = n->id + "." + pin_id;
            }
        }
    }
}

// Call-node interface pins mirror the callee's parameter nodes.
void derive_call_pins(Model& m) {
    for (auto& act : m.activities) {
        for (auto& n : act.nodes) {
            if (n.kind != NodeKind::Call) continue;
            const Activity* callee = m.find_activity(n.behavior);
            if (!callee) continue;  // reported by the validator
            for (const Apn& apn : callee->apns) {
                Pin p = apn;  // slices the APN flags away, keeping pin fields
                p.synthetic = true;
                if (apn.direction == PinDirection::In)
                    n.in_pins.push_back(p);
                else
                    n.out_pins.push_back(p);
            }
        }
    }
}

GuardPtr default_join_spec(const Node& join) {
    GuardPtr acc;
    for (const auto& p : join.in_pins) {
        auto ref = std::make_shared<GuardExpr>();
        ref->kind = GuardExpr::Kind::PinRef;
        ref->pin = p.id;
        if (!acc) {
            acc = ref;
        } else {
            auto node = std::make_shared<GuardExpr>();
            node->kind = GuardExpr::Kind::And;
            node->lhs = acc;
            node->rhs = ref;
            acc = node;
        }
    }
    if (!acc) {
        auto t = std::make_shared<GuardExpr>();
        t->kind = GuardExpr::Kind::True;
        acc = t;
    }
    return acc;
}

// Every APN must belong to a parameter set: with none declared, one set
// holding all APNs is synthesized; an uncovered APN gets a singleton set.
void complete_parameter_sets(Activity& act) {
    if (act.parameter_sets.empty()) {
        std::vector<std::string> all;
        for (const auto& a : act.apns) all.push_back(a.id);
        act.parameter_sets.push_back(std::move(all));
        return;
    }
    for (const auto& a : act.apns) {
        bool covered = false;
        for (const auto& ps : act.parameter_sets)
            for (const auto& id : ps) covered |= id == a.id;
        if (!covered) act.parameter_sets.push_back({a.id});
    }
}

}  // namespace

TokenValue token_from_json(const json& j) {
    if (j.is_number_integer()) return TokenValue::of_int(j.get<std::int64_t>());
    if (j.is_boolean()) return TokenValue::of_bool(j.get<bool>());
    if (j.is_string()) return TokenValue::of_string(j.get<std::string>());
    if (j.is_null()) return TokenValue::null();
    if (j.is_object()) {
        if (j.contains("token") && j.at("token") == "control") return TokenValue::control();
        if (j.contains("event")) {
            std::vector<TokenValue> args;
            if (j.contains("args"))
                for (const auto& aj : j.at("args")) args.push_back(token_from_json(aj));
            return TokenValue::event(j.at("event").get<std::string>(), std::move(args));
        }
    }
    fail("unrecognized token literal: " + j.dump());
}

json token_to_json(const TokenValue& v) {
    switch (v.kind()) {
        case TokenValue::Kind::Control: return json{{"token", "control"}};
        case TokenValue::Kind::Null: return nullptr;
        case TokenValue::Kind::Int: return v.int_value();
        case TokenValue::Kind::Bool: return v.bool_value();
        case TokenValue::Kind::Str: return v.str_value();
        case TokenValue::Kind::Event: {
            json args = json::array();
            for (const auto& a : v.event_args()) args.push_back(token_to_json(a));
            return json{{"event", v.event_name()}, {"args", args}};
        }
    }
    return nullptr;
}

Model parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("malformed document: ") + e.what());
    }
    if (!doc.is_object()) fail("model document must be an object");

    Model m;
    if (doc.contains("events"))
        for (const auto& e : doc.at("events")) m.events.push_back(checked_id(e, "event name"));
    if (doc.contains("datatypes"))
        for (const auto& d : doc.at("datatypes")) m.datatypes.push_back(d.get<std::string>());
    if (doc.contains("pools")) {
        m.pools.clear();
        for (const auto& p : doc.at("pools")) m.pools.push_back(checked_id(p, "pool name"));
    }
    if (!doc.contains("root")) fail("model requires a \"root\" activity name");
    m.root = doc.at("root").get<std::string>();
    if (doc.contains("behaviors"))
        for (const auto& [name, bj] : doc.at("behaviors").items())
            m.behaviors[name] = parse_behavior(bj, name);

    if (!doc.contains("activities") || !doc.at("activities").is_array())
        fail("model requires an \"activities\" array");
    for (const auto& aj : doc.at("activities")) {
        Activity act;
        act.name = checked_id(aj.at("name"), "activity name");
        if (aj.contains("nodes"))
            for (const auto& nj : aj.at("nodes")) {
                Node n = parse_node(nj);
                if (act.find_node(n.id)) fail("duplicate node id '" + n.id + "' in " + act.name);
                act.nodes.push_back(std::move(n));
            }
        if (aj.contains("apns"))
            for (const auto& pj : aj.at("apns")) {
                Apn a = parse_apn(pj);
                if (act.find_apn(a.id) || act.find_node(a.id))
                    fail("duplicate id '" + a.id + "' in " + act.name);
                act.apns.push_back(std::move(a));
            }
        if (aj.contains("edges"))
            for (const auto& ej : aj.at("edges")) act.edges.push_back(parse_edge(ej));
        if (aj.contains("parameter_sets"))
            for (const auto& sj : aj.at("parameter_sets")) {
                std::vector<std::string> set;
                for (const auto& id : sj) set.push_back(id.get<std::string>());
                act.parameter_sets.push_back(std::move(set));
            }
        if (aj.contains("handlers"))
            for (const auto& hj : aj.at("handlers")) {
                HandlerBinding h;
                h.protects = hj.at("protects").get<std::string>();
                h.handler = hj.at("handler").get<std::string>();
                h.exception_type = hj.at("exception_type").get<std::string>();
                act.handlers.push_back(std::move(h));
            }
        if (m.find_activity(act.name)) fail("duplicate activity '" + act.name + "'");
        m.activities.push_back(std::move(act));
    }

    derive_call_pins(m);
    for (auto& act : m.activities) {
        desugar_control_edges(act);
        complete_parameter_sets(act);
        for (auto& n : act.nodes)
            if (n.kind == NodeKind::Join && !n.join_spec) n.join_spec = default_join_spec(n);
    }
    return m;
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

std::map<std::string, int> parse_timing_table(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(std::string("malformed timing table: ") + e.what());
    }
    if (!doc.is_object()) fail("timing table must be an object of node id -> units");
    std::map<std::string, int> t;
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_number_integer() || v.get<int>() < 0)
            fail("timing for '" + k + "' must be a non-negative integer");
        t[k] = v.get<int>();
    }
    return t;
}

std::map<std::string, int> load_timing_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open timing file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_timing_table(ss.str());
}

namespace {

ordered_json pin_to_json(const Pin& p) {
    ordered_json j;
    j["id"] = p.id;
    if (p.value_type != "ControlToken") j["type"] = p.value_type;
    if (p.lower != 1) j["lower"] = p.lower;
    if (p.upper != 1) j["upper"] = p.upper == kUnbounded ? ordered_json("*") : ordered_json(p.upper);
    if (p.upper_bound != kUnbounded) j["upper_bound"] = p.upper_bound;
    if (p.ordering != Ordering::Fifo) j["ordering"] = ordering_name(p.ordering);
    if (p.synthetic) j["synthetic"] = true;
    return j;
}

ordered_json apn_to_json(const Apn& a) {
    ordered_json j = pin_to_json(a);
    j["direction"] = a.direction == PinDirection::In ? "in" : "out";
    if (a.streaming) j["streaming"] = true;
    if (a.exception) j["exception"] = true;
    return j;
}

ordered_json behavior_to_json(const Behavior& b) {
    ordered_json j;
    switch (b.kind) {
        case Behavior::Kind::Identity: j["builtin"] = "identity"; break;
        case Behavior::Kind::Const:
            j["builtin"] = "const";
            j["value"] = token_to_json(b.const_value);
            break;
        case Behavior::Kind::Add: j["builtin"] = "add"; break;
        case Behavior::Kind::Negate: j["builtin"] = "negate"; break;
        case Behavior::Kind::Table: {
            ordered_json rows = ordered_json::array();
            auto seq_to_json = [](const TokenSeq& seq) {
                ordered_json s = ordered_json::array();
                for (const auto& t : seq) s.push_back(ordered_json(token_to_json(t)));
                return s;
            };
            for (const auto& row : b.rows) {
                ordered_json rj;
                rj["in"] = ordered_json::object();
                for (const auto& [pin, seq] : row.in) rj["in"][pin] = seq_to_json(seq);
                rj["out"] = ordered_json::object();
                for (const auto& [pin, seq] : row.out) rj["out"][pin] = seq_to_json(seq);
                rows.push_back(rj);
            }
            j["table"] = rows;
            break;
        }
    }
    return j;
}

}  // namespace

std::string emit_model(const Model& m) {
    ordered_json doc;
    doc["events"] = m.events;
    doc["datatypes"] = m.datatypes;
    doc["pools"] = m.pools;
    doc["root"] = m.root;
    doc["behaviors"] = ordered_json::object();
    for (const auto& [name, b] : m.behaviors) doc["behaviors"][name] = behavior_to_json(b);
    doc["activities"] = ordered_json::array();
    for (const auto& act : m.activities) {
        ordered_json aj;
        aj["name"] = act.name;
        aj["nodes"] = ordered_json::array();
        for (const auto& n : act.nodes) {
            ordered_json nj;
            nj["id"] = n.id;
            nj["kind"] = kind_name(n.kind);
            if (n.kind != NodeKind::Call) {
                if (!n.in_pins.empty()) {
                    nj["in_pins"] = ordered_json::array();
                    for (const auto& p : n.in_pins) nj["in_pins"].push_back(pin_to_json(p));
                }
                if (!n.out_pins.empty()) {
                    nj["out_pins"] = ordered_json::array();
                    for (const auto& p : n.out_pins) nj["out_pins"].push_back(pin_to_json(p));
                }
            }
            if (!n.behavior.empty()) nj["behavior"] = n.behavior;
            if (!n.synchronous) nj["synchronous"] = false;
            if (!n.join_spec_text.empty()) nj["join_spec"] = n.join_spec_text;
            if (n.d_flow) nj["d_flow"] = *n.d_flow;
            if (n.d_behavior) nj["d_behavior"] = *n.d_behavior;
            if (!n.event.empty()) nj["event"] = n.event;
            if (!n.result.empty()) nj["result"] = n.result;
            if (n.pool != "main") nj["pool"] = n.pool;
            aj["nodes"].push_back(nj);
        }
        aj["edges"] = ordered_json::array();
        for (const auto& e : act.edges) {
            ordered_json ej;
            ej["source"] = e.source;
            ej["target"] = e.target;
            if (!e.guard_text.empty() && e.guard_text != "true") ej["guard"] = e.guard_text;
            if (e.weight != 1) ej["weight"] = e.weight == kUnbounded ? ordered_json("*") : ordered_json(e.weight);
            aj["edges"].push_back(ej);
        }
        aj["apns"] = ordered_json::array();
        for (const auto& a : act.apns) aj["apns"].push_back(apn_to_json(a));
        aj["parameter_sets"] = act.parameter_sets;
        aj["handlers"] = ordered_json::array();
        for (const auto& h : act.handlers) {
            ordered_json hj;
            hj["protects"] = h.protects;
            hj["handler"] = h.handler;
            hj["exception_type"] = h.exception_type;
            aj["handlers"].push_back(hj);
        }
        doc["activities"].push_back(aj);
    }
    return doc.dump(2) + "\n";
}

bool operator==(const Model& a, const Model& b) { return emit_model(a) == emit_model(b); }

}  // namespace asos
