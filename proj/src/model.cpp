#include "asos/model.hpp"

#include <algorithm>

namespace asos {

const Node* Activity::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

const Apn* Activity::find_apn(const std::string& id) const {
    for (const auto& a : apns)
        if (a.id == id) return &a;
    return nullptr;
}

const Activity* Model::find_activity(const std::string& name) const {
    for (const auto& a : activities)
        if (a.name == name) return &a;
    return nullptr;
}

bool is_switch_node(NodeKind k) {
    return k == NodeKind::Fork || k == NodeKind::Join || k == NodeKind::Merge ||
           k == NodeKind::Decision;
}

std::string qualified_pin_id(const Node& n, const Pin& p) { return n.id + "." + p.id; }

std::string dbres_holder_id(const Node& decision) { return decision.id + ".dbres"; }

bool is_dbres_id(const std::string& holder) {
    const std::string suffix = ".dbres";
    return holder.size() > suffix.size() &&
           holder.compare(holder.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::optional<HolderInfo> Model::resolve_holder(const Activity& act, const std::string& id) const {
    auto dot = id.find('.');
    if (dot == std::string::npos) {
        const Apn* apn = act.find_apn(id);
        if (!apn) return std::nullopt;
        HolderInfo h;
        h.activity = &act;
        h.pin = apn;
        h.is_apn = true;
        return h;
    }
    const Node* node = act.find_node(id.substr(0, dot));
    if (!node) return std::nullopt;
    std::string pin_id = id.substr(dot + 1);
    HolderInfo h;
    h.activity = &act;
    h.node = node;
    if (pin_id == "dbres" && node->kind == NodeKind::Decision && node->d_behavior) {
        h.is_dbres = true;
        h.pin = nullptr;
        return h;
    }
    for (const auto& p : node->in_pins)
        if (p.id == pin_id) {
            h.pin = &p;
            return h;
        }
    for (const auto& p : node->out_pins)
        if (p.id == pin_id) {
            h.pin = &p;
            return h;
        }
    return std::nullopt;
}

std::vector<std::string> Model::holder_ids(const Activity& act) const {
    std::vector<std::string> ids;
    for (const auto& n : act.nodes) {
        for (const auto& p : n.in_pins) ids.push_back(qualified_pin_id(n, p));
        for (const auto& p : n.out_pins) ids.push_back(qualified_pin_id(n, p));
        if (n.kind == NodeKind::Decision && n.d_behavior) ids.push_back(dbres_holder_id(n));
    }
    for (const auto& a : act.apns) ids.push_back(a.id);
    return ids;
}

std::vector<int> Model::edges_into(const Activity& act, const std::string& holder) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(act.edges.size()); ++i)
        if (act.edges[i].target == holder) out.push_back(i);
    return out;
}

std::vector<int> Model::edges_out_of(const Activity& act, const std::string& holder) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(act.edges.size()); ++i)
        if (act.edges[i].source == holder) out.push_back(i);
    return out;
}

TokenSeq order_tokens(Ordering o, TokenSeq s) {
    switch (o) {
        case Ordering::Fifo:
            return s;
        case Ordering::Lifo:
            std::reverse(s.begin(), s.end());
            return s;
        case Ordering::Unordered:
            std::sort(s.begin(), s.end());
            return s;
    }
    return s;
}

TokenSeq insert_tokens(Ordering o, const TokenSeq& existing, const TokenSeq& arriving) {
    TokenSeq out;
    switch (o) {
        case Ordering::Fifo:
            out = existing;
            out.insert(out.end(), arriving.begin(), arriving.end());
            return out;
        case Ordering::Lifo:
            out = arriving;
            std::reverse(out.begin(), out.end());
            out.insert(out.end(), existing.begin(), existing.end());
            return out;
        case Ordering::Unordered:
            out = existing;
            out.insert(out.end(), arriving.begin(), arriving.end());
            return order_tokens(Ordering::Unordered, std::move(out));
    }
    return out;
}

namespace {

TokenSeq default_output(const Pin& p) {
    if (p.value_type == "ControlToken") return {TokenValue::control()};
    return {TokenValue::null()};
}

}  // namespace

std::map<std::string, TokenSeq> eval_behavior(const Model& m, const Node& action,
                                              const std::map<std::string, TokenSeq>& f_in) {
    std::map<std::string, TokenSeq> out;
    const Behavior* b = nullptr;
    if (!action.behavior.empty()) {
        auto it = m.behaviors.find(action.behavior);
        if (it != m.behaviors.end()) b = &it->second;
    }
    if (!b) {
        for (const auto& q : action.out_pins) out[q.id] = default_output(q);
        return out;
    }
    switch (b->kind) {
        case Behavior::Kind::Identity: {
            for (size_t i = 0; i < action.out_pins.size(); ++i) {
                const Pin& q = action.out_pins[i];
                if (i < action.in_pins.size()) {
                    auto it = f_in.find(action.in_pins[i].id);
                    out[q.id] = it == f_in.end() ? TokenSeq{} : it->second;
                } else {
                    out[q.id] = default_output(q);
                }
            }
            return out;
        }
        case Behavior::Kind::Const: {
            for (const auto& q : action.out_pins) out[q.id] = {b->const_value};
            return out;
        }
        case Behavior::Kind::Add: {
            std::int64_t sum = 0;
            for (const auto& [pin, seq] : f_in)
                for (const auto& v : seq)
                    if (v.kind() == TokenValue::Kind::Int) sum += v.int_value();
            for (const auto& q : action.out_pins) out[q.id] = {TokenValue::of_int(sum)};
            return out;
        }
        case Behavior::Kind::Negate: {
            TokenValue r = TokenValue::null();
            for (const auto& [pin, seq] : f_in) {
                if (seq.empty()) continue;
                const TokenValue& v = seq.front();
                if (v.kind() == TokenValue::Kind::Int) r = TokenValue::of_int(-v.int_value());
                if (v.kind() == TokenValue::Kind::Bool) r = TokenValue::of_bool(!v.bool_value());
                break;
            }
            for (const auto& q : action.out_pins) out[q.id] = {r};
            return out;
        }
        case Behavior::Kind::Table: {
            for (const auto& row : b->rows) {
                if (row.in == f_in) {
                    for (const auto& q : action.out_pins) {
                        auto it = row.out.find(q.id);
                        out[q.id] = it == row.out.end() ? TokenSeq{} : it->second;
                    }
                    return out;
                }
            }
            for (const auto& q : action.out_pins) out[q.id] = default_output(q);
            return out;
        }
    }
    return out;
}

}  // namespace asos
