#include "asos/state.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <sstream>

namespace asos {

namespace {

bool is_default(const NodeStatus& st) {
    if (st.kind == NodeStatus::Kind::Idle) return true;
    if (st.kind == NodeStatus::Kind::IdleOrdered && st.p_order.empty()) return true;
    return false;
}

bool is_default(const ActivityStatus& st) { return st.kind == ActivityStatus::Kind::Idle; }

void serialize_status(std::ostream& os, const NodeStatus& st) {
    switch (st.kind) {
        case NodeStatus::Kind::Idle:
            os << "idle";
            return;
        case NodeStatus::Kind::IdleOrdered: {
            os << "ord[";
            for (size_t i = 0; i < st.p_order.size(); ++i)
                os << (i ? "," : "") << st.p_order[i];
            os << "]";
            return;
        }
        case NodeStatus::Kind::Executing:
        case NodeStatus::Kind::Ready: {
            os << (st.kind == NodeStatus::Kind::Executing ? "exec{" : "ready{");
            bool first = true;
            for (const auto& [pin, seq] : st.f_in) {
                if (!first) os << ";";
                first = false;
                os << pin << "=" << to_string(seq);
            }
            if (!st.p_order.empty()) {
                os << (first ? "" : ";") << "ord[";
                for (size_t i = 0; i < st.p_order.size(); ++i)
                    os << (i ? "," : "") << st.p_order[i];
                os << "]";
            }
            os << "}";
            return;
        }
    }
}

void serialize_status(std::ostream& os, const ActivityStatus& st) {
    switch (st.kind) {
        case ActivityStatus::Kind::Idle:
            os << "idle";
            return;
        case ActivityStatus::Kind::Executing: {
            os << "exec{ps=[";
            bool first = true;
            for (const auto& p : st.p_set) {
                if (!first) os << ",";
                first = false;
                os << p;
            }
            os << "];pn=[";
            first = true;
            for (const auto& p : st.pending) {
                if (!first) os << ",";
                first = false;
                os << p;
            }
            os << "]}";
            return;
        }
        case ActivityStatus::Kind::Exception:
            os << "exc" << to_string(st.exception);
            return;
    }
}

}  // namespace

bool ExecState::operator<(const ExecState& o) const {
    return canonical_serialize(*this) < canonical_serialize(o);
}

NodeStatus node_status(const ExecState& s, const std::string& key) {
    auto it = s.nodes.find(key);
    return it == s.nodes.end() ? NodeStatus{} : it->second;
}

ActivityStatus act_status(const ExecState& s, const std::string& path) {
    auto it = s.acts.find(path);
    return it == s.acts.end() ? ActivityStatus{} : it->second;
}

const TokenSeq& holder_content(const ExecState& s, const std::string& key) {
    static const TokenSeq empty;
    auto it = s.holders.find(key);
    return it == s.holders.end() ? empty : it->second;
}

std::optional<int> clock_value(const ExecState& s, const std::string& key) {
    auto it = s.clocks.find(key);
    if (it == s.clocks.end()) return std::nullopt;
    return it->second;
}

void set_node_status(ExecState& s, const std::string& key, NodeStatus st) {
    if (is_default(st))
        s.nodes.erase(key);
    else
        s.nodes[key] = std::move(st);
}

void set_act_status(ExecState& s, const std::string& path, ActivityStatus st) {
    if (is_default(st))
        s.acts.erase(path);
    else
        s.acts[path] = std::move(st);
}

void set_holder(ExecState& s, const std::string& key, TokenSeq v) {
    if (v.empty())
        s.holders.erase(key);
    else
        s.holders[key] = std::move(v);
}

void set_clock(ExecState& s, const std::string& key, std::optional<int> v) {
    if (!v)
        s.clocks.erase(key);
    else
        s.clocks[key] = *v;
}

void add_to_pool(ExecState& s, const std::string& pool, const TokenValue& v) {
    auto& contents = s.pools[pool];
    contents.insert(std::upper_bound(contents.begin(), contents.end(), v), v);
}

bool remove_from_pool(ExecState& s, const std::string& pool, const TokenValue& v) {
    auto it = s.pools.find(pool);
    if (it == s.pools.end()) return false;
    auto pos = std::find(it->second.begin(), it->second.end(), v);
    if (pos == it->second.end()) return false;
    it->second.erase(pos);
    if (it->second.empty()) s.pools.erase(it);
    return true;
}

std::string child_path(const std::string& path, const std::string& call_node) {
    return path + call_node + "/";
}

std::string dbehavior_path(const std::string& path, const std::string& decision_node) {
    return path + decision_node + "#db/";
}

std::optional<CallerRef> caller_of(const std::string& path) {
    if (path.empty()) return std::nullopt;
    std::string trimmed = path.substr(0, path.size() - 1);  // drop trailing '/'
    auto pos = trimmed.rfind('/');
    CallerRef ref;
    ref.parent = pos == std::string::npos ? "" : trimmed.substr(0, pos + 1);
    ref.node = pos == std::string::npos ? trimmed : trimmed.substr(pos + 1);
    const std::string db = "#db";
    if (ref.node.size() > db.size() &&
        ref.node.compare(ref.node.size() - db.size(), db.size(), db) == 0) {
        ref.dbehavior = true;
        ref.node = ref.node.substr(0, ref.node.size() - db.size());
    }
    return ref;
}

const Activity* activity_of_instance(const Model& m, const std::string& path) {
    const Activity* act = m.find_activity(m.root);
    size_t start = 0;
    while (act && start < path.size()) {
        auto slash = path.find('/', start);
        if (slash == std::string::npos) return nullptr;  // malformed
        std::string seg = path.substr(start, slash - start);
        start = slash + 1;
        const std::string db = "#db";
        bool is_db = seg.size() > db.size() &&
                     seg.compare(seg.size() - db.size(), db.size(), db) == 0;
        const Node* n = act->find_node(is_db ? seg.substr(0, seg.size() - db.size()) : seg);
        if (!n) return nullptr;
        if (is_db) {
            if (n->kind != NodeKind::Decision || !n->d_behavior) return nullptr;
            act = m.find_activity(*n->d_behavior);
        } else {
            if (n->kind != NodeKind::Call) return nullptr;
            act = m.find_activity(n->behavior);
        }
    }
    return act;
}

std::pair<std::string, std::string> split_key(const std::string& key) {
    auto pos = key.rfind('/');
    if (pos == std::string::npos) return {"", key};
    return {key.substr(0, pos + 1), key.substr(pos + 1)};
}

std::vector<std::string> live_instances(const Model& m, const ExecState& s) {
    std::set<std::string> paths;
    paths.insert("");
    for (const auto& [k, v] : s.nodes) paths.insert(split_key(k).first);
    for (const auto& [k, v] : s.holders) paths.insert(split_key(k).first);
    for (const auto& [k, v] : s.clocks) paths.insert(split_key(k).first);
    for (const auto& [k, v] : s.acts) paths.insert(k);
    std::vector<std::string> out(paths.begin(), paths.end());
    (void)m;
    return out;
}

ExecState initial_state(const Model& m) {
    ExecState s;
    const Activity* root = m.find_activity(m.root);
    if (!root) return s;
    ActivityStatus st;
    st.kind = ActivityStatus::Kind::Executing;
    for (const auto& apn : root->apns) {
        st.p_set.insert(apn.id);
        if (apn.direction == PinDirection::Out && !apn.streaming && !apn.exception)
            st.pending.insert(apn.id);
    }
    set_act_status(s, "", st);
    for (const auto& n : root->nodes) {
        bool starts_executing = n.kind == NodeKind::Initial ||
                                (n.kind == NodeKind::AcceptEvent && n.in_pins.empty());
        if (starts_executing) {
            NodeStatus ns;
            ns.kind = NodeStatus::Kind::Executing;
            set_node_status(s, n.id, ns);
        }
    }
    return s;
}

std::string canonical_serialize(const ExecState& s) {
    std::ostringstream os;
    for (const auto& [k, v] : s.nodes) {
        os << "n|" << k << "=";
        serialize_status(os, v);
        os << "\n";
    }
    for (const auto& [k, v] : s.acts) {
        os << "a|" << k << "=";
        serialize_status(os, v);
        os << "\n";
    }
    for (const auto& [k, v] : s.holders) os << "h|" << k << "=" << to_string(v) << "\n";
    for (const auto& [k, v] : s.pools) os << "p|" << k << "=" << to_string(v) << "\n";
    for (const auto& [k, v] : s.clocks) os << "c|" << k << "=" << v << "\n";
    return os.str();
}

std::string fingerprint(const ExecState& s) {
    std::string data = canonical_serialize(s);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string macro_view(const Model& m, const ExecState& s) {
    ExecState view = s;
    for (auto it = view.holders.begin(); it != view.holders.end();) {
        auto [path, local] = split_key(it->first);
        const Activity* act = activity_of_instance(m, path);
        bool drop = false;
        if (act) {
            if (auto info = m.resolve_holder(*act, local)) {
                drop = info->is_dbres || (info->node && is_switch_node(info->node->kind));
            }
        }
        it = drop ? view.holders.erase(it) : std::next(it);
    }
    return canonical_serialize(view);
}

std::vector<std::string> propositions(const Model& m, const ExecState& s) {
    std::vector<std::string> props;
    for (const auto& path : live_instances(m, s)) {
        const Activity* act = activity_of_instance(m, path);
        if (!act) continue;
        for (const auto& n : act->nodes) {
            NodeStatus st = node_status(s, path + n.id);
            bool busy = st.kind == NodeStatus::Kind::Executing ||
                        st.kind == NodeStatus::Kind::Ready;
            props.push_back((busy ? "executing(" : "idle(") + path + n.id + ")");
        }
        ActivityStatus ast = act_status(s, path);
        if (ast.kind == ActivityStatus::Kind::Exception)
            props.push_back("exception(" + path + act->name + ")");
    }
    if (act_status(s, "").kind == ActivityStatus::Kind::Idle) props.push_back("terminated");
    std::sort(props.begin(), props.end());
    props.erase(std::unique(props.begin(), props.end()), props.end());
    return props;
}

}  // namespace asos
