#include "asos/semantics.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace asos {

namespace {

constexpr int kInf = std::numeric_limits<int>::max() / 2;

int limit_or(int v, int fallback) { return v == kUnbounded ? fallback : v; }

// Else-guards pass every token here: routing rules resolve `else` against
// the sibling guards before tokens ever reach an else-edge, so a transfer
// across one only re-moves already vetted tokens.
bool token_passes(const GuardPtr& g, const TokenValue& v) {
    if (is_else_guard(g)) return true;
    return eval_guard(g, v);
}

// Collapses an all-control sequence to a single control token; data
// sequences pass through unchanged.
TokenSeq combine(const TokenSeq& v) {
    if (v.empty()) return v;
    for (const auto& t : v)
        if (!t.is_control()) return v;
    return {TokenValue::control()};
}

// Owning node name of a holder id, for transfer labels.
std::string holder_node_name(const std::string& holder) {
    auto dot = holder.find('.');
    return dot == std::string::npos ? holder : holder.substr(0, dot);
}

// One way a rule acquires tokens for an input pin: across an edge
// (draining the edge's source holder) or from the pin's own holder.
struct Draw {
    std::string source_key;
    TokenSeq tokens;
    int edge_idx = -1;  // -1: drawn from the pin's own holder
};

struct PinDraw {
    const Pin* pin = nullptr;
    Draw draw;
};

using Assignment = std::vector<PinDraw>;

}  // namespace

std::vector<TransferChoice> transfer_choices(const Model& m, const ExecState& s,
                                             const std::string& scope, const Activity& act,
                                             const Edge& e) {
    std::vector<TransferChoice> out;
    auto src = m.resolve_holder(act, e.source);
    auto dst = m.resolve_holder(act, e.target);
    if (!src || !dst || !src->pin || !dst->pin) return out;

    // Tokens on a decision's output pins were put there by its evaluation
    // step, which resolved this edge's guard already (possibly against a
    // separate guard token). Re-evaluating against the routed token itself
    // would wrongly strand it, so such transfers skip the guard.
    bool vetted = src->node && src->node->kind == NodeKind::Decision && !src->is_dbres;

    const TokenSeq& avail = holder_content(s, scope + e.source);
    TokenSeq passing;
    for (const auto& v : avail)
        if (vetted || token_passes(e.guard, v)) passing.push_back(v);

    const Pin& tp = *dst->pin;
    int occupied = static_cast<int>(holder_content(s, scope + e.target).size());
    int remaining = tp.upper_bound == kUnbounded ? kInf : std::max(0, tp.upper_bound - occupied);
    int n_pass = static_cast<int>(passing.size());

    if (e.weight == kUnbounded) {
        // "*": every guard-passing token moves, or none can.
        int k = n_pass;
        if (k >= 1 && k >= tp.lower && k <= limit_or(tp.upper, kInf) && k <= remaining)
            out.push_back({k, passing});
        return out;
    }

    if (n_pass < tp.lower || n_pass < e.weight) return out;
    int max_k = std::min({n_pass, limit_or(tp.upper, kInf), remaining});
    int min_k = std::max({1, tp.lower, e.weight});
    if (max_k < min_k) return out;

    bool switch_target = dst->node && is_switch_node(dst->node->kind);
    int lo = switch_target ? min_k : max_k;
    for (int k = lo; k <= max_k; ++k)
        out.push_back({k, TokenSeq(passing.begin(), passing.begin() + k)});
    return out;
}

namespace {

class Engine {
  public:
    Engine(const Model& m, const ExecState& s, const SemanticsProfile& p)
        : m_(m), s_(s), p_(p), src_fp_(fingerprint(s)) {
        instances_ = live_instances(m_, s_);
    }

    std::vector<RuleInstance> run() {
        for (const auto& sc : instances_) {
            const Activity* act = activity_of_instance(m_, sc);
            if (!act) continue;
            scopes_.push_back({sc, act});
        }
        rule_a1();
        rule_a2();
        rule_i1();
        rule_f1();
        rule_f2();
        rule_j1();
        rule_j2();
        rule_j3();
        rule_j4();
        rule_m1();
        rule_d1();
        rule_d2();
        rule_d3();
        rule_d4();
        rule_d5();
        rule_d6();
        rule_d7();
        rule_ff1();
        rule_ff2();
        rule_af();
        rule_ae1();
        rule_ae23();
        rule_s1();
        rule_s2();
        rule_c12();
        rule_c3();
        rule_c4();
        rule_v1();
        rule_v2();
        rule_v3();
        rule_x1();
        rule_x2();
        rule_x3();
        rule_x4();
        rule_x5();
        if (p_.exec_time) {
            rule_exe_time();
            rule_tick();
        }
        if (p_.edge_transfer_rule) rule_t1();
        return std::move(out_);
    }

  private:
    struct Scope {
        std::string path;
        const Activity* act;
    };

    // ---- shared helpers -------------------------------------------------

    bool executing_here(const std::string& sc) const {
        return act_status(s_, sc).kind == ActivityStatus::Kind::Executing;
    }

    // Single-core restriction: an invocation fires only while no node of
    // any instance is executing (a ready node no longer occupies the core).
    bool core_free() const {
        if (!p_.single_core) return true;
        for (const auto& [k, st] : s_.nodes)
            if (st.kind == NodeStatus::Kind::Executing) return false;
        return true;
    }

    void emit(const char* rule, RuleKind kind, const Scope& scope, const std::string& node,
              std::string label, ExecState next, std::string detail = "") {
        RuleInstance ri;
        ri.rule = rule;
        ri.kind = kind;
        ri.scope = scope.path;
        ri.node = node;
        ri.label = std::move(label);
        ri.detail = std::move(detail);
        ri.source = src_fp_;
        ri.next = std::move(next);
        out_.push_back(std::move(ri));
    }

    std::string ilabel(const Scope& sc, const Node& n) const { return "i(" + sc.path + n.id + ")"; }
    std::string tlabel(const Scope& sc, const Node& n) const { return "t(" + sc.path + n.id + ")"; }
    std::string rlabel(const Scope& sc, const std::string& src_holder,
                       const std::string& dst_holder) const {
        return "r(" + sc.path + holder_node_name(src_holder) + "-" + sc.path +
               holder_node_name(dst_holder) + ")";
    }

    // Candidate draws for one input pin. Edge-based consumption enumerates
    // every incoming edge and transfer choice; a pin without incoming edges
    // (or pin-based consumption) draws from its own holder.
    std::vector<Draw> pin_candidates(const Scope& sc, const Node& n, const Pin& pin,
                                     bool from_pins) const {
        std::vector<Draw> cands;
        std::string holder = qualified_pin_id(n, pin);
        auto edges = m_.edges_into(*sc.act, holder);
        if (!from_pins && !edges.empty()) {
            for (int ei : edges) {
                for (const auto& c :
                     transfer_choices(m_, s_, sc.path, *sc.act, sc.act->edges[ei])) {
                    cands.push_back({sc.path + sc.act->edges[ei].source, c.tokens, ei});
                }
            }
            return cands;
        }
        // Own-holder draw: the first min(|avail|, upper) tokens, provided
        // at least max(lower, 1) are present.
        const TokenSeq& avail = holder_content(s_, sc.path + holder);
        int need = std::max(pin.lower, 1);
        if (static_cast<int>(avail.size()) < need) return cands;
        int k = std::min(static_cast<int>(avail.size()), limit_or(pin.upper, kInf));
        if (k < need) return cands;
        cands.push_back({sc.path + holder, TokenSeq(avail.begin(), avail.begin() + k), -1});
        return cands;
    }

    // Enumerates injective draw assignments: one draw per pin, no two draws
    // draining the same source holder. `mandatory[i]` pins must draw;
    // others are skipped exactly when they have no candidates.
    std::vector<Assignment> assignments(const Scope& sc, const Node& n,
                                        const std::vector<const Pin*>& pins,
                                        const std::vector<bool>& mandatory,
                                        bool from_pins) const {
        std::vector<std::vector<Draw>> cands(pins.size());
        for (size_t i = 0; i < pins.size(); ++i) {
            cands[i] = pin_candidates(sc, n, *pins[i], from_pins);
            if (mandatory[i] && cands[i].empty()) return {};
        }
        std::vector<Assignment> result;
        Assignment cur;
        std::set<std::string> used;
        enumerate(pins, cands, 0, cur, used, result);
        return result;
    }

    void enumerate(const std::vector<const Pin*>& pins, const std::vector<std::vector<Draw>>& cands,
                   size_t i, Assignment& cur, std::set<std::string>& used,
                   std::vector<Assignment>& result) const {
        if (i == pins.size()) {
            result.push_back(cur);
            return;
        }
        if (cands[i].empty()) {  // optional pin with nothing to draw
            enumerate(pins, cands, i + 1, cur, used, result);
            return;
        }
        for (const auto& d : cands[i]) {
            if (used.count(d.source_key)) continue;
            used.insert(d.source_key);
            cur.push_back({pins[i], d});
            enumerate(pins, cands, i + 1, cur, used, result);
            cur.pop_back();
            used.erase(d.source_key);
        }
    }

    static void apply_draw(ExecState& st, const Draw& d) {
        set_holder(st, d.source_key, seq_subtract(holder_content(st, d.source_key), d.tokens));
    }

    std::string describe(const Assignment& a) const {
        std::ostringstream os;
        for (size_t i = 0; i < a.size(); ++i) {
            if (i) os << ",";
            os << a[i].pin->id << "<-" << a[i].draw.source_key << "[" << a[i].draw.tokens.size()
               << "]";
        }
        return os.str();
    }

    bool capacity_ok(const Pin& p, size_t occupied, size_t arriving) const {
        if (p.upper_bound == kUnbounded) return true;
        return occupied + arriving <= static_cast<size_t>(p.upper_bound);
    }

    // Instance paths whose every path segment below `root` is a synchronous
    // invocation (synchronous call or decision behavior); asynchronous
    // subtrees keep running independently and are excluded from resets.
    std::vector<std::string> sync_subtree(const std::string& root) const {
        std::vector<std::string> result;
        for (const auto& sc : instances_) {
            if (sc.rfind(root, 0) != 0) continue;
            bool sync = true;
            std::string walk = root;
            std::string rest = sc.substr(root.size());
            size_t start = 0;
            while (sync && start < rest.size()) {
                auto slash = rest.find('/', start);
                std::string seg = rest.substr(start, slash - start);
                start = slash + 1;
                const Activity* act = activity_of_instance(m_, walk);
                const std::string db = "#db";
                bool is_db = seg.size() > db.size() &&
                             seg.compare(seg.size() - db.size(), db.size(), db) == 0;
                const Node* node =
                    act ? act->find_node(is_db ? seg.substr(0, seg.size() - db.size()) : seg)
                        : nullptr;
                if (!node)
                    sync = false;
                else if (!is_db && !(node->kind == NodeKind::Call && node->synchronous))
                    sync = false;
                walk += seg + "/";
            }
            if (sync) result.push_back(sc);
        }
        return result;
    }

    // Clears all state of the given instances: nodes idle, holders empty,
    // clocks stopped, activity statuses reset.
    void reset_instances(ExecState& st, const std::vector<std::string>& paths) const {
        std::set<std::string> set(paths.begin(), paths.end());
        auto erase_scoped = [&set](auto& map) {
            for (auto it = map.begin(); it != map.end();) {
                if (set.count(split_key(it->first).first))
                    it = map.erase(it);
                else
                    ++it;
            }
        };
        erase_scoped(st.nodes);
        erase_scoped(st.holders);
        erase_scoped(st.clocks);
        for (const auto& p : paths) st.acts.erase(p);
    }

    // ---- action, initial ------------------------------------------------

    void rule_a1() {
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Action) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                std::vector<const Pin*> pins;
                for (const auto& p : n.in_pins) pins.push_back(&p);
                std::vector<bool> mandatory(pins.size(), true);
                for (const auto& asg : assignments(sc, n, pins, mandatory, from_pins)) {
                    ExecState next = s_;
                    NodeStatus st;
                    st.kind = NodeStatus::Kind::Executing;
                    for (const auto& pd : asg) {
                        apply_draw(next, pd.draw);
                        st.f_in[pd.pin->id] = order_tokens(pd.pin->ordering, pd.draw.tokens);
                    }
                    set_node_status(next, sc.path + n.id, st);
                    if (p_.exec_time) set_clock(next, sc.path + n.id, 0);
                    emit("A1", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next),
                         describe(asg));
                }
            }
        }
    }

    void rule_a2() {
        auto need =
            p_.exec_time ? NodeStatus::Kind::Ready : NodeStatus::Kind::Executing;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Action) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != need) continue;
                auto outputs = eval_behavior(m_, n, st.f_in);
                bool ok = true;
                std::vector<std::pair<const Pin*, TokenSeq>> deliveries;
                for (const auto& q : n.out_pins) {
                    TokenSeq vo = order_tokens(q.ordering, outputs.count(q.id) ? outputs[q.id]
                                                                               : TokenSeq{});
                    const TokenSeq& have = holder_content(s_, sc.path + qualified_pin_id(n, q));
                    if (static_cast<int>(vo.size()) < q.lower ||
                        !capacity_ok(q, have.size(), vo.size())) {
                        ok = false;
                        break;
                    }
                    deliveries.emplace_back(&q, std::move(vo));
                }
                if (!ok) continue;
                ExecState next = s_;
                for (auto& [q, vo] : deliveries) {
                    std::string key = sc.path + qualified_pin_id(n, *q);
                    set_holder(next, key, insert_tokens(q->ordering, holder_content(next, key), vo));
                }
                set_node_status(next, sc.path + n.id, {});
                set_clock(next, sc.path + n.id, std::nullopt);
                emit("A2", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    void rule_i1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Initial || n.out_pins.size() != 1) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Pin& q = n.out_pins[0];
                std::string key = sc.path + qualified_pin_id(n, q);
                const TokenSeq& have = holder_content(s_, key);
                if (!capacity_ok(q, have.size(), 1)) continue;
                ExecState next = s_;
                set_holder(next, key, insert_tokens(q.ordering, have, {TokenValue::control()}));
                set_node_status(next, sc.path + n.id, {});
                emit("I1", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // ---- fork -----------------------------------------------------------

    // All edges leaving any output pin of `n`.
    std::vector<const Edge*> out_edges(const Scope& sc, const Node& n) const {
        std::vector<const Edge*> out;
        for (const auto& q : n.out_pins)
            for (int ei : m_.edges_out_of(*sc.act, qualified_pin_id(n, q)))
                out.push_back(&sc.act->edges[ei]);
        return out;
    }

    void rule_f1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Fork || n.in_pins.size() != 1) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                const Pin& p = n.in_pins[0];
                auto oes = out_edges(sc, n);
                for (int ei : m_.edges_into(*sc.act, qualified_pin_id(n, p))) {
                    const Edge& e = sc.act->edges[ei];
                    for (const auto& c : transfer_choices(m_, s_, sc.path, *sc.act, e)) {
                        TokenSeq vc;
                        for (const auto& v : c.tokens) {
                            bool passes_any = false;
                            for (const Edge* oe : oes) passes_any |= token_passes(oe->guard, v);
                            if (passes_any) vc.push_back(v);
                        }
                        int need = e.weight == kUnbounded ? 1 : e.weight;
                        if (static_cast<int>(vc.size()) < need) continue;
                        ExecState next = s_;
                        set_holder(next, sc.path + e.source,
                                   seq_subtract(holder_content(next, sc.path + e.source), vc));
                        set_holder(next, sc.path + qualified_pin_id(n, p),
                                   order_tokens(p.ordering, vc));
                        NodeStatus st;
                        st.kind = NodeStatus::Kind::Executing;
                        set_node_status(next, sc.path + n.id, st);
                        emit("F1", RuleKind::Micro, sc, n.id,
                             rlabel(sc, e.source, qualified_pin_id(n, p)), std::move(next));
                    }
                }
            }
        }
    }

    void rule_f2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Fork || n.in_pins.size() != 1) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Pin& p = n.in_pins[0];
                const TokenSeq vo = holder_content(s_, sc.path + qualified_pin_id(n, p));
                bool ok = true;
                std::vector<std::pair<const Pin*, TokenSeq>> offers;
                for (const auto& q : n.out_pins) {
                    TokenSeq vq;
                    for (const auto& v : vo) {
                        bool passes = false;
                        for (int ei : m_.edges_out_of(*sc.act, qualified_pin_id(n, q)))
                            passes |= token_passes(sc.act->edges[ei].guard, v);
                        if (passes) vq.push_back(v);
                    }
                    const TokenSeq& have = holder_content(s_, sc.path + qualified_pin_id(n, q));
                    if (!capacity_ok(q, have.size(), vq.size())) {
                        ok = false;
                        break;
                    }
                    offers.emplace_back(&q, std::move(vq));
                }
                if (!ok) continue;
                ExecState next = s_;
                set_holder(next, sc.path + qualified_pin_id(n, p), {});
                for (auto& [q, vq] : offers) {
                    std::string key = sc.path + qualified_pin_id(n, *q);
                    set_holder(next, key, insert_tokens(q->ordering, holder_content(next, key), vq));
                }
                set_node_status(next, sc.path + n.id, {});
                emit("F2", RuleKind::Micro, sc, n.id, "tau", std::move(next));
            }
        }
    }

    // ---- join -----------------------------------------------------------

    void rule_j1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Join || n.out_pins.size() != 1) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != NodeStatus::Kind::Idle && st.kind != NodeStatus::Kind::IdleOrdered)
                    continue;
                // The offering pins are those that can currently draw.
                std::vector<const Pin*> offer;
                std::set<std::string> offer_ids;
                for (const auto& p : n.in_pins) {
                    if (!pin_candidates(sc, n, p, false).empty()) {
                        offer.push_back(&p);
                        offer_ids.insert(p.id);
                    }
                }
                if (offer.empty()) continue;
                if (!eval_join_spec(n.join_spec, offer_ids)) continue;
                // Data pins must have registered their offering order.
                bool ordered = true;
                for (const Pin* p : offer)
                    if (p->value_type != "ControlToken")
                        ordered &= std::count(st.p_order.begin(), st.p_order.end(), p->id) > 0;
                if (!ordered) continue;
                std::vector<bool> mandatory(offer.size(), true);
                for (const auto& asg : assignments(sc, n, offer, mandatory, false)) {
                    ExecState next = s_;
                    NodeStatus ns;
                    ns.kind = NodeStatus::Kind::Executing;
                    ns.p_order = st.p_order;  // kept for ordering the result
                    for (const auto& pd : asg) {
                        apply_draw(next, pd.draw);
                        TokenSeq vc = combine(pd.draw.tokens);
                        ns.f_in[pd.pin->id] = vc;
                        set_holder(next, sc.path + qualified_pin_id(n, *pd.pin),
                                   order_tokens(pd.pin->ordering, vc));
                    }
                    set_node_status(next, sc.path + n.id, ns);
                    emit("J1", RuleKind::Micro, sc, n.id, "tau", std::move(next), describe(asg));
                }
            }
        }
    }

    void rule_j2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Join) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != NodeStatus::Kind::Idle && st.kind != NodeStatus::Kind::IdleOrdered)
                    continue;
                for (const auto& p : n.in_pins) {
                    if (p.value_type == "ControlToken") continue;
                    if (std::count(st.p_order.begin(), st.p_order.end(), p.id)) continue;
                    if (pin_candidates(sc, n, p, false).empty()) continue;
                    ExecState next = s_;
                    NodeStatus ns = st;
                    ns.kind = NodeStatus::Kind::IdleOrdered;
                    ns.p_order.push_back(p.id);
                    set_node_status(next, sc.path + n.id, ns);
                    emit("J2", RuleKind::Macro, sc, n.id, "tau", std::move(next), p.id);
                }
            }
        }
    }

    void rule_j3() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Join) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != NodeStatus::Kind::IdleOrdered) continue;
                for (const auto& p : n.in_pins) {
                    if (p.value_type == "ControlToken") continue;
                    if (!std::count(st.p_order.begin(), st.p_order.end(), p.id)) continue;
                    if (!pin_candidates(sc, n, p, false).empty()) continue;
                    ExecState next = s_;
                    NodeStatus ns = st;
                    ns.p_order.erase(std::find(ns.p_order.begin(), ns.p_order.end(), p.id));
                    if (ns.p_order.empty()) ns = {};
                    set_node_status(next, sc.path + n.id, ns);
                    emit("J3", RuleKind::Macro, sc, n.id, "tau", std::move(next), p.id);
                }
            }
        }
    }

    void rule_j4() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Join || n.out_pins.size() != 1) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != NodeStatus::Kind::Executing) continue;
                const Pin& q = n.out_pins[0];
                // Data sequences concatenate in registration order; a purely
                // control join emits a single control token.
                TokenSeq result;
                for (const auto& pid : st.p_order) {
                    auto it = st.f_in.find(pid);
                    if (it == st.f_in.end()) continue;
                    for (const auto& v : it->second)
                        if (!v.is_control()) result.push_back(v);
                }
                if (result.empty()) result.push_back(TokenValue::control());
                std::string qkey = sc.path + qualified_pin_id(n, q);
                if (!capacity_ok(q, holder_content(s_, qkey).size(), result.size())) continue;
                ExecState next = s_;
                for (const auto& p : n.in_pins)
                    set_holder(next, sc.path + qualified_pin_id(n, p), {});
                set_holder(next, qkey,
                           insert_tokens(q.ordering, holder_content(next, qkey), result));
                set_node_status(next, sc.path + n.id, {});
                emit("J4", RuleKind::Micro, sc, n.id, "tau", std::move(next));
            }
        }
    }

    // ---- merge ----------------------------------------------------------

    void rule_m1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Merge || n.out_pins.size() != 1) continue;
                const Pin& q = n.out_pins[0];
                std::string qkey = sc.path + qualified_pin_id(n, q);
                for (const auto& p : n.in_pins) {
                    for (int ei : m_.edges_into(*sc.act, qualified_pin_id(n, p))) {
                        const Edge& e = sc.act->edges[ei];
                        for (const auto& c : transfer_choices(m_, s_, sc.path, *sc.act, e)) {
                            if (!capacity_ok(q, holder_content(s_, qkey).size(), c.tokens.size()))
                                continue;
                            ExecState next = s_;
                            set_holder(
                                next, sc.path + e.source,
                                seq_subtract(holder_content(next, sc.path + e.source), c.tokens));
                            set_holder(next, qkey,
                                       insert_tokens(q.ordering, holder_content(next, qkey),
                                                     c.tokens));
                            emit("M1", RuleKind::Micro, sc, n.id,
                                 rlabel(sc, e.source, qualified_pin_id(n, q)), std::move(next));
                        }
                    }
                }
            }
        }
    }

    // ---- decision -------------------------------------------------------

    const Pin* decision_main_pin(const Node& d) const {
        for (const auto& p : d.in_pins)
            if (!d.d_flow || p.id != *d.d_flow) return &p;
        return nullptr;
    }

    void rule_d1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || n.in_pins.empty()) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                std::vector<const Pin*> pins;
                for (const auto& p : n.in_pins) pins.push_back(&p);
                std::vector<bool> mandatory(pins.size(), true);
                for (const auto& asg : assignments(sc, n, pins, mandatory, false)) {
                    bool equal = true;
                    for (const auto& pd : asg)
                        equal &= pd.draw.tokens.size() == asg.front().draw.tokens.size();
                    if (!equal) continue;
                    ExecState next = s_;
                    for (const auto& pd : asg) {
                        apply_draw(next, pd.draw);
                        set_holder(next, sc.path + qualified_pin_id(n, *pd.pin),
                                   order_tokens(pd.pin->ordering, pd.draw.tokens));
                    }
                    NodeStatus st;
                    st.kind = NodeStatus::Kind::Executing;
                    set_node_status(next, sc.path + n.id, st);
                    emit("D1", RuleKind::Micro, sc, n.id, "tau", std::move(next), describe(asg));
                }
            }
        }
    }

    void rule_d2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                bool empty = true;
                for (const auto& p : n.in_pins)
                    empty &= holder_content(s_, sc.path + qualified_pin_id(n, p)).empty();
                if (n.d_behavior) {
                    empty &= holder_content(s_, sc.path + dbres_holder_id(n)).empty();
                    empty &= act_status(s_, dbehavior_path(sc.path, n.id)).kind ==
                             ActivityStatus::Kind::Idle;
                }
                if (!empty) continue;
                ExecState next = s_;
                set_node_status(next, sc.path + n.id, {});
                emit("D2", RuleKind::Micro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // Output pins whose edge guards accept `v`; an else-edge accepts
    // exactly when no other edge of the decision does.
    std::vector<const Pin*> route_targets(const Scope& sc, const Node& d,
                                          const TokenValue& v) const {
        bool any_regular = false;
        for (const auto& q : d.out_pins)
            for (int ei : m_.edges_out_of(*sc.act, qualified_pin_id(d, q)))
                if (!is_else_guard(sc.act->edges[ei].guard))
                    any_regular |= eval_guard(sc.act->edges[ei].guard, v);
        std::vector<const Pin*> targets;
        for (const auto& q : d.out_pins) {
            bool pass = false;
            for (int ei : m_.edges_out_of(*sc.act, qualified_pin_id(d, q))) {
                const Edge& e = sc.act->edges[ei];
                pass |= is_else_guard(e.guard) ? !any_regular : eval_guard(e.guard, v);
            }
            if (pass) targets.push_back(&q);
        }
        return targets;
    }

    void route_and_emit(const char* rule, const Scope& sc, const Node& n, const Pin& main,
                        const TokenValue& guard_token, const std::string& consume_key) {
        const TokenSeq& vp = holder_content(s_, sc.path + qualified_pin_id(n, main));
        if (vp.empty()) return;
        const TokenValue moved = vp.front();
        for (const Pin* r : route_targets(sc, n, guard_token)) {
            std::string rkey = sc.path + qualified_pin_id(n, *r);
            if (!capacity_ok(*r, holder_content(s_, rkey).size(), 1)) continue;
            ExecState next = s_;
            TokenSeq rest(vp.begin() + 1, vp.end());
            set_holder(next, sc.path + qualified_pin_id(n, main), rest);
            set_holder(next, rkey,
                       insert_tokens(r->ordering, holder_content(next, rkey), {moved}));
            if (!consume_key.empty()) {
                const TokenSeq& ext = holder_content(next, consume_key);
                set_holder(next, consume_key, TokenSeq(ext.begin() + 1, ext.end()));
            }
            emit(rule, RuleKind::Micro, sc, n.id, "tau", std::move(next), r->id);
        }
    }

    void rule_d3() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || n.d_flow || n.d_behavior) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Pin* main = decision_main_pin(n);
                if (!main) continue;
                const TokenSeq& vp = holder_content(s_, sc.path + qualified_pin_id(n, *main));
                if (vp.empty()) continue;
                route_and_emit("D3", sc, n, *main, vp.front(), "");
            }
        }
    }

    void rule_d4() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || !n.d_flow || n.d_behavior) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Pin* main = decision_main_pin(n);
                if (!main) continue;
                std::string qkey;
                for (const auto& p : n.in_pins)
                    if (p.id == *n.d_flow) qkey = sc.path + qualified_pin_id(n, p);
                const TokenSeq& vq = holder_content(s_, qkey);
                if (vq.empty()) continue;
                route_and_emit("D4", sc, n, *main, vq.front(), qkey);
            }
        }
    }

    void rule_d5() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || !n.d_behavior) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Pin* main = decision_main_pin(n);
                if (!main) continue;
                std::string bkey = sc.path + dbres_holder_id(n);
                const TokenSeq& vb = holder_content(s_, bkey);
                if (vb.empty()) continue;
                route_and_emit("D5", sc, n, *main, vb.front(), bkey);
            }
        }
    }

    void rule_d6() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || !n.d_behavior) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Activity* callee = m_.find_activity(*n.d_behavior);
                if (!callee) continue;
                std::string db = dbehavior_path(sc.path, n.id);
                if (act_status(s_, db).kind != ActivityStatus::Kind::Idle) continue;
                if (!holder_content(s_, sc.path + dbres_holder_id(n)).empty()) continue;
                bool clear = true;
                for (const auto& apn : callee->apns) clear &= holder_content(s_, db + apn.id).empty();
                if (!clear) continue;
                bool fed = !n.in_pins.empty();
                for (const auto& p : n.in_pins)
                    fed &= !holder_content(s_, sc.path + qualified_pin_id(n, p)).empty();
                if (!fed) continue;
                // Copy (not move) the head of each input to the positional
                // input parameter; the routed token itself stays put until
                // the evaluation result arrives.
                std::vector<const Apn*> inputs;
                for (const auto& apn : callee->apns)
                    if (apn.direction == PinDirection::In) inputs.push_back(&apn);
                ExecState next = s_;
                size_t count = std::min(inputs.size(), n.in_pins.size());
                for (size_t i = 0; i < count; ++i) {
                    const TokenSeq& src =
                        holder_content(s_, sc.path + qualified_pin_id(n, n.in_pins[i]));
                    set_holder(next, db + inputs[i]->id, {src.front()});
                }
                emit("D6", RuleKind::Micro, sc, n.id, "tau", std::move(next));
            }
        }
    }

    void rule_d7() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Decision || !n.d_behavior) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Activity* callee = m_.find_activity(*n.d_behavior);
                if (!callee) continue;
                std::string db = dbehavior_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, db);
                if (ast.kind != ActivityStatus::Kind::Executing || !ast.pending.empty()) continue;
                if (!instance_quiescent(db, *callee)) continue;
                TokenSeq result;
                for (const auto& apn : callee->apns)
                    if (apn.direction == PinDirection::Out) {
                        const TokenSeq& v = holder_content(s_, db + apn.id);
                        result.insert(result.end(), v.begin(), v.end());
                    }
                ExecState next = s_;
                reset_instances(next, sync_subtree(db));
                std::string bkey = sc.path + dbres_holder_id(n);
                set_holder(next, bkey,
                           insert_tokens(Ordering::Fifo, holder_content(next, bkey), result));
                emit("D7", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // All nodes idle and all non-output holders empty for the instance.
    bool instance_quiescent(const std::string& path, const Activity& act) const {
        for (const auto& n : act.nodes) {
            auto k = node_status(s_, path + n.id).kind;
            if (k != NodeStatus::Kind::Idle && k != NodeStatus::Kind::IdleOrdered) return false;
        }
        for (const auto& [key, seq] : s_.holders) {
            if (split_key(key).first != path) continue;
            auto info = m_.resolve_holder(act, split_key(key).second);
            bool output_apn = info && info->is_apn && info->pin->direction == PinDirection::Out;
            if (!output_apn && !seq.empty()) return false;
        }
        return true;
    }

    // ---- flow final / activity final -------------------------------------

    // One-edge (or one own-pin) consumption used by the final nodes.
    std::vector<std::pair<Draw, std::string>> final_draws(const Scope& sc, const Node& n) const {
        std::vector<std::pair<Draw, std::string>> out;
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& p : n.in_pins)
            for (const auto& d : pin_candidates(sc, n, p, from_pins))
                out.emplace_back(d, p.id);
        return out;
    }

    void rule_ff1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::FlowFinal) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                for (const auto& [draw, pin] : final_draws(sc, n)) {
                    ExecState next = s_;
                    apply_draw(next, draw);
                    NodeStatus st;
                    st.kind = NodeStatus::Kind::Executing;
                    set_node_status(next, sc.path + n.id, st);
                    emit("FF1", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next), pin);
                }
            }
        }
    }

    void rule_ff2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::FlowFinal) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                ExecState next = s_;
                set_node_status(next, sc.path + n.id, {});
                emit("FF2", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // Reaching an activity-final node ends the whole instance: every node,
    // holder and clock of the instance and of its transitively synchronous
    // callees resets. A synchronous caller receives the output parameters
    // (missing ones as null) and its call action completes; asynchronous
    // and root instances just stop.
    void rule_af() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::ActivityFinal) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                auto caller = caller_of(sc.path);
                bool sync_call = false;
                const Node* call_node = nullptr;
                const Activity* caller_act = nullptr;
                if (caller && !caller->dbehavior) {
                    caller_act = activity_of_instance(m_, caller->parent);
                    call_node = caller_act ? caller_act->find_node(caller->node) : nullptr;
                    sync_call = call_node && call_node->kind == NodeKind::Call &&
                                call_node->synchronous;
                }
                for (const auto& [draw, pin] : final_draws(sc, n)) {
                    if (sync_call) {
                        if (node_status(s_, caller->parent + call_node->id).kind !=
                            NodeStatus::Kind::Executing)
                            continue;
                        auto moves = terminal_outputs(sc, caller->parent, *call_node);
                        if (!moves) continue;
                        ExecState next = s_;
                        apply_draw(next, draw);
                        reset_instances(next, sync_subtree(sc.path));
                        for (auto& [key, pin_ptr, tokens] : *moves)
                            set_holder(next, key,
                                       insert_tokens(pin_ptr->ordering, holder_content(next, key),
                                                     tokens));
                        set_node_status(next, caller->parent + call_node->id, {});
                        emit("AF2", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next), pin);
                    } else {
                        ExecState next = s_;
                        apply_draw(next, draw);
                        reset_instances(next, sync_subtree(sc.path));
                        emit("AF1", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next), pin);
                    }
                }
            }
        }
    }

    // Output-parameter delivery to a synchronous caller, shared by the
    // activity-final rule and regular termination: occupied non-exception
    // outputs transfer, empty non-streaming ones deliver a null token.
    // Returns nothing when a capacity bound would be violated.
    using Moves = std::vector<std::tuple<std::string, const Pin*, TokenSeq>>;
    std::optional<Moves> terminal_outputs(const Scope& callee_scope, const std::string& caller_path,
                                          const Node& call_node,
                                          const std::set<std::string>* only_set = nullptr) const {
        Moves moves;
        for (const auto& apn : callee_scope.act->apns) {
            if (apn.direction != PinDirection::Out || apn.exception) continue;
            if (only_set && !only_set->count(apn.id)) continue;
            const TokenSeq& content = holder_content(s_, callee_scope.path + apn.id);
            TokenSeq delivered;
            if (!content.empty())
                delivered = content;
            else if (!apn.streaming)
                delivered = {TokenValue::null()};
            else
                continue;
            const Pin* caller_pin = nullptr;
            for (const auto& q : call_node.out_pins)
                if (q.id == apn.id) caller_pin = &q;
            if (!caller_pin) continue;
            std::string key = caller_path + qualified_pin_id(call_node, *caller_pin);
            if (!capacity_ok(*caller_pin, holder_content(s_, key).size(), delivered.size()))
                return std::nullopt;
            moves.emplace_back(key, caller_pin, std::move(delivered));
        }
        return moves;
    }

    // ---- accept event / send signal ---------------------------------------

    void rule_ae1() {
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::AcceptEvent || n.in_pins.empty()) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                std::vector<const Pin*> pins;
                for (const auto& p : n.in_pins) pins.push_back(&p);
                std::vector<bool> mandatory(pins.size(), true);
                for (const auto& asg : assignments(sc, n, pins, mandatory, from_pins)) {
                    ExecState next = s_;
                    for (const auto& pd : asg) apply_draw(next, pd.draw);
                    NodeStatus st;
                    st.kind = NodeStatus::Kind::Executing;
                    set_node_status(next, sc.path + n.id, st);
                    emit("AE1", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next),
                         describe(asg));
                }
            }
        }
    }

    void rule_ae23() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::AcceptEvent) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                auto pool_it = s_.pools.find(n.pool);
                if (pool_it == s_.pools.end()) continue;
                std::set<std::string> seen;
                for (const auto& ev : pool_it->second) {
                    if (ev.kind() != TokenValue::Kind::Event || ev.event_name() != n.event)
                        continue;
                    if (!seen.insert(ev.canonical()).second) continue;
                    TokenValue delivered =
                        ev.event_args().size() == 1 ? ev.event_args()[0] : ev;
                    bool ok = true;
                    for (const auto& q : n.out_pins) {
                        std::string key = sc.path + qualified_pin_id(n, q);
                        ok &= capacity_ok(q, holder_content(s_, key).size(), 1);
                    }
                    if (!ok) continue;
                    ExecState next = s_;
                    remove_from_pool(next, n.pool, ev);
                    for (const auto& q : n.out_pins) {
                        std::string key = sc.path + qualified_pin_id(n, q);
                        TokenValue v = q.id == n.result ? delivered : TokenValue::control();
                        set_holder(next, key,
                                   insert_tokens(q.ordering, holder_content(next, key), {v}));
                    }
                    const char* rule = n.in_pins.empty() ? "AE3" : "AE2";
                    if (!n.in_pins.empty()) set_node_status(next, sc.path + n.id, {});
                    emit(rule, RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next),
                         ev.canonical());
                }
            }
        }
    }

    void rule_s1() {
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::SendSignal) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                std::vector<const Pin*> pins;
                for (const auto& p : n.in_pins) pins.push_back(&p);
                std::vector<bool> mandatory(pins.size(), true);
                for (const auto& asg : assignments(sc, n, pins, mandatory, from_pins)) {
                    // The signal payload packs the consumed data tokens in
                    // pin order; control tokens only trigger.
                    std::vector<TokenValue> args;
                    for (const auto& pd : asg)
                        for (const auto& v : pd.draw.tokens)
                            if (!v.is_control()) args.push_back(v);
                    ExecState next = s_;
                    for (const auto& pd : asg) apply_draw(next, pd.draw);
                    add_to_pool(next, n.pool, TokenValue::event(n.event, args));
                    NodeStatus st;
                    st.kind = NodeStatus::Kind::Executing;
                    set_node_status(next, sc.path + n.id, st);
                    emit("S1", RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next),
                         describe(asg));
                }
            }
        }
    }

    void rule_s2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::SendSignal) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                bool ok = true;
                for (const auto& q : n.out_pins)
                    ok &= capacity_ok(q, holder_content(s_, sc.path + qualified_pin_id(n, q)).size(),
                                      1);
                if (!ok) continue;
                ExecState next = s_;
                for (const auto& q : n.out_pins) {
                    std::string key = sc.path + qualified_pin_id(n, q);
                    set_holder(next, key,
                               insert_tokens(q.ordering, holder_content(next, key),
                                             {TokenValue::control()}));
                }
                set_node_status(next, sc.path + n.id, {});
                emit("S2", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // ---- call -----------------------------------------------------------

    void rule_c12() {
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Idle) continue;
                const Activity* callee = m_.find_activity(n.behavior);
                if (!callee) continue;
                std::string child = child_path(sc.path, n.id);
                if (act_status(s_, child).kind != ActivityStatus::Kind::Idle) continue;
                if (!core_free()) continue;
                for (size_t psi = 0; psi < callee->parameter_sets.size(); ++psi) {
                    const auto& ps = callee->parameter_sets[psi];
                    std::set<std::string> members(ps.begin(), ps.end());
                    bool all_streaming = true;
                    for (const auto& id : ps) {
                        const Apn* a = callee->find_apn(id);
                        if (a && !a->streaming) all_streaming = false;
                    }
                    const char* rule = all_streaming ? "C2" : "C1";
                    std::vector<const Pin*> pins;
                    std::vector<bool> mandatory;
                    for (const auto& p : n.in_pins) {
                        if (!members.count(p.id)) continue;
                        const Apn* a = callee->find_apn(p.id);
                        pins.push_back(&p);
                        mandatory.push_back(a && !a->streaming);
                    }
                    for (const auto& asg : assignments(sc, n, pins, mandatory, from_pins)) {
                        if (all_streaming && asg.empty()) continue;  // at least one fed
                        bool ok = true;
                        for (const auto& pd : asg) {
                            const Apn* a = callee->find_apn(pd.pin->id);
                            ok &= a && capacity_ok(*a,
                                                   holder_content(s_, child + a->id).size(),
                                                   pd.draw.tokens.size());
                        }
                        if (!ok) continue;
                        ExecState next = s_;
                        for (const auto& pd : asg) {
                            const Apn* a = callee->find_apn(pd.pin->id);
                            apply_draw(next, pd.draw);
                            std::string key = child + a->id;
                            set_holder(next, key,
                                       insert_tokens(a->ordering, holder_content(next, key),
                                                     pd.draw.tokens));
                        }
                        if (n.synchronous) {
                            NodeStatus st;
                            st.kind = NodeStatus::Kind::Executing;
                            set_node_status(next, sc.path + n.id, st);
                        } else {
                            // No rule waits for an asynchronous callee: the
                            // call completes at once and enables downstream
                            // control flow.
                            bool cap = true;
                            for (const auto& q : n.out_pins) {
                                if (q.value_type != "ControlToken") continue;
                                std::string key = sc.path + qualified_pin_id(n, q);
                                cap &= capacity_ok(q, holder_content(s_, key).size(), 1);
                            }
                            if (!cap) continue;
                            for (const auto& q : n.out_pins) {
                                if (q.value_type != "ControlToken") continue;
                                std::string key = sc.path + qualified_pin_id(n, q);
                                set_holder(next, key,
                                           insert_tokens(q.ordering, holder_content(next, key),
                                                         {TokenValue::control()}));
                            }
                        }
                        emit(rule, RuleKind::Macro, sc, n.id, ilabel(sc, n), std::move(next),
                             "ps" + std::to_string(psi) + " " + describe(asg));
                    }
                }
            }
        }
    }

    void rule_c3() {
        bool from_pins = p_.consumption == ConsumptionMode::FromPins;
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Activity* callee = m_.find_activity(n.behavior);
                if (!callee) continue;
                std::string child = child_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, child);
                if (ast.kind != ActivityStatus::Kind::Executing) continue;
                std::vector<const Pin*> pins;
                for (const auto& p : n.in_pins) {
                    const Apn* a = callee->find_apn(p.id);
                    if (a && a->streaming && a->direction == PinDirection::In &&
                        ast.p_set.count(a->id))
                        pins.push_back(&p);
                }
                std::vector<bool> mandatory(pins.size(), false);
                for (const auto& asg : assignments(sc, n, pins, mandatory, from_pins)) {
                    if (asg.empty()) continue;
                    bool ok = true;
                    for (const auto& pd : asg) {
                        const Apn* a = callee->find_apn(pd.pin->id);
                        ok &= a && capacity_ok(*a, holder_content(s_, child + a->id).size(),
                                               pd.draw.tokens.size());
                    }
                    if (!ok) continue;
                    ExecState next = s_;
                    ActivityStatus nast = ast;
                    for (const auto& pd : asg) {
                        const Apn* a = callee->find_apn(pd.pin->id);
                        apply_draw(next, pd.draw);
                        std::string key = child + a->id;
                        set_holder(next, key,
                                   insert_tokens(a->ordering, holder_content(next, key),
                                                 pd.draw.tokens));
                        nast.pending.erase(a->id);
                    }
                    set_act_status(next, child, nast);
                    emit("C3", RuleKind::Macro, sc, n.id, "tau", std::move(next), describe(asg));
                }
            }
        }
    }

    void rule_c4() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Activity* callee = m_.find_activity(n.behavior);
                if (!callee) continue;
                std::string child = child_path(sc.path, n.id);
                if (act_status(s_, child).kind != ActivityStatus::Kind::Executing) continue;
                for (const auto& apn : callee->apns) {
                    if (apn.direction != PinDirection::Out || !apn.streaming) continue;
                    const TokenSeq& content = holder_content(s_, child + apn.id);
                    if (content.empty()) continue;
                    const Pin* q = nullptr;
                    for (const auto& op : n.out_pins)
                        if (op.id == apn.id) q = &op;
                    if (!q) continue;
                    std::string key = sc.path + qualified_pin_id(n, *q);
                    if (!capacity_ok(*q, holder_content(s_, key).size(), content.size())) continue;
                    ExecState next = s_;
                    set_holder(next, child + apn.id, {});
                    set_holder(next, key,
                               insert_tokens(q->ordering, holder_content(next, key), content));
                    emit("C4", RuleKind::Micro, sc, n.id,
                         "r(" + child + apn.id + "-" + sc.path + n.id + ")", std::move(next));
                }
            }
        }
    }

    // ---- activity lifecycle ----------------------------------------------

    void rule_v1() {
        for (const auto& sc : scopes_) {
            if (act_status(s_, sc.path).kind != ActivityStatus::Kind::Idle) continue;
            std::set<std::string> occupied;
            for (const auto& apn : sc.act->apns)
                if (!holder_content(s_, sc.path + apn.id).empty()) occupied.insert(apn.id);
            if (occupied.empty()) continue;
            for (size_t psi = 0; psi < sc.act->parameter_sets.size(); ++psi) {
                const auto& ps = sc.act->parameter_sets[psi];
                std::set<std::string> members(ps.begin(), ps.end());
                bool covers = true;
                for (const auto& id : occupied) covers &= members.count(id) > 0;
                if (!covers) continue;
                ExecState next = s_;
                ActivityStatus ast;
                ast.kind = ActivityStatus::Kind::Executing;
                ast.p_set = members;
                for (const auto& id : members)
                    if (!occupied.count(id)) ast.pending.insert(id);
                set_act_status(next, sc.path, ast);
                for (const auto& n : sc.act->nodes) {
                    bool starts = n.kind == NodeKind::Initial ||
                                  (n.kind == NodeKind::AcceptEvent && n.in_pins.empty());
                    if (starts) {
                        NodeStatus st;
                        st.kind = NodeStatus::Kind::Executing;
                        set_node_status(next, sc.path + n.id, st);
                    }
                }
                emit("V1", RuleKind::Macro, sc, "", "tau", std::move(next),
                     "ps" + std::to_string(psi));
            }
        }
    }

    void rule_v2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                const Activity* callee = m_.find_activity(n.behavior);
                if (!callee) continue;
                std::string child = child_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, child);
                if (ast.kind != ActivityStatus::Kind::Executing || !ast.pending.empty()) continue;
                Scope child_scope{child, callee};
                if (!instance_quiescent_for_termination(child, *callee)) continue;
                // Occupied non-exception outputs must belong to the chosen
                // parameter set.
                bool in_set = true;
                for (const auto& apn : callee->apns) {
                    if (apn.direction != PinDirection::Out || apn.exception) continue;
                    if (!holder_content(s_, child + apn.id).empty())
                        in_set &= ast.p_set.count(apn.id) > 0;
                }
                if (!in_set) continue;
                auto moves = terminal_outputs(child_scope, sc.path, n, &ast.p_set);
                if (!moves) continue;
                ExecState next = s_;
                for (const auto& apn : callee->apns)
                    if (apn.direction == PinDirection::Out) set_holder(next, child + apn.id, {});
                set_act_status(next, child, {});
                for (auto& [key, pin_ptr, tokens] : *moves)
                    set_holder(next, key,
                               insert_tokens(pin_ptr->ordering, holder_content(next, key),
                                             tokens));
                set_node_status(next, sc.path + n.id, {});
                emit("V2", RuleKind::Macro, sc, n.id, tlabel(sc, n), std::move(next));
            }
        }
    }

    // Like instance_quiescent, but output parameters may hold the results.
    bool instance_quiescent_for_termination(const std::string& path, const Activity& act) const {
        return instance_quiescent(path, act);
    }

    void rule_v3() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (size_t ei = 0; ei < sc.act->edges.size(); ++ei) {
                const Edge& e = sc.act->edges[ei];
                auto dst = m_.resolve_holder(*sc.act, e.target);
                if (!dst || !dst->is_apn || dst->pin->direction != PinDirection::Out) continue;
                const Apn* apn = static_cast<const Apn*>(dst->pin);
                if (apn->exception) continue;
                for (const auto& c : transfer_choices(m_, s_, sc.path, *sc.act, e)) {
                    ExecState next = s_;
                    set_holder(next, sc.path + e.source,
                               seq_subtract(holder_content(next, sc.path + e.source), c.tokens));
                    std::string key = sc.path + e.target;
                    set_holder(next, key,
                               insert_tokens(apn->ordering, holder_content(next, key), c.tokens));
                    ActivityStatus ast = act_status(s_, sc.path);
                    ast.pending.erase(apn->id);
                    set_act_status(next, sc.path, ast);
                    emit("V3", RuleKind::Micro, sc, "", rlabel(sc, e.source, e.target),
                         std::move(next));
                }
            }
        }
    }

    // ---- exceptions -------------------------------------------------------

    void rule_x1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (size_t ei = 0; ei < sc.act->edges.size(); ++ei) {
                const Edge& e = sc.act->edges[ei];
                auto dst = m_.resolve_holder(*sc.act, e.target);
                if (!dst || !dst->is_apn) continue;
                const Apn* apn = static_cast<const Apn*>(dst->pin);
                if (!apn->exception) continue;
                for (const auto& c : transfer_choices(m_, s_, sc.path, *sc.act, e)) {
                    ExecState next = s_;
                    reset_instances(next, sync_subtree(sc.path));
                    ActivityStatus ast;
                    ast.kind = ActivityStatus::Kind::Exception;
                    ast.exception = c.tokens;
                    set_act_status(next, sc.path, ast);
                    emit("X1", RuleKind::Macro, sc, "", "tau", std::move(next),
                         e.source + "->" + e.target);
                }
            }
        }
    }

    // Matching handler binding for a call node given the thrown value.
    const HandlerBinding* matching_handler(const Activity& act, const Node& call,
                                           const TokenSeq& v) const {
        if (v.empty()) return nullptr;
        for (const auto& hb : act.handlers)
            if (hb.protects == call.id && hb.exception_type == v.front().type_name())
                return &hb;
        return nullptr;
    }

    void rule_x2() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                std::string child = child_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, child);
                if (ast.kind != ActivityStatus::Kind::Exception) continue;
                const HandlerBinding* hb = matching_handler(*sc.act, n, ast.exception);
                if (!hb) continue;
                const Node* h = sc.act->find_node(hb->handler);
                if (!h || h->in_pins.size() != 1) continue;
                if (node_status(s_, sc.path + h->id).kind != NodeStatus::Kind::Idle) continue;
                bool clear = holder_content(s_, sc.path + qualified_pin_id(*h, h->in_pins[0]))
                                 .empty();
                for (const auto& q : h->out_pins)
                    clear &= holder_content(s_, sc.path + qualified_pin_id(*h, q)).empty();
                if (!clear) continue;
                ExecState next = s_;
                set_holder(next, sc.path + qualified_pin_id(*h, h->in_pins[0]), ast.exception);
                emit("X2", RuleKind::Micro, sc, n.id, "tau", std::move(next), hb->handler);
            }
        }
    }

    void rule_x3() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                if (node_status(s_, sc.path + n.id).kind != NodeStatus::Kind::Executing) continue;
                std::string child = child_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, child);
                if (ast.kind != ActivityStatus::Kind::Exception) continue;
                if (matching_handler(*sc.act, n, ast.exception)) continue;
                ExecState next = s_;
                reset_instances(next, sync_subtree(sc.path));
                ActivityStatus up;
                up.kind = ActivityStatus::Kind::Exception;
                up.exception = ast.exception;
                set_act_status(next, sc.path, up);
                emit("X3", RuleKind::Macro, sc, n.id, "tau", std::move(next));
            }
        }
    }

    void rule_x4() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || n.synchronous) continue;
                std::string child = child_path(sc.path, n.id);
                if (act_status(s_, child).kind != ActivityStatus::Kind::Exception) continue;
                ExecState next = s_;
                reset_instances(next, sync_subtree(child));
                emit("X4", RuleKind::Macro, sc, n.id, "tau", std::move(next));
            }
        }
    }

    void rule_x5() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Call || !n.synchronous) continue;
                std::string child = child_path(sc.path, n.id);
                ActivityStatus ast = act_status(s_, child);
                if (ast.kind != ActivityStatus::Kind::Exception) continue;
                const HandlerBinding* hb = matching_handler(*sc.act, n, ast.exception);
                if (!hb) continue;
                const Node* h = sc.act->find_node(hb->handler);
                if (!h) continue;
                if (node_status(s_, sc.path + h->id).kind != NodeStatus::Kind::Idle) continue;
                bool any = false;
                for (const auto& q : h->out_pins)
                    any |= !holder_content(s_, sc.path + qualified_pin_id(*h, q)).empty();
                if (!any) continue;
                // Handler outputs map positionally onto the call's output
                // pins; uncovered call outputs receive a control token.
                size_t mapped = std::min(h->out_pins.size(), n.out_pins.size());
                bool ok = true;
                for (size_t i = 0; i < mapped && ok; ++i) {
                    const TokenSeq& v =
                        holder_content(s_, sc.path + qualified_pin_id(*h, h->out_pins[i]));
                    std::string key = sc.path + qualified_pin_id(n, n.out_pins[i]);
                    ok &= capacity_ok(n.out_pins[i], holder_content(s_, key).size(), v.size());
                }
                for (size_t i = mapped; i < n.out_pins.size() && ok; ++i) {
                    std::string key = sc.path + qualified_pin_id(n, n.out_pins[i]);
                    ok &= capacity_ok(n.out_pins[i], holder_content(s_, key).size(), 1);
                }
                if (!ok) continue;
                ExecState next = s_;
                for (size_t i = 0; i < mapped; ++i) {
                    std::string hkey = sc.path + qualified_pin_id(*h, h->out_pins[i]);
                    TokenSeq v = holder_content(next, hkey);
                    set_holder(next, hkey, {});
                    std::string key = sc.path + qualified_pin_id(n, n.out_pins[i]);
                    set_holder(next, key,
                               insert_tokens(n.out_pins[i].ordering, holder_content(next, key),
                                             v));
                }
                for (size_t i = mapped; i < n.out_pins.size(); ++i) {
                    std::string key = sc.path + qualified_pin_id(n, n.out_pins[i]);
                    set_holder(next, key,
                               insert_tokens(n.out_pins[i].ordering, holder_content(next, key),
                                             {TokenValue::control()}));
                }
                set_act_status(next, child, {});
                set_node_status(next, sc.path + n.id, {});
                emit("X5", RuleKind::Macro, sc, n.id, "tau", std::move(next), hb->handler);
            }
        }
    }

    // ---- execution time ----------------------------------------------------

    int exec_time_of(const std::string& node_id) const {
        auto it = p_.timing.find(node_id);
        return it == p_.timing.end() ? 0 : it->second;
    }

    void rule_exe_time() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (const auto& n : sc.act->nodes) {
                if (n.kind != NodeKind::Action) continue;
                NodeStatus st = node_status(s_, sc.path + n.id);
                if (st.kind != NodeStatus::Kind::Executing) continue;
                auto c = clock_value(s_, sc.path + n.id);
                if (!c || *c < exec_time_of(n.id)) continue;
                ExecState next = s_;
                st.kind = NodeStatus::Kind::Ready;
                set_node_status(next, sc.path + n.id, st);
                set_clock(next, sc.path + n.id, std::nullopt);
                emit("ExeTime", RuleKind::Macro, sc, n.id, "exeTime(" + sc.path + n.id + ")",
                     std::move(next));
            }
        }
    }

    // Time advances for every running clock at once, clamped at each
    // action's execution time; it only advances while some clock is short.
    void rule_tick() {
        bool any_short = false;
        for (const auto& [key, v] : s_.clocks)
            if (v < exec_time_of(split_key(key).second)) any_short = true;
        if (!any_short) return;
        ExecState next = s_;
        for (auto& [key, v] : next.clocks) v = std::min(v + 1, exec_time_of(split_key(key).second));
        Scope root{"", m_.find_activity(m_.root)};
        emit("Tick", RuleKind::Micro, root, "", "tick", std::move(next));
    }

    // ---- standalone edge transfer ------------------------------------------

    void rule_t1() {
        for (const auto& sc : scopes_) {
            if (!executing_here(sc.path)) continue;
            for (size_t ei = 0; ei < sc.act->edges.size(); ++ei) {
                const Edge& e = sc.act->edges[ei];
                auto dst = m_.resolve_holder(*sc.act, e.target);
                if (!dst || !dst->pin) continue;
                if (dst->is_apn) continue;  // parameter delivery keeps its own rules
                for (const auto& c : transfer_choices(m_, s_, sc.path, *sc.act, e)) {
                    ExecState next = s_;
                    set_holder(next, sc.path + e.source,
                               seq_subtract(holder_content(next, sc.path + e.source), c.tokens));
                    std::string key = sc.path + e.target;
                    set_holder(next, key,
                               insert_tokens(dst->pin->ordering, holder_content(next, key),
                                             c.tokens));
                    emit("T1", RuleKind::Micro, sc, "", rlabel(sc, e.source, e.target),
                         std::move(next));
                }
            }
        }
    }

    const Model& m_;
    const ExecState& s_;
    const SemanticsProfile& p_;
    std::string src_fp_;
    std::vector<std::string> instances_;
    std::vector<Scope> scopes_;
    std::vector<RuleInstance> out_;
};

}  // namespace

std::vector<RuleInstance> applicable(const Model& m, const ExecState& s,
                                     const SemanticsProfile& p) {
    return Engine(m, s, p).run();
}

ExecState fire(const ExecState& s, const RuleInstance& r) {
    if (r.source != fingerprint(s))
        throw std::logic_error("rule instance applied to a different state than it came from");
    return r.next;
}

bool visible_state_ok(const Model& m, const ExecState& s) {
    for (const auto& path : live_instances(m, s)) {
        const Activity* act = activity_of_instance(m, path);
        if (!act) continue;
        for (const auto& n : act->nodes) {
            if (!is_switch_node(n.kind)) continue;
            // A decision evaluating through an attached behavior parks its
            // tokens across transitions by design.
            if (n.kind == NodeKind::Decision && n.d_behavior) continue;
            for (const auto& p : n.in_pins)
                if (!holder_content(s, path + qualified_pin_id(n, p)).empty()) return false;
            if (n.kind == NodeKind::Fork) {
                bool any_empty = n.out_pins.empty();
                for (const auto& q : n.out_pins)
                    any_empty |= holder_content(s, path + qualified_pin_id(n, q)).empty();
                if (!any_empty) return false;
            } else {
                for (const auto& q : n.out_pins)
                    if (!holder_content(s, path + qualified_pin_id(n, q)).empty()) return false;
            }
        }
    }
    return true;
}

namespace {

void dedupe_push(std::vector<Transition>& out, std::set<std::pair<std::string, std::string>>& seen,
                 Transition t) {
    if (seen.emplace(t.label, fingerprint(t.target)).second) out.push_back(std::move(t));
}

}  // namespace

TransitionResult transitions(const Model& m, const ExecState& s, const SemanticsProfile& p,
                             const TransitionOptions& opt) {
    TransitionResult res;
    std::set<std::pair<std::string, std::string>> seen;

    if (p.closure == ClosurePolicy::EagerTransfer) {
        // Small steps run greedily to quiescence (first applicable binding
        // in catalog order), then every labelled step applies.
        ExecState cur = s;
        int steps = 0;
        while (true) {
            if (steps > opt.max_micro_depth) {
                res.diagnostics.push_back("small-step sweep exceeded depth bound");
                break;
            }
            const RuleInstance* pick = nullptr;
            auto insts = applicable(m, cur, p);
            for (const auto& ri : insts)
                if (ri.kind == RuleKind::Micro) {
                    pick = &ri;
                    break;
                }
            if (!pick) break;
            cur = pick->next;
            ++steps;
        }
        for (const auto& ri : applicable(m, cur, p)) {
            if (ri.kind != RuleKind::Macro) continue;
            if (!visible_state_ok(m, ri.next)) continue;
            dedupe_push(res.transitions, seen, {ri.label, ri.rule, ri.next});
        }
        return res;
    }

    // Standard closure: breadth-first over micro-reachable states; each
    // labelled step out of any of them ends one transition, provided the
    // post-state meets the visibility conditions.
    std::set<std::string> visited{fingerprint(s)};
    std::deque<ExecState> queue{s};
    bool truncated = false;
    while (!queue.empty()) {
        ExecState cur = std::move(queue.front());
        queue.pop_front();
        for (const auto& ri : applicable(m, cur, p)) {
            if (ri.kind == RuleKind::Macro) {
                if (!visible_state_ok(m, ri.next)) continue;
                dedupe_push(res.transitions, seen, {ri.label, ri.rule, ri.next});
            } else {
                if (truncated) continue;
                std::string fp = fingerprint(ri.next);
                if (visited.count(fp)) continue;
                if (static_cast<int>(visited.size()) > opt.max_micro_depth) {
                    truncated = true;
                    res.diagnostics.push_back("micro closure exceeded state bound");
                    continue;
                }
                visited.insert(fp);
                queue.push_back(ri.next);
            }
        }
    }
    return res;
}

std::vector<Transition> raw_steps(const Model& m, const ExecState& s,
                                  const SemanticsProfile& p) {
    std::vector<Transition> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& ri : applicable(m, s, p))
        dedupe_push(out, seen, {ri.label, ri.rule, ri.next});
    return out;
}

}  // namespace asos
