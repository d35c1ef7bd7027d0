#include "doctest.h"

#include <algorithm>
#include <set>
#include <string>

#include "asos/parser.hpp"
#include "asos/profile.hpp"
#include "asos/semantics.hpp"
#include "asos/state.hpp"
#include "asos/validate.hpp"

using namespace asos;

namespace {

Model checked(const std::string& text) {
    Model m = parse_model(text);
    ValidationReport r = validate(m);
    if (!r.ok()) FAIL(r.to_string());
    return m;
}

std::vector<RuleInstance> by_rule(const std::vector<RuleInstance>& all, const std::string& id) {
    std::vector<RuleInstance> out;
    for (const auto& r : all)
        if (r.rule == id) out.push_back(r);
    return out;
}

// Runs reduced transitions until no successor matches; returns the state
// reached by following the given label sequence (first match each step).
ExecState follow(const Model& m, const SemanticsProfile& p, ExecState s,
                 const std::vector<std::string>& labels) {
    for (const auto& want : labels) {
        auto res = transitions(m, s, p);
        bool found = false;
        for (auto& t : res.transitions) {
            if (t.label == want) {
                s = std::move(t.target);
                found = true;
                break;
            }
        }
        if (!found) FAIL("label not available: " << want);
    }
    return s;
}

}  // namespace

TEST_SUITE("semantics") {

TEST_CASE("transfer choices: plain target takes the maximum admissible count") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "B", "kind": "action",
           "in_pins": [{"id": "x", "type": "Int", "upper": 2}]}
        ],
        "edges": [{"source": "A.o", "target": "B.x"}]
      }]
    })");
    const Activity& act = m.activities.front();
    ExecState s;
    set_holder(s, "A.o", {TokenValue::of_int(1), TokenValue::of_int(2), TokenValue::of_int(3)});
    auto choices = transfer_choices(m, s, "", act, act.edges.front());
    REQUIRE(choices.size() == 1);  // non-switch targets take one maximal draw
    CHECK(choices[0].k == 2);      // capped by the pin's per-execution upper
    REQUIRE(choices[0].tokens.size() == 2);
    CHECK(choices[0].tokens[0] == TokenValue::of_int(1));  // prefix order
    CHECK(choices[0].tokens[1] == TokenValue::of_int(2));
}

TEST_CASE("transfer choices: switch target enumerates every count") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "J", "kind": "join",
           "in_pins": [{"id": "a", "type": "Int", "upper": 3}],
           "out_pins": [{"id": "z", "type": "Int"}]}
        ],
        "edges": [{"source": "A.o", "target": "J.a"}]
      }]
    })");
    const Activity& act = m.activities.front();
    ExecState s;
    set_holder(s, "A.o", {TokenValue::of_int(1), TokenValue::of_int(2), TokenValue::of_int(3)});
    auto choices = transfer_choices(m, s, "", act, act.edges.front());
    REQUIRE(choices.size() == 3);  // k = 1, 2, 3
    CHECK(choices[0].k == 1);
    CHECK(choices[2].k == 3);
}

TEST_CASE("transfer choices: guards filter and weight gates") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "B", "kind": "action",
           "in_pins": [{"id": "x", "type": "Int", "upper": 5}]}
        ],
        "edges": [{"source": "A.o", "target": "B.x", "guard": "x > 10", "weight": 2}]
      }]
    })");
    const Activity& act = m.activities.front();
    ExecState s;
    set_holder(s, "A.o", {TokenValue::of_int(1), TokenValue::of_int(11), TokenValue::of_int(12)});
    auto choices = transfer_choices(m, s, "", act, act.edges.front());
    REQUIRE(choices.size() == 1);
    CHECK(choices[0].k == 2);  // the two passing tokens, meeting the weight
    CHECK(choices[0].tokens[0] == TokenValue::of_int(11));

    // One passing token is below the weight: no admissible transfer.
    set_holder(s, "A.o", {TokenValue::of_int(1), TokenValue::of_int(11)});
    CHECK(transfer_choices(m, s, "", act, act.edges.front()).empty());
}

TEST_CASE("transfer choices: star weight moves all passing tokens at once") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "B", "kind": "action",
           "in_pins": [{"id": "x", "type": "Int", "upper": "*"}]}
        ],
        "edges": [{"source": "A.o", "target": "B.x", "weight": "*"}]
      }]
    })");
    const Activity& act = m.activities.front();
    ExecState s;
    set_holder(s, "A.o", {TokenValue::of_int(1), TokenValue::of_int(2), TokenValue::of_int(3)});
    auto choices = transfer_choices(m, s, "", act, act.edges.front());
    REQUIRE(choices.size() == 1);
    CHECK(choices[0].k == 3);

    // Holder capacity at the target limits what may arrive.
    Model m2 = m;
    m2.activities.front().nodes[1].in_pins[0].upper_bound = 2;
    auto limited = transfer_choices(m2, s, "", m2.activities.front(),
                                    m2.activities.front().edges.front());
    CHECK(limited.empty());  // all three must move together but only two fit
}

TEST_CASE("fire rejects instances from another state") {
    Model m = checked(R"({
      "root": "Main",
      "activities": [{
        "name": "Main",
        "nodes": [{"id": "Init", "kind": "initial"}, {"id": "A", "kind": "action"}],
        "edges": [{"source": "Init", "target": "A"}]
      }]
    })");
    ExecState s0 = initial_state(m);
    auto rules = applicable(m, s0, profile_reference());
    REQUIRE_FALSE(rules.empty());
    ExecState s1 = fire(s0, rules.front());
    CHECK(fingerprint(s1) != fingerprint(s0));
    CHECK_THROWS_AS(fire(s1, rules.front()), std::logic_error);
    // Firing is pure: the source state is untouched and refireable.
    ExecState again = fire(s0, rules.front());
    CHECK(fingerprint(again) == fingerprint(s1));
}

TEST_CASE("join with data inputs registers offering order and concatenates") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {
        "one": {"builtin": "const", "value": 1},
        "two": {"builtin": "const", "value": 2}
      },
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "I1", "kind": "initial"},
          {"id": "I2", "kind": "initial"},
          {"id": "A", "kind": "action", "behavior": "one",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "B", "kind": "action", "behavior": "two",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "J", "kind": "join",
           "in_pins": [{"id": "a", "type": "Int"}, {"id": "b", "type": "Int"}],
           "out_pins": [{"id": "z", "type": "Int", "upper_bound": 4}]},
          {"id": "C", "kind": "action",
           "in_pins": [{"id": "x", "type": "Int", "upper": 2, "lower": 2}]}
        ],
        "edges": [
          {"source": "I1", "target": "A"},
          {"source": "I2", "target": "B"},
          {"source": "A.o", "target": "J.a"},
          {"source": "B.o", "target": "J.b"},
          {"source": "J.z", "target": "C.x"}
        ]
      }]
    })");
    SemanticsProfile p = profile_reference();

    // Drive A first: its pin registers first, so its value leads the result.
    ExecState s = follow(m, p, initial_state(m), {"t(I1)", "i(A)", "t(A)"});
    auto regs = by_rule(applicable(m, s, p), "J2");
    REQUIRE(regs.size() == 1);
    CHECK(regs[0].kind == RuleKind::Macro);
    ExecState s2 = fire(s, regs[0]);
    CHECK(node_status(s2, "J").kind == NodeStatus::Kind::IdleOrdered);
    CHECK(node_status(s2, "J").p_order == std::vector<std::string>{"a"});

    ExecState s3 = follow(m, p, s2, {"t(I2)", "i(B)", "t(B)"});
    auto regs2 = by_rule(applicable(m, s3, p), "J2");
    REQUIRE(regs2.size() == 1);
    ExecState s4 = fire(s3, regs2[0]);
    CHECK(node_status(s4, "J").p_order == std::vector<std::string>{"a", "b"});

    // i(C) closes the join pipeline; C consumes both tokens in order [1, 2].
    ExecState s5 = follow(m, p, s4, {"i(C)"});
    const auto& fin = node_status(s5, "C").f_in;
    REQUIRE(fin.count("x"));
    REQUIRE(fin.at("x").size() == 2);
    CHECK(fin.at("x")[0] == TokenValue::of_int(1));
    CHECK(fin.at("x")[1] == TokenValue::of_int(2));
}

TEST_CASE("join deregisters a pin whose offer disappeared") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "J", "kind": "join",
           "in_pins": [{"id": "a", "type": "Int"}],
           "out_pins": [{"id": "z", "type": "Int"}]},
          {"id": "C", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
        ],
        "edges": [
          {"source": "A.o", "target": "J.a"},
          {"source": "J.z", "target": "C.x"}
        ]
      }]
    })");
    ExecState s;
    ActivityStatus ast;
    ast.kind = ActivityStatus::Kind::Executing;
    set_act_status(s, "", ast);
    NodeStatus js;
    js.kind = NodeStatus::Kind::IdleOrdered;
    js.p_order = {"a"};
    set_node_status(s, "J", js);  // registered, but A.o is empty again
    auto rem = by_rule(applicable(m, s, profile_reference()), "J3");
    REQUIRE(rem.size() == 1);
    CHECK(rem[0].kind == RuleKind::Macro);
    ExecState s2 = fire(s, rem[0]);
    CHECK(node_status(s2, "J").kind == NodeStatus::Kind::Idle);
    CHECK(node_status(s2, "J").p_order.empty());
}

TEST_CASE("decision with a guard flow routes by the side token") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {
        "five": {"builtin": "const", "value": 5},
        "one": {"builtin": "const", "value": 1}
      },
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "I1", "kind": "initial"},
          {"id": "I2", "kind": "initial"},
          {"id": "A", "kind": "action", "behavior": "five",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "G", "kind": "action", "behavior": "one",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "D", "kind": "decision", "d_flow": "g",
           "in_pins": [{"id": "x", "type": "Int"}, {"id": "g", "type": "Int"}],
           "out_pins": [{"id": "r1", "type": "Int"}, {"id": "r2", "type": "Int"}]},
          {"id": "B", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]},
          {"id": "C", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
        ],
        "edges": [
          {"source": "I1", "target": "A"},
          {"source": "I2", "target": "G"},
          {"source": "A.o", "target": "D.x"},
          {"source": "G.o", "target": "D.g"},
          {"source": "D.r1", "target": "B.x", "guard": "x >= 3"},
          {"source": "D.r2", "target": "C.x", "guard": "else"}
        ]
      }]
    })");
    // Guard token is 1, so x >= 3 fails and the else edge routes the main
    // token (5) to C.
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m),
                         {"t(I1)", "i(A)", "t(A)", "t(I2)", "i(G)", "t(G)", "i(C)"});
    const auto& fin = node_status(s, "C").f_in;
    REQUIRE(fin.count("x"));
    CHECK(fin.at("x") == TokenSeq{TokenValue::of_int(5)});
    // B is never invocable anywhere in this run.
    for (auto& t : transitions(m, initial_state(m), p).transitions)
        CHECK(t.label != "i(B)");
}

TEST_CASE("decision with an attached behavior evaluates through it") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {
        "five": {"builtin": "const", "value": 5},
        "neg": {"builtin": "negate"}
      },
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "I1", "kind": "initial"},
           {"id": "A", "kind": "action", "behavior": "five",
            "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "D", "kind": "decision", "d_behavior": "Neg",
            "in_pins": [{"id": "x", "type": "Int"}],
            "out_pins": [{"id": "r1", "type": "Int"}, {"id": "r2", "type": "Int"}]},
           {"id": "B", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]},
           {"id": "C", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
         ],
         "edges": [
           {"source": "I1", "target": "A"},
           {"source": "A.o", "target": "D.x"},
           {"source": "D.r1", "target": "B.x", "guard": "x < 0"},
           {"source": "D.r2", "target": "C.x", "guard": "else"}
         ]},
        {"name": "Neg",
         "apns": [{"id": "pi", "direction": "in", "type": "Int"},
                  {"id": "po", "direction": "out", "type": "Int"}],
         "nodes": [{"id": "N", "kind": "action", "behavior": "neg",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "b", "type": "Int"}]}],
         "edges": [{"source": "pi", "target": "N.a"},
                   {"source": "N.b", "target": "po"}]}
      ]
    })");
    // The behavior runs as its own nested instance: it starts, negates the
    // copied token, and hands the result back before the edge evaluation.
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m),
                         {"t(I1)", "i(A)", "t(A)", "tau", "i(D#db/N)", "t(D#db/N)", "t(D)"});
    REQUIRE(holder_content(s, "D.dbres") == TokenSeq{TokenValue::of_int(-5)});
    CHECK(act_status(s, "D#db/").kind == ActivityStatus::Kind::Idle);  // subtree reset

    // -5 < 0 picks the first branch; the main token (still 5) goes to B.
    // (Both interleavings with the decision's own wind-down are visible.)
    auto res = transitions(m, s, p);
    REQUIRE_FALSE(res.transitions.empty());
    for (const auto& t : res.transitions) {
        CHECK(t.label == "i(B)");
        const auto& fin = node_status(t.target, "B").f_in;
        REQUIRE(fin.count("x"));
        CHECK(fin.at("x") == TokenSeq{TokenValue::of_int(5)});
    }
}

TEST_CASE("asynchronous call starts the callee and completes at once") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"five": {"builtin": "const", "value": 5}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "Init", "kind": "initial"},
           {"id": "A", "kind": "action", "behavior": "five",
            "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "C", "kind": "call", "behavior": "Sub", "synchronous": false}
         ],
         "edges": [
           {"source": "Init", "target": "A"},
           {"source": "A.o", "target": "C.p"}
         ]},
        {"name": "Sub",
         "apns": [{"id": "p", "direction": "in", "type": "Int"}],
         "nodes": [{"id": "B", "kind": "action",
                    "in_pins": [{"id": "a", "type": "Int"}]}],
         "edges": [{"source": "p", "target": "B.a"}]}
      ]
    })");
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m), {"t(Init)", "i(A)", "t(A)", "i(C)"});
    CHECK(node_status(s, "C").kind == NodeStatus::Kind::Idle);  // not held executing
    CHECK(holder_content(s, "C/p") == TokenSeq{TokenValue::of_int(5)});
    // The callee instance then starts and runs on its own.
    ExecState s2 = follow(m, p, s, {"tau", "i(C/B)", "t(C/B)"});
    CHECK(act_status(s2, "C/").kind == ActivityStatus::Kind::Executing);
}

TEST_CASE("streaming call inputs feed a running callee") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"five": {"builtin": "const", "value": 5}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "I1", "kind": "initial"},
           {"id": "I2", "kind": "initial"},
           {"id": "A", "kind": "action", "behavior": "five",
            "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "B", "kind": "action", "behavior": "five",
            "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "C", "kind": "call", "behavior": "Sub"}
         ],
         "edges": [
           {"source": "I1", "target": "A"},
           {"source": "I2", "target": "B"},
           {"source": "A.o", "target": "C.ps"},
           {"source": "B.o", "target": "C.ps"}
         ]},
        {"name": "Sub",
         "apns": [{"id": "ps", "direction": "in", "type": "Int", "streaming": true}],
         "nodes": [{"id": "W", "kind": "action",
                    "in_pins": [{"id": "a", "type": "Int"}]}],
         "edges": [{"source": "ps", "target": "W.a"}]}
      ]
    })");
    SemanticsProfile p = profile_reference();
    // First token starts the call through the all-streaming variant.
    ExecState s = follow(m, p, initial_state(m), {"t(I1)", "i(A)", "t(A)"});
    auto starts = by_rule(applicable(m, s, p), "C2");
    REQUIRE_FALSE(starts.empty());
    CHECK(starts[0].label == "i(C)");
    ExecState s2 = fire(s, starts[0]);
    CHECK(node_status(s2, "C").kind == NodeStatus::Kind::Executing);
    CHECK(holder_content(s2, "C/ps") == TokenSeq{TokenValue::of_int(5)});

    // Second token reaches the already-running callee via the feed step.
    ExecState s3 = follow(m, p, s2, {"tau", "t(I2)", "i(B)", "t(B)"});
    auto feeds = by_rule(applicable(m, s3, p), "C3");
    REQUIRE(feeds.size() == 1);
    CHECK(feeds[0].kind == RuleKind::Macro);
    ExecState s4 = fire(s3, feeds[0]);
    // Nothing consumed the first token yet, so both sit on the parameter.
    CHECK(holder_content(s4, "C/ps").size() == 2);
}

TEST_CASE("streaming call outputs flow back while the callee runs") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"five": {"builtin": "const", "value": 5},
                    "id": {"builtin": "identity"}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "Init", "kind": "initial"},
           {"id": "A", "kind": "action", "behavior": "five",
            "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "C", "kind": "call", "behavior": "Sub"},
           {"id": "E", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
         ],
         "edges": [
           {"source": "Init", "target": "A"},
           {"source": "A.o", "target": "C.p"},
           {"source": "C.qs", "target": "E.x"}
         ]},
        {"name": "Sub",
         "apns": [{"id": "p", "direction": "in", "type": "Int"},
                  {"id": "qs", "direction": "out", "type": "Int", "streaming": true}],
         "nodes": [{"id": "B", "kind": "action", "behavior": "id",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "b", "type": "Int"}]}],
         "edges": [{"source": "p", "target": "B.a"},
                   {"source": "B.b", "target": "qs"}]}
      ]
    })");
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m),
                         {"t(Init)", "i(A)", "t(A)", "i(C)", "tau", "i(C/B)", "t(C/B)"});
    // First the pending output parameter receives the produced token...
    auto ret = by_rule(applicable(m, s, p), "V3");
    REQUIRE(ret.size() == 1);
    CHECK(ret[0].kind == RuleKind::Micro);
    ExecState s2 = fire(s, ret[0]);
    CHECK(holder_content(s2, "C/qs") == TokenSeq{TokenValue::of_int(5)});
    // ...then the streaming return hands it to the caller's pin while the
    // callee is still running.
    auto back = by_rule(applicable(m, s2, p), "C4");
    REQUIRE(back.size() == 1);
    CHECK(back[0].kind == RuleKind::Micro);
    ExecState s3 = fire(s2, back[0]);
    CHECK(holder_content(s3, "C.qs") == TokenSeq{TokenValue::of_int(5)});
    CHECK(holder_content(s3, "C/qs").empty());
    CHECK(node_status(s3, "C").kind == NodeStatus::Kind::Executing);
}

TEST_CASE("exception without a handler poisons the caller") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"seven": {"builtin": "const", "value": 7}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "Init", "kind": "initial"},
           {"id": "C", "kind": "call", "behavior": "Sub"},
           {"id": "A", "kind": "action", "behavior": "seven",
            "out_pins": [{"id": "o", "type": "Int"}]}
         ],
         "edges": [
           {"source": "Init", "target": "A"},
           {"source": "A.o", "target": "C.p"}
         ]},
        {"name": "Sub",
         "apns": [{"id": "p", "direction": "in", "type": "Int"},
                  {"id": "err", "direction": "out", "type": "Int", "exception": true}],
         "nodes": [{"id": "R", "kind": "action", "behavior": "seven",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "ro", "type": "Int"}]}],
         "edges": [{"source": "p", "target": "R.a"},
                   {"source": "R.ro", "target": "err"}]}
      ]
    })");
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m),
                         {"t(Init)", "i(A)", "t(A)", "i(C)", "tau", "i(C/R)", "t(C/R)"});
    // The raise resets the callee and records the exception value.
    auto raise = by_rule(applicable(m, s, p), "X1");
    REQUIRE(raise.size() == 1);
    ExecState s2 = fire(s, raise[0]);
    CHECK(act_status(s2, "C/").kind == ActivityStatus::Kind::Exception);
    CHECK(act_status(s2, "C/").exception == TokenSeq{TokenValue::of_int(7)});
    // No binding matches, so the caller instance is reset into exception.
    auto prop = by_rule(applicable(m, s2, p), "X3");
    REQUIRE(prop.size() == 1);
    ExecState s3 = fire(s2, prop[0]);
    CHECK(act_status(s3, "").kind == ActivityStatus::Kind::Exception);
    CHECK(applicable(m, s3, p).empty());
}

TEST_CASE("asynchronous callee exceptions dissolve quietly") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"seven": {"builtin": "const", "value": 7}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "Init", "kind": "initial"},
           {"id": "C", "kind": "call", "behavior": "Sub", "synchronous": false},
           {"id": "A", "kind": "action", "behavior": "seven",
            "out_pins": [{"id": "o", "type": "Int"}]}
         ],
         "edges": [
           {"source": "Init", "target": "A"},
           {"source": "A.o", "target": "C.p"}
         ]},
        {"name": "Sub",
         "apns": [{"id": "p", "direction": "in", "type": "Int"},
                  {"id": "err", "direction": "out", "type": "Int", "exception": true}],
         "nodes": [{"id": "R", "kind": "action", "behavior": "seven",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "ro", "type": "Int"}]}],
         "edges": [{"source": "p", "target": "R.a"},
                   {"source": "R.ro", "target": "err"}]}
      ]
    })");
    SemanticsProfile p = profile_reference();
    ExecState s = follow(m, p, initial_state(m),
                         {"t(Init)", "i(A)", "t(A)", "i(C)", "tau", "i(C/R)", "t(C/R)"});
    ExecState s2 = fire(s, by_rule(applicable(m, s, p), "X1").at(0));
    auto dissolve = by_rule(applicable(m, s2, p), "X4");
    REQUIRE(dissolve.size() == 1);
    ExecState s3 = fire(s2, dissolve[0]);
    // The child instance is gone; the root carries on untouched.
    CHECK(act_status(s3, "C/").kind == ActivityStatus::Kind::Idle);
    CHECK(act_status(s3, "").kind == ActivityStatus::Kind::Executing);
}

TEST_CASE("accept-event with inputs arms on control flow and re-arms") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "events": ["ping"],
      "behaviors": {"five": {"builtin": "const", "value": 5}},
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "I1", "kind": "initial"},
          {"id": "I2", "kind": "initial"},
          {"id": "A", "kind": "action", "behavior": "five",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "S", "kind": "send_signal", "event": "ping",
           "in_pins": [{"id": "sx", "type": "Int"}]},
          {"id": "W", "kind": "accept_event", "event": "ping", "result": "r",
           "out_pins": [{"id": "r", "type": "Int"}]},
          {"id": "E", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
        ],
        "edges": [
          {"source": "I1", "target": "A"},
          {"source": "A.o", "target": "S.sx"},
          {"source": "I2", "target": "W"},
          {"source": "W.r", "target": "E.x"}
        ]
      }]
    })");
    SemanticsProfile p = profile_reference();
    ExecState s0 = initial_state(m);
    // W has an input pin now, so it does not start executing on its own.
    CHECK(node_status(s0, "W").kind == NodeStatus::Kind::Idle);
    ExecState s = follow(m, p, s0, {"t(I2)", "i(W)"});
    CHECK(node_status(s, "W").kind == NodeStatus::Kind::Executing);
    // No matching event yet: the waiter cannot terminate.
    CHECK(by_rule(applicable(m, s, p), "AE2").empty());

    ExecState s2 = follow(m, p, s, {"t(I1)", "i(A)", "t(A)", "i(S)"});
    auto acc = by_rule(applicable(m, s2, p), "AE2");
    REQUIRE(acc.size() == 1);
    CHECK(acc[0].label == "t(W)");
    ExecState s3 = fire(s2, acc[0]);
    // Single-argument events deliver the bare argument to the result pin.
    CHECK(holder_content(s3, "W.r") == TokenSeq{TokenValue::of_int(5)});
    CHECK(node_status(s3, "W").kind == NodeStatus::Kind::Idle);  // re-armable
    CHECK(s3.pools.empty());  // the occurrence was consumed
}

TEST_CASE("execution times gate termination behind clock progress") {
    Model m = checked(R"({
      "root": "Main",
      "activities": [{
        "name": "Main",
        "nodes": [{"id": "Init", "kind": "initial"}, {"id": "A", "kind": "action"}],
        "edges": [{"source": "Init", "target": "A"}]
      }]
    })");
    SemanticsProfile p = extend_execution_time(profile_reference(), {{"A", 2}});
    ExecState s = follow(m, p, initial_state(m), {"t(Init)", "i(A)"});
    CHECK(clock_value(s, "A") == 0);

    // Executing but not yet ready: only the clock may advance.
    auto all = applicable(m, s, p);
    REQUIRE(all.size() == 1);
    CHECK(all[0].rule == "Tick");
    CHECK(all[0].label == "tick");
    ExecState s1 = fire(s, all[0]);
    CHECK(clock_value(s1, "A") == 1);
    ExecState s2 = fire(s1, by_rule(applicable(m, s1, p), "Tick").at(0));
    CHECK(clock_value(s2, "A") == 2);

    auto ready = by_rule(applicable(m, s2, p), "ExeTime");
    REQUIRE(ready.size() == 1);
    CHECK(ready[0].label == "exeTime(A)");
    ExecState s3 = fire(s2, ready[0]);
    CHECK(node_status(s3, "A").kind == NodeStatus::Kind::Ready);
    CHECK_FALSE(clock_value(s3, "A").has_value());

    // Now, and only now, the action can terminate.
    ExecState s4 = follow(m, p, s3, {"t(A)"});
    CHECK(node_status(s4, "A").kind == NodeStatus::Kind::Idle);
}

TEST_CASE("single-core blocks invocations while any node executes") {
    Model m = load_model_file(std::string(FIXTURE_DIR) + "/two_parallel.model");
    SemanticsProfile p = extend_single_core(profile_reference());
    ExecState s = follow(m, p, initial_state(m), {"t(Init)", "i(P)"});
    // P executes: Q's invocation is held back until t(P).
    for (const auto& r : applicable(m, s, p)) CHECK(r.label != "i(Q)");
    ExecState s2 = follow(m, p, s, {"t(P)"});
    bool q_now = false;
    for (const auto& r : applicable(m, s2, p)) q_now |= r.label == "i(Q)";
    CHECK(q_now);
}

TEST_CASE("pin-based consumption separates transfer from invocation") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"five": {"builtin": "const", "value": 5}},
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "Init", "kind": "initial"},
          {"id": "A", "kind": "action", "behavior": "five",
           "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "B", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
        ],
        "edges": [
          {"source": "Init", "target": "A"},
          {"source": "A.o", "target": "B.x"}
        ]
      }]
    })");
    SemanticsProfile var2 = parse_profile_spec("var2");
    SemanticsProfile ref = profile_reference();

    ExecState s = follow(m, ref, initial_state(m), {"t(Init)", "i(A)", "t(A)"});
    // Under the reference profile the invocation pulls across the edge.
    bool ib_ref = false;
    for (const auto& r : applicable(m, s, ref)) ib_ref |= r.label == "i(B)";
    CHECK(ib_ref);
    // Under pin consumption the token must first be transferred.
    bool ib_var = false, transfer = false;
    for (const auto& r : applicable(m, s, var2)) {
        ib_var |= r.label == "i(B)";
        if (r.rule == "T1") {
            transfer = true;
            CHECK(r.label == "r(A-B)");
            CHECK(r.kind == RuleKind::Micro);
        }
    }
    CHECK_FALSE(ib_var);
    REQUIRE(transfer);

    ExecState s2 = fire(s, by_rule(applicable(m, s, var2), "T1").at(0));
    CHECK(holder_content(s2, "B.x") == TokenSeq{TokenValue::of_int(5)});
    bool ib_after = false;
    for (const auto& r : applicable(m, s2, var2)) ib_after |= r.label == "i(B)";
    CHECK(ib_after);
    // The reference rules never draw from the node's own pin here.
    bool ib_ref_after = false;
    for (const auto& r : applicable(m, s2, ref)) ib_ref_after |= r.label == "i(B)";
    CHECK_FALSE(ib_ref_after);
}

TEST_CASE("standalone transfers skip parameter-node targets") {
    Model m = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"id": {"builtin": "identity"}},
      "activities": [
        {"name": "Main",
         "nodes": [{"id": "C", "kind": "call", "behavior": "Sub"}],
         "edges": []},
        {"name": "Sub",
         "apns": [{"id": "p", "direction": "in", "type": "Int"},
                  {"id": "q", "direction": "out", "type": "Int"}],
         "nodes": [{"id": "B", "kind": "action", "behavior": "id",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "b", "type": "Int"}]}],
         "edges": [{"source": "p", "target": "B.a"},
                   {"source": "B.b", "target": "q"}]}
      ]
    })");
    SemanticsProfile var2 = parse_profile_spec("var2");
    ExecState s;
    ActivityStatus root, child;
    root.kind = ActivityStatus::Kind::Executing;
    set_act_status(s, "", root);
    child.kind = ActivityStatus::Kind::Executing;
    child.p_set = {"p", "q"};
    child.pending = {"q"};
    set_act_status(s, "C/", child);
    set_holder(s, "C/p", {TokenValue::of_int(1)});
    set_holder(s, "C/B.b", {TokenValue::of_int(2)});

    auto moves = by_rule(applicable(m, s, var2), "T1");
    // p -> B.a is pin-targeted and transferable; B.b -> q targets a
    // parameter node and stays with the dedicated return step.
    REQUIRE(moves.size() == 1);
    CHECK(moves[0].label == "r(C/p-C/B)");
}

TEST_CASE("visibility conditions exempt decisions with attached behaviors") {
    Model plain = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
          {"id": "D", "kind": "decision",
           "in_pins": [{"id": "x", "type": "Int"}],
           "out_pins": [{"id": "r", "type": "Int"}]},
          {"id": "B", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
        ],
        "edges": [
          {"source": "A.o", "target": "D.x"},
          {"source": "D.r", "target": "B.x", "guard": "true"}
        ]
      }]
    })");
    ExecState s;
    set_holder(s, "D.x", {TokenValue::of_int(1)});
    CHECK_FALSE(visible_state_ok(plain, s));

    Model attached = checked(R"({
      "root": "Main",
      "datatypes": ["Int"],
      "behaviors": {"id": {"builtin": "identity"}},
      "activities": [
        {"name": "Main",
         "nodes": [
           {"id": "A", "kind": "action", "out_pins": [{"id": "o", "type": "Int"}]},
           {"id": "D", "kind": "decision", "d_behavior": "Ev",
            "in_pins": [{"id": "x", "type": "Int"}],
            "out_pins": [{"id": "r", "type": "Int"}]},
           {"id": "B", "kind": "action", "in_pins": [{"id": "x", "type": "Int"}]}
         ],
         "edges": [
           {"source": "A.o", "target": "D.x"},
           {"source": "D.r", "target": "B.x", "guard": "true"}
         ]},
        {"name": "Ev",
         "apns": [{"id": "pi", "direction": "in", "type": "Int"},
                  {"id": "po", "direction": "out", "type": "Int"}],
         "nodes": [{"id": "N", "kind": "action", "behavior": "id",
                    "in_pins": [{"id": "a", "type": "Int"}],
                    "out_pins": [{"id": "b", "type": "Int"}]}],
         "edges": [{"source": "pi", "target": "N.a"},
                   {"source": "N.b", "target": "po"}]}
      ]
    })");
    ExecState s2;
    set_holder(s2, "D.x", {TokenValue::of_int(1)});
    CHECK(visible_state_ok(attached, s2));
}

TEST_CASE("transitions are deterministic across repeated calls") {
    Model m = load_model_file(std::string(FIXTURE_DIR) + "/fig4a.model");
    for (const char* spec : {"reference", "var1", "var2"}) {
        SemanticsProfile p = parse_profile_spec(spec);
        ExecState s = initial_state(m);
        auto a = transitions(m, s, p);
        auto b = transitions(m, s, p);
        REQUIRE(a.transitions.size() == b.transitions.size());
        for (std::size_t i = 0; i < a.transitions.size(); ++i) {
            CHECK(a.transitions[i].label == b.transitions[i].label);
            CHECK(fingerprint(a.transitions[i].target) == fingerprint(b.transitions[i].target));
        }
    }
}

TEST_CASE("profile spec parsing composes and rejects unknown parts") {
    SemanticsProfile p = parse_profile_spec("exec-time,single-core", {{"A", 1}});
    CHECK(p.exec_time);
    CHECK(p.single_core);
    CHECK(p.timing.at("A") == 1);
    CHECK(parse_profile_spec("").name == "reference");
    CHECK(parse_profile_spec("var1").closure == ClosurePolicy::EagerTransfer);
    CHECK(parse_profile_spec("var2").consumption == ConsumptionMode::FromPins);
    CHECK_THROWS_AS(parse_profile_spec("nope"), std::invalid_argument);

    // Extension rules appear in the catalog, after the base rules.
    auto catalog = parse_profile_spec("exec-time,var2").catalog();
    bool tick = false, t1_last = false;
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        tick |= catalog[i].id == "Tick";
        t1_last = catalog[i].id == "T1" && i + 1 == catalog.size();
    }
    CHECK(tick);
    CHECK(t1_last);
}

}  // TEST_SUITE
