#include "doctest.h"

#include "asos/parser.hpp"
#include "asos/state.hpp"

using namespace asos;

TEST_SUITE("state") {

TEST_CASE("setters normalize defaults away") {
    ExecState s;
    set_node_status(s, "A", {});
    CHECK(s.nodes.empty());
    set_holder(s, "A.p", {});
    CHECK(s.holders.empty());
    set_act_status(s, "", {});
    CHECK(s.acts.empty());
    set_clock(s, "A", std::nullopt);
    CHECK(s.clocks.empty());

    NodeStatus ns;
    ns.kind = NodeStatus::Kind::Executing;
    set_node_status(s, "A", ns);
    CHECK(s.nodes.size() == 1);
    set_node_status(s, "A", {});
    CHECK(s.nodes.empty());
}

TEST_CASE("fingerprint equals iff canonical serialization equals") {
    ExecState a, b;
    set_holder(a, "A.p", {TokenValue::of_int(1)});
    set_holder(b, "A.p", {TokenValue::of_int(1)});
    CHECK(canonical_serialize(a) == canonical_serialize(b));
    CHECK(fingerprint(a) == fingerprint(b));

    set_holder(b, "A.p", {TokenValue::of_int(2)});
    CHECK(canonical_serialize(a) != canonical_serialize(b));
    CHECK(fingerprint(a) != fingerprint(b));
}

TEST_CASE("fingerprint sees consumed inputs and order registration") {
    ExecState a, b;
    NodeStatus sa, sb;
    sa.kind = NodeStatus::Kind::Executing;
    sb.kind = NodeStatus::Kind::Executing;
    sa.f_in["p"] = {TokenValue::of_int(1)};
    sb.f_in["p"] = {TokenValue::of_int(2)};
    set_node_status(a, "J", sa);
    set_node_status(b, "J", sb);
    CHECK(fingerprint(a) != fingerprint(b));

    // Two executing joins that differ only in the registered input order
    // must not collide.
    NodeStatus o1, o2;
    o1.kind = NodeStatus::Kind::Executing;
    o2.kind = NodeStatus::Kind::Executing;
    o1.p_order = {"p", "q"};
    o2.p_order = {"q", "p"};
    ExecState c, d;
    set_node_status(c, "J", o1);
    set_node_status(d, "J", o2);
    CHECK(fingerprint(c) != fingerprint(d));

    NodeStatus io;
    io.kind = NodeStatus::Kind::IdleOrdered;
    io.p_order = {"p"};
    ExecState e;
    set_node_status(e, "J", io);
    CHECK(fingerprint(e) != fingerprint(ExecState{}));
}

TEST_CASE("clocks and pools are part of the snapshot identity") {
    ExecState a, b;
    set_clock(a, "A", 1);
    set_clock(b, "A", 2);
    CHECK(fingerprint(a) != fingerprint(b));

    ExecState c, d;
    add_to_pool(c, "main", TokenValue::event("e", {}));
    CHECK(fingerprint(c) != fingerprint(d));
    CHECK(remove_from_pool(c, "main", TokenValue::event("e", {})));
    CHECK(fingerprint(c) == fingerprint(d));
    CHECK_FALSE(remove_from_pool(c, "main", TokenValue::event("e", {})));
}

TEST_CASE("pools store canonical multisets") {
    ExecState a, b;
    add_to_pool(a, "main", TokenValue::of_int(1));
    add_to_pool(a, "main", TokenValue::of_int(2));
    add_to_pool(b, "main", TokenValue::of_int(2));
    add_to_pool(b, "main", TokenValue::of_int(1));
    CHECK(fingerprint(a) == fingerprint(b));
}

TEST_CASE("instance path helpers") {
    CHECK(child_path("", "c1") == "c1/");
    CHECK(child_path("c1/", "c2") == "c1/c2/");
    CHECK(dbehavior_path("", "d") == "d#db/");

    auto [p1, local1] = split_key("c1/c2/A.p");
    CHECK(p1 == "c1/c2/");
    CHECK(local1 == "A.p");
    auto [p2, local2] = split_key("A.p");
    CHECK(p2 == "");
    CHECK(local2 == "A.p");

    auto root_caller = caller_of("");
    CHECK_FALSE(root_caller.has_value());
    auto c = caller_of("c1/");
    REQUIRE(c.has_value());
    CHECK(c->parent == "");
    CHECK(c->node == "c1");
    CHECK_FALSE(c->dbehavior);
    auto db = caller_of("d#db/");
    REQUIRE(db.has_value());
    CHECK(db->node == "d");
    CHECK(db->dbehavior);
}

TEST_CASE("initial snapshot starts the root and its sources") {
    Model m = parse_model(R"({
      "root": "Main",
      "events": ["go"],
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "Init", "kind": "initial"},
          {"id": "W", "kind": "accept_event", "event": "go", "result": "r",
           "out_pins": [{"id": "r"}]},
          {"id": "A", "kind": "action"}
        ],
        "edges": [{"source": "Init", "target": "A"}]
      }]
    })");
    ExecState s = initial_state(m);
    CHECK(act_status(s, "").kind == ActivityStatus::Kind::Executing);
    CHECK(node_status(s, "Init").kind == NodeStatus::Kind::Executing);
    CHECK(node_status(s, "W").kind == NodeStatus::Kind::Executing);
    CHECK(node_status(s, "A").kind == NodeStatus::Kind::Idle);
    CHECK(s.holders.empty());
    CHECK(s.pools.empty());
}

TEST_CASE("propositions cover statuses, exceptions and termination") {
    Model m = parse_model(R"({
      "root": "Main",
      "activities": [{
        "name": "Main",
        "nodes": [
          {"id": "Init", "kind": "initial"},
          {"id": "A", "kind": "action"}
        ],
        "edges": [{"source": "Init", "target": "A"}]
      }]
    })");
    ExecState s = initial_state(m);
    auto props = propositions(m, s);
    CHECK(std::count(props.begin(), props.end(), "executing(Init)") == 1);
    CHECK(std::count(props.begin(), props.end(), "idle(A)") == 1);

    ExecState done;  // root idle: terminated
    auto tprops = propositions(m, done);
    CHECK(std::count(tprops.begin(), tprops.end(), "terminated") == 1);

    ExecState exc;
    ActivityStatus ex;
    ex.kind = ActivityStatus::Kind::Exception;
    ex.exception = {TokenValue::of_int(1)};
    set_act_status(exc, "", ex);
    auto eprops = propositions(m, exc);
    bool found = false;
    for (const auto& p : eprops) found |= p.rfind("exception", 0) == 0;
    CHECK(found);
}

TEST_CASE("live instances follow state keys") {
    Model m = parse_model(R"({
      "root": "Main",
      "activities": [
        {"name": "Main", "nodes": [{"id": "c1", "kind": "call", "behavior": "Sub"}],
         "edges": []},
        {"name": "Sub", "apns": [{"id": "p", "direction": "in"}],
         "nodes": [{"id": "B", "kind": "action"}], "edges": []}
      ]
    })");
    ExecState s = initial_state(m);
    auto live = live_instances(m, s);
    CHECK(live.size() == 1);  // just the root

    ActivityStatus st;
    st.kind = ActivityStatus::Kind::Executing;
    set_act_status(s, "c1/", st);
    live = live_instances(m, s);
    CHECK(live.size() == 2);
    const Activity* sub = activity_of_instance(m, "c1/");
    REQUIRE(sub);
    CHECK(sub->name == "Sub");
    CHECK(activity_of_instance(m, "zz/") == nullptr);
}

}  // TEST_SUITE
