#include "asos/explorer.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace asos {

namespace {

// "terminated" / "exception" for final root states, "" otherwise.
std::string classify_root(const ExecState& s) {
    const ActivityStatus root = act_status(s, "");
    if (root.kind == ActivityStatus::Kind::Exception) return "exception";
    if (root.kind == ActivityStatus::Kind::Idle) return "terminated";
    return "";
}

struct Successors {
    std::vector<Transition> steps;
    std::vector<std::string> diagnostics;
};

Successors successors_of(const Model& m, const ExecState& s, const SemanticsProfile& p,
                         const ExploreOptions& opt) {
    Successors out;
    if (opt.mode == ExploreMode::Complete) {
        out.steps = raw_steps(m, s, p);
        return out;
    }
    TransitionOptions topt;
    topt.max_micro_depth = opt.max_micro_depth;
    TransitionResult res = transitions(m, s, p, topt);
    out.steps = std::move(res.transitions);
    out.diagnostics = std::move(res.diagnostics);
    return out;
}

}  // namespace

KripkeStructure explore(const Model& m, const SemanticsProfile& p, const ExploreOptions& opt) {
    std::vector<ExecState> states;
    std::vector<std::string> fps;
    std::map<std::string, int> index;
    std::vector<std::tuple<int, std::string, int>> edges;
    std::set<std::string> diagnostics;
    bool truncated = false;

    ExecState init = initial_state(m);
    states.push_back(init);
    fps.push_back(fingerprint(init));
    index.emplace(fps[0], 0);

    std::vector<int> frontier{0};
    int jobs = std::max(1, opt.jobs);

    while (!frontier.empty()) {
        // Expand a whole level in parallel; results land in per-state slots
        // so the merge below is independent of thread scheduling.
        std::vector<Successors> results(frontier.size());
        auto worker = [&](size_t begin, size_t end) {
            for (size_t i = begin; i < end; ++i)
                results[i] = successors_of(m, states[frontier[i]], p, opt);
        };
        if (jobs == 1 || frontier.size() == 1) {
            worker(0, frontier.size());
        } else {
            size_t n = frontier.size();
            size_t workers = std::min<size_t>(jobs, n);
            std::vector<std::thread> pool;
            for (size_t w = 0; w < workers; ++w) {
                size_t begin = n * w / workers;
                size_t end = n * (w + 1) / workers;
                pool.emplace_back(worker, begin, end);
            }
            for (auto& t : pool) t.join();
        }

        std::vector<int> next_frontier;
        for (size_t i = 0; i < frontier.size(); ++i) {
            int src = frontier[i];
            for (const auto& d : results[i].diagnostics) diagnostics.insert(d);
            for (auto& tr : results[i].steps) {
                std::string fp = fingerprint(tr.target);
                auto it = index.find(fp);
                int dst;
                if (it != index.end()) {
                    dst = it->second;
                } else {
                    if (opt.max_states > 0 && static_cast<int>(states.size()) >= opt.max_states) {
                        truncated = true;
                        continue;
                    }
                    dst = static_cast<int>(states.size());
                    index.emplace(fp, dst);
                    states.push_back(std::move(tr.target));
                    fps.push_back(std::move(fp));
                    next_frontier.push_back(dst);
                }
                edges.emplace_back(src, tr.label, dst);
            }
        }
        frontier = std::move(next_frontier);
    }

    if (opt.collapse_tau_self_loops) {
        edges.erase(std::remove_if(edges.begin(), edges.end(),
                                   [](const auto& e) {
                                       return std::get<0>(e) == std::get<2>(e) &&
                                              std::get<1>(e) == "tau";
                                   }),
                    edges.end());
    }

    // Renumber by fingerprint so the output is canonical.
    std::vector<int> order(states.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fps[a] < fps[b]; });
    std::vector<int> new_id(states.size());
    for (size_t pos = 0; pos < order.size(); ++pos) new_id[order[pos]] = static_cast<int>(pos);

    std::set<int> has_successor;
    std::set<std::tuple<int, std::string, int>> edge_set;
    for (const auto& [src, label, dst] : edges) {
        edge_set.emplace(new_id[src], label, new_id[dst]);
        has_successor.insert(new_id[src]);
    }

    KripkeStructure k;
    k.truncated = truncated;
    k.initial = new_id[0];
    k.diagnostics.assign(diagnostics.begin(), diagnostics.end());
    k.states.resize(states.size());
    k.exec_states.resize(states.size());
    for (size_t old = 0; old < states.size(); ++old) {
        int id = new_id[old];
        KripkeState ks;
        ks.id = id;
        ks.fingerprint = fps[old];
        ks.props = propositions(m, states[old]);
        // A stuck state that neither finished nor raised is a deadlock;
        // under truncation stuckness may be an artifact, so skip the call.
        if (!truncated && !has_successor.count(id) && classify_root(states[old]).empty()) {
            ks.props.push_back("deadlock");
            std::sort(ks.props.begin(), ks.props.end());
        }
        k.states[id] = std::move(ks);
        k.exec_states[id] = std::move(states[old]);
    }
    for (const auto& [src, label, dst] : edge_set) k.transitions.push_back({src, label, dst});
    return k;
}

std::string to_json(const KripkeStructure& k, int indent) {
    nlohmann::ordered_json j;
    j["states"] = nlohmann::ordered_json::array();
    for (const auto& st : k.states) {
        nlohmann::ordered_json js;
        js["id"] = st.id;
        js["fingerprint"] = st.fingerprint;
        js["props"] = st.props;
        j["states"].push_back(std::move(js));
    }
    j["transitions"] = nlohmann::ordered_json::array();
    for (const auto& e : k.transitions) {
        nlohmann::ordered_json je;
        je["src"] = e.src;
        je["label"] = e.label;
        je["dst"] = e.dst;
        j["transitions"].push_back(std::move(je));
    }
    j["initial"] = k.initial;
    j["truncated"] = k.truncated;
    if (!k.diagnostics.empty()) j["diagnostics"] = k.diagnostics;
    return j.dump(indent) + "\n";
}

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

}  // namespace

std::string to_dot(const KripkeStructure& k) {
    std::ostringstream os;
    os << "digraph kripke {\n  rankdir=LR;\n  node [shape=ellipse];\n";
    os << "  __init [shape=point];\n";
    for (const auto& st : k.states) {
        os << "  s" << st.id << " [label=\"" << st.id;
        for (const auto& p : st.props) os << "\\n" << dot_escape(p);
        os << "\"];\n";
    }
    os << "  __init -> s" << k.initial << ";\n";
    for (const auto& e : k.transitions)
        os << "  s" << e.src << " -> s" << e.dst << " [label=\"" << dot_escape(e.label)
           << "\"];\n";
    os << "}\n";
    return os.str();
}

Trace random_trace(const Model& m, const SemanticsProfile& p, std::uint64_t seed, int max_steps) {
    std::mt19937_64 rng(seed);
    Trace trace;
    ExecState cur = initial_state(m);
    for (int i = 0; i < max_steps; ++i) {
        std::string cls = classify_root(cur);
        if (!cls.empty()) {
            trace.terminal = cls;
            return trace;
        }
        TransitionResult res = transitions(m, cur, p);
        if (res.transitions.empty()) {
            trace.terminal = "deadlock";
            return trace;
        }
        std::uniform_int_distribution<size_t> pick(0, res.transitions.size() - 1);
        Transition& t = res.transitions[pick(rng)];
        trace.steps.push_back({t.label, fingerprint(t.target)});
        cur = std::move(t.target);
    }
    std::string cls = classify_root(cur);
    trace.terminal = cls.empty() ? "cutoff" : cls;
    return trace;
}

}  // namespace asos
