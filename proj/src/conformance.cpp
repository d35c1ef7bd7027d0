#include "asos/conformance.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <sstream>

namespace asos {

bool is_internal_label(const std::string& label) {
    return label == "tau" || label == "tick" || label.rfind("exeTime(", 0) == 0;
}

namespace {

struct Lts {
    int n = 0;
    int initial = 0;
    // per state: label -> sorted successor list
    std::vector<std::map<std::string, std::vector<int>>> out;
    std::vector<std::vector<int>> tau_reach;  // reflexive-transitive internal closure

    explicit Lts(const KripkeStructure& k) {
        n = static_cast<int>(k.states.size());
        initial = k.initial;
        out.resize(n);
        for (const auto& e : k.transitions) out[e.src][e.label].push_back(e.dst);
        for (auto& m : out)
            for (auto& [l, v] : m) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            }
    }

    void build_tau_closure() {
        tau_reach.assign(n, {});
        for (int s = 0; s < n; ++s) {
            std::vector<char> seen(n, 0);
            std::deque<int> q{s};
            seen[s] = 1;
            while (!q.empty()) {
                int cur = q.front();
                q.pop_front();
                tau_reach[s].push_back(cur);
                for (const auto& [l, succs] : out[cur]) {
                    if (!is_internal_label(l)) continue;
                    for (int t : succs)
                        if (!seen[t]) {
                            seen[t] = 1;
                            q.push_back(t);
                        }
                }
            }
            std::sort(tau_reach[s].begin(), tau_reach[s].end());
        }
    }

    // States reachable via internal*, label, internal* (weak) or via the
    // label alone (strong).
    std::vector<int> matches(int s, const std::string& label, bool weak) const {
        std::vector<int> result;
        if (!weak) {
            auto it = out[s].find(label);
            if (it != out[s].end()) result = it->second;
            return result;
        }
        std::set<int> acc;
        for (int x : tau_reach[s]) {
            auto it = out[x].find(label);
            if (it == out[x].end()) continue;
            for (int y : it->second) acc.insert(tau_reach[y].begin(), tau_reach[y].end());
        }
        return {acc.begin(), acc.end()};
    }
};

std::set<std::string> alphabet(const KripkeStructure& k) {
    std::set<std::string> a;
    for (const auto& e : k.transitions) a.insert(e.label);
    return a;
}

}  // namespace

SimulationResult check_simulation(const KripkeStructure& left, const KripkeStructure& right,
                                  const SimulationOptions& opt) {
    SimulationResult res;
    bool weak = opt.mode == MatchMode::Weak;

    if (!weak) {
        // Alphabets differing only by internal labels signal a strong
        // comparison of structures meant to be compared weakly.
        std::set<std::string> la = alphabet(left), ra = alphabet(right);
        std::vector<std::string> diff;
        std::set_symmetric_difference(la.begin(), la.end(), ra.begin(), ra.end(),
                                      std::back_inserter(diff));
        if (!diff.empty() &&
            std::all_of(diff.begin(), diff.end(), [](const std::string& l) {
                return is_internal_label(l);
            })) {
            res.alphabet_error = true;
            std::ostringstream os;
            os << "alphabets differ only by internal labels (";
            for (size_t i = 0; i < diff.size(); ++i) os << (i ? ", " : "") << diff[i];
            os << "); use weak matching to hide them";
            res.message = os.str();
            return res;
        }
    }

    Lts l(left), r(right);
    if (weak) {
        l.build_tau_closure();
        r.build_tau_closure();
    }
    if (l.n == 0 || r.n == 0) {
        res.holds = l.n == 0;
        return res;
    }

    // Greatest fixpoint: start from everything, remove pairs the right
    // side cannot defend; record the removal round for play extraction.
    std::vector<std::vector<int>> rank(l.n, std::vector<int>(r.n, 0));
    bool changed = true;
    int round = 0;
    while (changed) {
        changed = false;
        ++round;
        for (int c = 0; c < l.n; ++c) {
            for (int a = 0; a < r.n; ++a) {
                if (rank[c][a]) continue;
                bool defended = true;
                for (const auto& [label, succs] : l.out[c]) {
                    bool internal_move = weak && is_internal_label(label);
                    std::vector<int> answers =
                        internal_move ? r.tau_reach[a] : r.matches(a, label, weak);
                    for (int c2 : succs) {
                        bool ok = false;
                        for (int a2 : answers) ok |= rank[c2][a2] == 0;
                        if (!ok) {
                            defended = false;
                            break;
                        }
                    }
                    if (!defended) break;
                }
                if (!defended) {
                    rank[c][a] = round;
                    changed = true;
                }
            }
        }
    }

    if (rank[l.initial][r.initial] == 0) {
        res.holds = true;
        return res;
    }

    // Prefer a trace-level counterexample: breadth-first over pairs of a
    // left state and the set of right states that could have produced the
    // same label sequence.
    {
        using Node = std::pair<int, std::vector<int>>;
        std::vector<int> a0 = weak ? r.tau_reach[r.initial] : std::vector<int>{r.initial};
        std::map<Node, int> id;
        std::vector<Node> nodes{{l.initial, a0}};
        std::vector<std::pair<int, std::string>> parent{{-1, ""}};
        id.emplace(nodes[0], 0);
        std::deque<int> q{0};
        auto path_to = [&](int node, const std::string& last) {
            std::vector<std::string> labels{last};
            for (int cur = node; parent[cur].first >= 0; cur = parent[cur].first)
                labels.push_back(parent[cur].second);
            std::reverse(labels.begin(), labels.end());
            return labels;
        };
        while (!q.empty()) {
            int ni = q.front();
            q.pop_front();
            auto [c, aset] = nodes[ni];
            for (const auto& [label, succs] : l.out[c]) {
                bool internal_move = weak && is_internal_label(label);
                std::set<int> next_set;
                for (int a : aset) {
                    std::vector<int> ans =
                        internal_move ? r.tau_reach[a] : r.matches(a, label, weak);
                    next_set.insert(ans.begin(), ans.end());
                }
                if (next_set.empty()) {
                    res.counterexample = path_to(ni, label);
                    res.message = "label sequence not reproducible";
                    return res;
                }
                std::vector<int> nv(next_set.begin(), next_set.end());
                for (int c2 : succs) {
                    Node nn{c2, nv};
                    if (id.count(nn)) continue;
                    int nid = static_cast<int>(nodes.size());
                    id.emplace(nn, nid);
                    nodes.push_back(nn);
                    parent.emplace_back(ni, label);
                    q.push_back(nid);
                }
            }
        }
    }

    // Every trace is reproducible but the branching structure is not: walk
    // one losing play, always choosing the move whose best answer dies
    // soonest.
    int c = l.initial, a = r.initial;
    while (true) {
        int best_score = -1;
        std::string best_label;
        int best_c2 = -1, best_a2 = -1;
        for (const auto& [label, succs] : l.out[c]) {
            bool internal_move = weak && is_internal_label(label);
            std::vector<int> answers = internal_move ? r.tau_reach[a] : r.matches(a, label, weak);
            for (int c2 : succs) {
                int score = 0;  // max surviving-rank among answers; 0 = none survive
                bool defended = false;
                for (int a2 : answers) {
                    if (rank[c2][a2] == 0) {
                        defended = true;
                        break;
                    }
                    score = std::max(score, rank[c2][a2]);
                }
                if (defended) continue;
                if (best_score < 0 || score < best_score) {
                    best_score = score;
                    best_label = label;
                    best_c2 = c2;
                    // Adversary answer: the longest-surviving pair.
                    best_a2 = -1;
                    for (int a2 : answers)
                        if (best_a2 < 0 || rank[c2][a2] > rank[c2][best_a2]) best_a2 = a2;
                }
            }
        }
        if (best_score < 0) break;  // defensive: should not happen for a failing pair
        res.counterexample.push_back(best_label);
        if (best_a2 < 0) break;  // no answer at all: the play ends here
        c = best_c2;
        a = best_a2;
    }
    res.message = "branching structure not reproducible";
    return res;
}

}  // namespace asos
