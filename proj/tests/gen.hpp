#ifndef ASOS_TESTS_GEN_HPP
#define ASOS_TESTS_GEN_HPP

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "asos/model.hpp"
#include "asos/parser.hpp"
#include "asos/validate.hpp"

#include "json.hpp"

// Seeded generator of small control-only models: a single activity wired as
// a DAG of bare control edges, which keeps every state space finite (each
// initial node emits one token, forks amplify only forward). Draws that
// cannot be completed into a valid model yield no document; callers retry
// with the next seed.
namespace testgen {

inline std::string random_model_doc(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    auto chance = [&rng](double p) {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    };

    const int n = pick(2, 6);
    std::vector<std::string> kind(n);
    kind[0] = "initial";
    int first_free = 1;
    if (n >= 3 && chance(0.3)) {
        kind[1] = "initial";
        first_free = 2;
    }
    for (int i = first_free; i < n - 1; ++i) {
        int r = pick(0, 99);
        if (r < 35)
            kind[i] = "action";
        else if (r < 50)
            kind[i] = "fork";
        else if (r < 60)
            kind[i] = "join";
        else if (r < 70)
            kind[i] = "merge";
        else if (r < 85)
            kind[i] = "decision";
        else if (r < 93)
            kind[i] = "flow_final";
        else
            kind[i] = "activity_final";
    }
    if (n - 1 >= first_free) {
        // The last node consumes; switch nodes there could never route on.
        int r = pick(0, 99);
        kind[n - 1] = r < 50 ? "action" : (r < 75 ? "flow_final" : "activity_final");
    }

    std::vector<int> outdeg(n, 0);
    auto can_source = [&](int j) {
        if (kind[j] == "flow_final" || kind[j] == "activity_final") return false;
        return outdeg[j] < (kind[j] == "fork" ? 2 : 3);
    };
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        if (kind[i] == "initial") continue;
        const int want = 1 + (chance(0.3) ? 1 : 0);
        for (int k = 0; k < want; ++k) {
            std::vector<int> cands;
            for (int j = 0; j < i; ++j)
                if (can_source(j)) cands.push_back(j);
            if (cands.empty()) {
                if (k == 0) return {};
                break;
            }
            const int j = cands[static_cast<std::size_t>(pick(0, int(cands.size()) - 1))];
            edges.emplace_back(j, i);
            ++outdeg[j];
        }
    }
    for (int i = 0; i < n; ++i) {
        const bool needs_out = kind[i] == "initial" || kind[i] == "fork" ||
                               kind[i] == "join" || kind[i] == "merge" ||
                               kind[i] == "decision";
        if (!needs_out || outdeg[i] > 0) continue;
        std::vector<int> cands;
        for (int j = i + 1; j < n; ++j)
            if (kind[j] != "initial") cands.push_back(j);
        if (cands.empty()) return {};
        const int j = cands[static_cast<std::size_t>(pick(0, int(cands.size()) - 1))];
        edges.emplace_back(i, j);
        ++outdeg[i];
    }

    nlohmann::json act;
    act["name"] = "Main";
    act["nodes"] = nlohmann::json::array();
    for (int i = 0; i < n; ++i)
        act["nodes"].push_back({{"id", "n" + std::to_string(i)}, {"kind", kind[i]}});
    act["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : edges)
        act["edges"].push_back(
            {{"source", "n" + std::to_string(a)}, {"target", "n" + std::to_string(b)}});
    nlohmann::json doc;
    doc["root"] = "Main";
    doc["activities"] = nlohmann::json::array({act});
    return doc.dump();
}

inline std::optional<asos::Model> try_model(std::uint64_t seed) {
    const std::string doc = random_model_doc(seed);
    if (doc.empty()) return std::nullopt;
    try {
        asos::Model m = asos::parse_model(doc);
        if (!asos::validate(m).ok()) return std::nullopt;
        return m;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

// Collects `count` valid models starting at `seed0`, skipping failed draws.
inline std::vector<asos::Model> corpus(std::size_t count, std::uint64_t seed0) {
    std::vector<asos::Model> out;
    const std::uint64_t limit = seed0 + 200 * count + 1000;
    for (std::uint64_t s = seed0; out.size() < count && s < limit; ++s)
        if (auto m = try_model(s)) out.push_back(std::move(*m));
    return out;
}

}  // namespace testgen

#endif
