#ifndef ASOS_EXPLORER_HPP
#define ASOS_EXPLORER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "asos/model.hpp"
#include "asos/profile.hpp"
#include "asos/semantics.hpp"
#include "asos/state.hpp"

namespace asos {

// Reduced: one graph node per visible state, edges are observable
// transitions. Complete: one graph node per raw state, edges are individual
// small and labelled steps.
enum class ExploreMode { Reduced, Complete };

struct ExploreOptions {
    ExploreMode mode = ExploreMode::Reduced;
    int max_states = 0;  // 0: unlimited
    int jobs = 1;        // worker threads per exploration level
    int max_micro_depth = 100000;
    bool collapse_tau_self_loops = false;  // drop tau edges that stay in place
};

struct KripkeState {
    int id = 0;
    std::string fingerprint;
    std::vector<std::string> props;
};

struct KripkeEdge {
    int src = 0;
    std::string label;
    int dst = 0;
};

// State ids are assigned by fingerprint order, so two explorations of the
// same model and profile produce identical structures regardless of the
// worker count.
struct KripkeStructure {
    std::vector<KripkeState> states;
    std::vector<KripkeEdge> transitions;  // sorted by (src, label, dst)
    int initial = 0;
    bool truncated = false;
    std::vector<std::string> diagnostics;
    std::vector<ExecState> exec_states;  // parallel to `states`
};

KripkeStructure explore(const Model& m, const SemanticsProfile& p, const ExploreOptions& opt = {});

std::string to_json(const KripkeStructure& k, int indent = 2);
std::string to_dot(const KripkeStructure& k);

struct TraceStep {
    std::string label;
    std::string fingerprint;
};

// How a run ended: "terminated" (the root instance finished), "exception"
// (the root instance raised), "deadlock" (no step applicable), or "cutoff"
// (step budget exhausted).
struct Trace {
    std::vector<TraceStep> steps;
    std::string terminal;
};

// One random walk through the reduced transition relation, choosing
// uniformly among the applicable transitions.
Trace random_trace(const Model& m, const SemanticsProfile& p, std::uint64_t seed,
                   int max_steps = 200);

}  // namespace asos

#endif
