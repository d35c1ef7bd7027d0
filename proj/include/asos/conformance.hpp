#ifndef ASOS_CONFORMANCE_HPP
#define ASOS_CONFORMANCE_HPP

#include <string>
#include <vector>

#include "asos/explorer.hpp"

namespace asos {

// Strong: labels match exactly, step for step. Weak: internal labels (tau,
// tick, exeTime) are invisible — the right side may pad any answer with
// internal steps and answers internal steps by standing still.
enum class MatchMode { Strong, Weak };

struct SimulationOptions {
    MatchMode mode = MatchMode::Strong;
};

struct SimulationResult {
    bool holds = false;
    // Set when the comparison is meaningless as asked: under strong
    // matching the two alphabets differ by internal labels only, which
    // weak matching would hide.
    bool alphabet_error = false;
    std::string message;
    // One losing play of the simulation game: a label sequence the left
    // side can perform that the right side cannot mirror.
    std::vector<std::string> counterexample;
};

bool is_internal_label(const std::string& label);

// Checks that `right` simulates `left`: every step the left structure can
// take from its initial state, the right structure can mirror, forever.
SimulationResult check_simulation(const KripkeStructure& left, const KripkeStructure& right,
                                  const SimulationOptions& opt = {});

}  // namespace asos

#endif
