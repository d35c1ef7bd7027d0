#ifndef ASOS_GUARD_HPP
#define ASOS_GUARD_HPP

#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "asos/token.hpp"

namespace asos {

// Boolean expression tree shared by edge guards and join specifications.
//
// Edge guards combine comparisons of the candidate token (spelled `x`)
// against literal values:  x == 3 && !(x > 10) || x == "stop"
// The special guard `else` passes exactly when no sibling guard passes and
// is only legal as the entire guard text.
//
// Join specifications combine input pin names, where a name is true when
// that pin currently holds at least one token:  a && (b || c)
struct GuardExpr;
using GuardPtr = std::shared_ptr<const GuardExpr>;

struct GuardExpr {
    enum class Kind { True, False, Else, PinRef, Compare, Not, And, Or };
    enum class Rel { Eq, Ne, Lt, Le, Gt, Ge };

    Kind kind = Kind::True;
    Rel rel = Rel::Eq;    // Compare only
    TokenValue constant;  // Compare only
    std::string pin;      // PinRef only
    GuardPtr lhs;         // Not / And / Or
    GuardPtr rhs;         // And / Or
};

class GuardParseError : public std::runtime_error {
  public:
    explicit GuardParseError(const std::string& what) : std::runtime_error(what) {}
};

// Parses an edge guard. Accepts `true`, `false`, `else`, and boolean
// combinations (&&, ||, !, parentheses) of `x REL literal` comparisons.
GuardPtr parse_guard(const std::string& text);

// Parses a join specification over input pin names.
GuardPtr parse_join_spec(const std::string& text);

// True when the guard is the distinguished `else` guard.
bool is_else_guard(const GuardPtr& g);

// Evaluates an edge guard on one token. Comparisons between values of
// different types evaluate to false (!= to true) rather than failing, so
// evaluation is total; the validator reports static type mismatches.
// `else` must be resolved by the caller and never reaches evaluation.
bool eval_guard(const GuardPtr& g, const TokenValue& x);

// Evaluates a join specification given the set of input pins that
// currently hold at least one token.
bool eval_join_spec(const GuardPtr& g, const std::set<std::string>& filled);

// Collects every literal a guard compares against, for static type checks.
void collect_compare_constants(const GuardPtr& g, std::vector<TokenValue>& out);

// Collects every pin name referenced by a join specification.
void collect_pin_refs(const GuardPtr& g, std::vector<std::string>& out);

std::string to_string(const GuardPtr& g);

}  // namespace asos

#endif
