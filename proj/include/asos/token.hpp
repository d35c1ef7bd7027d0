#ifndef ASOS_TOKEN_HPP
#define ASOS_TOKEN_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace asos {

// A token value held by a pin, APN or event pool. Control tokens carry no
// data; event tokens carry the signal name plus the packed send data.
class TokenValue {
  public:
    enum class Kind { Control, Null, Int, Bool, Str, Event };

    TokenValue() : kind_(Kind::Control) {}

    static TokenValue control() { return TokenValue(); }
    static TokenValue null() { TokenValue t; t.kind_ = Kind::Null; return t; }
    static TokenValue of_int(std::int64_t v);
    static TokenValue of_bool(bool v);
    static TokenValue of_string(std::string v);
    static TokenValue event(std::string name, std::vector<TokenValue> args);

    Kind kind() const { return kind_; }
    bool is_control() const { return kind_ == Kind::Control; }
    std::int64_t int_value() const { return int_; }
    bool bool_value() const { return bool_; }
    const std::string& str_value() const { return str_; }
    const std::string& event_name() const { return str_; }
    const std::vector<TokenValue>& event_args() const { return args_; }

    // Name of the value's type as used by guards, pin types and
    // exception-handler matching.
    std::string type_name() const;

    // Canonical text form; drives fingerprints and total ordering.
    std::string canonical() const;

    bool operator==(const TokenValue& o) const { return canonical() == o.canonical(); }
    bool operator<(const TokenValue& o) const { return canonical() < o.canonical(); }

  private:
    Kind kind_;
    std::int64_t int_ = 0;
    bool bool_ = false;
    std::string str_;               // Str payload or event name
    std::vector<TokenValue> args_;  // Event payload
};

using TokenSeq = std::vector<TokenValue>;

std::string to_string(const TokenSeq& seq);

// Removes the first occurrence of each token in `taken` from `seq`
// (the sequence difference used by the consumption updates).
TokenSeq seq_subtract(const TokenSeq& seq, const TokenSeq& taken);

}  // namespace asos

#endif
