#include "asos/token.hpp"

#include <sstream>

namespace asos {

TokenValue TokenValue::of_int(std::int64_t v) {
    TokenValue t;
    t.kind_ = Kind::Int;
    t.int_ = v;
    return t;
}

TokenValue TokenValue::of_bool(bool v) {
    TokenValue t;
    t.kind_ = Kind::Bool;
    t.bool_ = v;
    return t;
}

TokenValue TokenValue::of_string(std::string v) {
    TokenValue t;
    t.kind_ = Kind::Str;
    t.str_ = std::move(v);
    return t;
}

TokenValue TokenValue::event(std::string name, std::vector<TokenValue> args) {
    TokenValue t;
    t.kind_ = Kind::Event;
    t.str_ = std::move(name);
    t.args_ = std::move(args);
    return t;
}

std::string TokenValue::type_name() const {
    switch (kind_) {
        case Kind::Control: return "ControlToken";
        case Kind::Null: return "Null";
        case Kind::Int: return "Int";
        case Kind::Bool: return "Bool";
        case Kind::Str: return "String";
        case Kind::Event: return "Event";
    }
    return "?";
}

static void escape_into(std::ostringstream& os, const std::string& s) {
    for (char c : s) {
        if (c == '\\' || c == '"' || c == ',' || c == '[' || c == ']') os << '\\';
        os << c;
    }
}

std::string TokenValue::canonical() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Control: os << "CT"; break;
        case Kind::Null: os << "null"; break;
        case Kind::Int: os << "i:" << int_; break;
        case Kind::Bool: os << "b:" << (bool_ ? 1 : 0); break;
        case Kind::Str:
            os << "s:\"";
            escape_into(os, str_);
            os << '"';
            break;
        case Kind::Event: {
            os << "e:";
            escape_into(os, str_);
            os << '[';
            bool first = true;
            for (const auto& a : args_) {
                if (!first) os << ',';
                first = false;
                os << a.canonical();
            }
            os << ']';
            break;
        }
    }
    return os.str();
}

std::string to_string(const TokenSeq& seq) {
    std::string out = "[";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ',';
        out += seq[i].canonical();
    }
    out += ']';
    return out;
}

TokenSeq seq_subtract(const TokenSeq& seq, const TokenSeq& taken) {
    TokenSeq rest = seq;
    for (const auto& t : taken) {
        for (auto it = rest.begin(); it != rest.end(); ++it) {
            if (*it == t) {
                rest.erase(it);
                break;
            }
        }
    }
    return rest;
}

}  // namespace asos
