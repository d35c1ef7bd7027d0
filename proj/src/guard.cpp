#include "asos/guard.hpp"

#include <cctype>
#include <sstream>

namespace asos {
namespace {

GuardPtr make(GuardExpr e) { return std::make_shared<const GuardExpr>(std::move(e)); }

GuardPtr make_leaf(GuardExpr::Kind k) {
    GuardExpr e;
    e.kind = k;
    return make(std::move(e));
}

struct Token {
    enum class Type { Ident, Int, Str, Op, End };
    Type type = Type::End;
    std::string text;    // Ident / Op spelling, Str payload
    std::int64_t num = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        cur_ = Token{};
        if (pos_ >= text_.size()) {
            cur_.type = Token::Type::End;
            return;
        }
        char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                    text_[pos_] == '.')) {
                ++pos_;
            }
            cur_.type = Token::Type::Ident;
            cur_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            std::size_t start = pos_;
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            cur_.type = Token::Type::Int;
            cur_.num = std::stoll(text_.substr(start, pos_ - start));
            return;
        }
        if (c == '"') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
                out += text_[pos_++];
            }
            if (pos_ >= text_.size()) throw GuardParseError("unterminated string literal");
            ++pos_;
            cur_.type = Token::Type::Str;
            cur_.text = std::move(out);
            return;
        }
        static const char* ops[] = {"&&", "||", "==", "!=", "<=", ">=", "!", "<", ">", "(", ")"};
        for (const char* op : ops) {
            std::size_t n = std::char_traits<char>::length(op);
            if (text_.compare(pos_, n, op) == 0) {
                cur_.type = Token::Type::Op;
                cur_.text = op;
                pos_ += n;
                return;
            }
        }
        throw GuardParseError(std::string("unexpected character '") + c + "' in guard");
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    Token cur_;
};

// atoms are token comparisons for edge guards and pin names for join specs
enum class AtomMode { Guard, JoinSpec };

class Parser {
  public:
    Parser(const std::string& text, AtomMode mode) : lex_(text), mode_(mode) {}

    GuardPtr parse() {
        GuardPtr e = parse_or();
        if (lex_.peek().type != Token::Type::End)
            throw GuardParseError("trailing input after guard expression");
        return e;
    }

  private:
    GuardPtr parse_or() {
        GuardPtr left = parse_and();
        while (is_op("||")) {
            lex_.take();
            GuardExpr e;
            e.kind = GuardExpr::Kind::Or;
            e.lhs = left;
            e.rhs = parse_and();
            left = make(std::move(e));
        }
        return left;
    }

    GuardPtr parse_and() {
        GuardPtr left = parse_unary();
        while (is_op("&&")) {
            lex_.take();
            GuardExpr e;
            e.kind = GuardExpr::Kind::And;
            e.lhs = left;
            e.rhs = parse_unary();
            left = make(std::move(e));
        }
        return left;
    }

    GuardPtr parse_unary() {
        if (is_op("!")) {
            lex_.take();
            GuardExpr e;
            e.kind = GuardExpr::Kind::Not;
            e.lhs = parse_unary();
            return make(std::move(e));
        }
        return parse_primary();
    }

    GuardPtr parse_primary() {
        if (is_op("(")) {
            lex_.take();
            GuardPtr e = parse_or();
            if (!is_op(")")) throw GuardParseError("expected ')'");
            lex_.take();
            return e;
        }
        Token t = lex_.take();
        if (t.type != Token::Type::Ident)
            throw GuardParseError("expected identifier, 'true', 'else' or '('");
        if (t.text == "true") return make_leaf(GuardExpr::Kind::True);
        if (t.text == "false") return make_leaf(GuardExpr::Kind::False);
        if (t.text == "else") {
            if (mode_ != AtomMode::Guard) throw GuardParseError("'else' is not a join specification");
            return make_leaf(GuardExpr::Kind::Else);
        }
        if (mode_ == AtomMode::JoinSpec) {
            GuardExpr e;
            e.kind = GuardExpr::Kind::PinRef;
            e.pin = t.text;
            return make(std::move(e));
        }
        if (t.text != "x")
            throw GuardParseError("guards may only test the candidate token 'x', got '" + t.text +
                                  "'");
        return parse_comparison();
    }

    GuardPtr parse_comparison() {
        Token op = lex_.take();
        if (op.type != Token::Type::Op) throw GuardParseError("expected comparison operator after 'x'");
        GuardExpr e;
        e.kind = GuardExpr::Kind::Compare;
        if (op.text == "==") e.rel = GuardExpr::Rel::Eq;
        else if (op.text == "!=") e.rel = GuardExpr::Rel::Ne;
        else if (op.text == "<") e.rel = GuardExpr::Rel::Lt;
        else if (op.text == "<=") e.rel = GuardExpr::Rel::Le;
        else if (op.text == ">") e.rel = GuardExpr::Rel::Gt;
        else if (op.text == ">=") e.rel = GuardExpr::Rel::Ge;
        else throw GuardParseError("unknown comparison operator '" + op.text + "'");

        Token lit = lex_.take();
        switch (lit.type) {
            case Token::Type::Int: e.constant = TokenValue::of_int(lit.num); break;
            case Token::Type::Str: e.constant = TokenValue::of_string(lit.text); break;
            case Token::Type::Ident:
                if (lit.text == "true") e.constant = TokenValue::of_bool(true);
                else if (lit.text == "false") e.constant = TokenValue::of_bool(false);
                else if (lit.text == "null") e.constant = TokenValue::null();
                else throw GuardParseError("expected literal, got '" + lit.text + "'");
                break;
            default: throw GuardParseError("expected literal after comparison operator");
        }
        return make(std::move(e));
    }

    bool is_op(const char* op) const {
        return lex_.peek().type == Token::Type::Op && lex_.peek().text == op;
    }

    Lexer lex_;
    AtomMode mode_;
};

bool contains_else(const GuardPtr& g) {
    if (!g) return false;
    if (g->kind == GuardExpr::Kind::Else) return true;
    return contains_else(g->lhs) || contains_else(g->rhs);
}

// Total comparison used by guard evaluation: values of different types are
// never equal and never ordered.
bool compare(const TokenValue& x, GuardExpr::Rel rel, const TokenValue& c) {
    bool same_type = x.kind() == c.kind();
    switch (rel) {
        case GuardExpr::Rel::Eq: return same_type && x == c;
        case GuardExpr::Rel::Ne: return !(same_type && x == c);
        default: break;
    }
    if (!same_type) return false;
    bool lt = false, eq = false;
    switch (x.kind()) {
        case TokenValue::Kind::Int:
            lt = x.int_value() < c.int_value();
            eq = x.int_value() == c.int_value();
            break;
        case TokenValue::Kind::Str:
            lt = x.str_value() < c.str_value();
            eq = x.str_value() == c.str_value();
            break;
        default: return false;  // control/null/bool/event values are unordered
    }
    switch (rel) {
        case GuardExpr::Rel::Lt: return lt;
        case GuardExpr::Rel::Le: return lt || eq;
        case GuardExpr::Rel::Gt: return !lt && !eq;
        case GuardExpr::Rel::Ge: return !lt;
        default: return false;
    }
}

}  // namespace

GuardPtr parse_guard(const std::string& text) {
    GuardPtr g = Parser(text, AtomMode::Guard).parse();
    if (contains_else(g) && g->kind != GuardExpr::Kind::Else)
        throw GuardParseError("'else' must be the entire guard");
    return g;
}

GuardPtr parse_join_spec(const std::string& text) {
    return Parser(text, AtomMode::JoinSpec).parse();
}

bool is_else_guard(const GuardPtr& g) { return g && g->kind == GuardExpr::Kind::Else; }

bool eval_guard(const GuardPtr& g, const TokenValue& x) {
    switch (g->kind) {
        case GuardExpr::Kind::True: return true;
        case GuardExpr::Kind::False: return false;
        case GuardExpr::Kind::Else: throw std::logic_error("'else' guard reached evaluation");
        case GuardExpr::Kind::PinRef: throw std::logic_error("pin reference in edge guard");
        case GuardExpr::Kind::Compare: return compare(x, g->rel, g->constant);
        case GuardExpr::Kind::Not: return !eval_guard(g->lhs, x);
        case GuardExpr::Kind::And: return eval_guard(g->lhs, x) && eval_guard(g->rhs, x);
        case GuardExpr::Kind::Or: return eval_guard(g->lhs, x) || eval_guard(g->rhs, x);
    }
    return false;
}

bool eval_join_spec(const GuardPtr& g, const std::set<std::string>& filled) {
    switch (g->kind) {
        case GuardExpr::Kind::True: return true;
        case GuardExpr::Kind::False: return false;
        case GuardExpr::Kind::PinRef: return filled.count(g->pin) > 0;
        case GuardExpr::Kind::Not: return !eval_join_spec(g->lhs, filled);
        case GuardExpr::Kind::And:
            return eval_join_spec(g->lhs, filled) && eval_join_spec(g->rhs, filled);
        case GuardExpr::Kind::Or:
            return eval_join_spec(g->lhs, filled) || eval_join_spec(g->rhs, filled);
        default: throw std::logic_error("edge-guard construct in join specification");
    }
}

void collect_compare_constants(const GuardPtr& g, std::vector<TokenValue>& out) {
    if (!g) return;
    if (g->kind == GuardExpr::Kind::Compare) out.push_back(g->constant);
    collect_compare_constants(g->lhs, out);
    collect_compare_constants(g->rhs, out);
}

void collect_pin_refs(const GuardPtr& g, std::vector<std::string>& out) {
    if (!g) return;
    if (g->kind == GuardExpr::Kind::PinRef) out.push_back(g->pin);
    collect_pin_refs(g->lhs, out);
    collect_pin_refs(g->rhs, out);
}

namespace {

std::string literal_text(const TokenValue& v) {
    switch (v.kind()) {
        case TokenValue::Kind::Int: return std::to_string(v.int_value());
        case TokenValue::Kind::Bool: return v.bool_value() ? "true" : "false";
        case TokenValue::Kind::Null: return "null";
        case TokenValue::Kind::Str: {
            std::string out = "\"";
            for (char c : v.str_value()) {
                if (c == '"' || c == '\\') out += '\\';
                out += c;
            }
            out += '"';
            return out;
        }
        default: return v.canonical();
    }
}

void print(const GuardPtr& g, std::ostringstream& os) {
    switch (g->kind) {
        case GuardExpr::Kind::True: os << "true"; break;
        case GuardExpr::Kind::False: os << "false"; break;
        case GuardExpr::Kind::Else: os << "else"; break;
        case GuardExpr::Kind::PinRef: os << g->pin; break;
        case GuardExpr::Kind::Compare: {
            static const char* rels[] = {"==", "!=", "<", "<=", ">", ">="};
            os << "x " << rels[static_cast<int>(g->rel)] << ' ' << literal_text(g->constant);
            break;
        }
        case GuardExpr::Kind::Not:
            os << "!(";
            print(g->lhs, os);
            os << ')';
            break;
        case GuardExpr::Kind::And:
        case GuardExpr::Kind::Or:
            os << '(';
            print(g->lhs, os);
            os << (g->kind == GuardExpr::Kind::And ? " && " : " || ");
            print(g->rhs, os);
            os << ')';
            break;
    }
}

}  // namespace

std::string to_string(const GuardPtr& g) {
    std::ostringstream os;
    print(g, os);
    return os.str();
}

}  // namespace asos
