#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdstab/core.hpp"

namespace sdstab {

// ---------------------------------------------------------------------------
// Expression DSL
//
// Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?
//   atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// '^' is right-associative and binds tighter than unary minus, so
// "-x1^2" parses as -(x1^2).
// ---------------------------------------------------------------------------

enum class BinOp { Add, Sub, Mul, Div, Pow };

enum class FnId { Sin, Cos, Tan, Exp, Ln, Sqrt, Abs, Tanh, Sign, Min, Max };

inline const char* fn_name(FnId f) {
    switch (f) {
        case FnId::Sin: return "sin";
        case FnId::Cos: return "cos";
        case FnId::Tan: return "tan";
        case FnId::Exp: return "exp";
        case FnId::Ln: return "ln";
        case FnId::Sqrt: return "sqrt";
        case FnId::Abs: return "abs";
        case FnId::Tanh: return "tanh";
        case FnId::Sign: return "sign";
        case FnId::Min: return "min";
        case FnId::Max: return "max";
    }
    return "?";
}

inline int fn_arity(FnId f) { return (f == FnId::Min || f == FnId::Max) ? 2 : 1; }

inline std::optional<FnId> fn_from_name(std::string_view s) {
    static const std::map<std::string_view, FnId> table = {
        {"sin", FnId::Sin},   {"cos", FnId::Cos}, {"tan", FnId::Tan},
        {"exp", FnId::Exp},   {"ln", FnId::Ln},   {"sqrt", FnId::Sqrt},
        {"abs", FnId::Abs},   {"tanh", FnId::Tanh}, {"sign", FnId::Sign},
        {"min", FnId::Min},   {"max", FnId::Max}};
    auto it = table.find(s);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable AST node. Safe to share across threads once built.
struct Expr {
    enum class Kind { Literal, Var, Neg, Binary, Call };

    Kind kind;
    double value = 0.0;           // Literal
    std::string name;             // Var
    BinOp op = BinOp::Add;        // Binary
    FnId fn = FnId::Sin;          // Call
    ExprPtr lhs, rhs;             // Neg uses lhs only
    std::vector<ExprPtr> args;    // Call

    static ExprPtr literal(double v) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Literal;
        e->value = v;
        return e;
    }
    static ExprPtr var(std::string n) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Var;
        e->name = std::move(n);
        return e;
    }
    static ExprPtr neg(ExprPtr c) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Neg;
        e->lhs = std::move(c);
        return e;
    }
    static ExprPtr binary(BinOp o, ExprPtr l, ExprPtr r) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Binary;
        e->op = o;
        e->lhs = std::move(l);
        e->rhs = std::move(r);
        return e;
    }
    static ExprPtr call(FnId f, std::vector<ExprPtr> as) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Call;
        e->fn = f;
        e->args = std::move(as);
        return e;
    }
};

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Literal: return a.value == b.value;
        case Expr::Kind::Var: return a.name == b.name;
        case Expr::Kind::Neg: return structurally_equal(*a.lhs, *b.lhs);
        case Expr::Kind::Binary:
            return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
        case Expr::Kind::Call:
            if (a.fn != b.fn || a.args.size() != b.args.size()) return false;
            for (size_t i = 0; i < a.args.size(); ++i)
                if (!structurally_equal(*a.args[i], *b.args[i])) return false;
            return true;
    }
    return false;
}

/// Parse failure report: byte offset plus 1-based line/column.
struct ParseDiagnostic {
    size_t offset = 0;
    int line = 1;
    int column = 1;
    std::string message;
    std::vector<std::string> expected;

    std::string format() const {
        std::string s = "line " + std::to_string(line) + ", col " + std::to_string(column) +
                        ": " + message;
        if (!expected.empty()) {
            s += " (expected ";
            for (size_t i = 0; i < expected.size(); ++i) {
                if (i) s += ", ";
                s += expected[i];
            }
            s += ")";
        }
        return s;
    }
};

struct ParseResult {
    ExprPtr expr;
    std::optional<ParseDiagnostic> diagnostic;
    bool ok() const { return expr != nullptr; }
};

class EvalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    TokKind kind;
    size_t offset;
    size_t length;
    double value = 0.0;       // Number
    std::string_view text;    // Ident
};

inline const char* tok_desc(TokKind k) {
    switch (k) {
        case TokKind::Number: return "number";
        case TokKind::Ident: return "identifier";
        case TokKind::Plus: return "'+'";
        case TokKind::Minus: return "'-'";
        case TokKind::Star: return "'*'";
        case TokKind::Slash: return "'/'";
        case TokKind::Caret: return "'^'";
        case TokKind::LParen: return "'('";
        case TokKind::RParen: return "')'";
        case TokKind::Comma: return "','";
        case TokKind::End: return "end of input";
    }
    return "?";
}

struct LineMap {
    std::string_view src;
    void locate(size_t offset, int& line, int& col) const {
        line = 1;
        col = 1;
        for (size_t i = 0; i < offset && i < src.size(); ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    }
};

class Parser {
  public:
    explicit Parser(std::string_view src) : src_(src), map_{src} {}

    ParseResult run() {
        if (!lex()) return {nullptr, diag_};
        pos_ = 0;
        depth_ = 0;
        ExprPtr e = parse_expr();
        if (!e) return {nullptr, diag_};
        if (cur().kind != TokKind::End) {
            fail(cur(), "unexpected token", {"'+'", "'-'", "'*'", "'/'", "'^'", "end of input"});
            return {nullptr, diag_};
        }
        return {e, std::nullopt};
    }

  private:
    static constexpr int kMaxDepth = 200;

    std::string_view src_;
    LineMap map_;
    std::vector<Token> toks_;
    size_t pos_ = 0;
    int depth_ = 0;
    std::optional<ParseDiagnostic> diag_;

    const Token& cur() const { return toks_[pos_]; }
    void advance() {
        if (pos_ + 1 < toks_.size()) ++pos_;
    }

    void fail_at(size_t offset, std::string msg, std::vector<std::string> expected) {
        if (diag_) return;  // keep the first (leftmost) diagnostic
        ParseDiagnostic d;
        d.offset = offset;
        map_.locate(offset, d.line, d.column);
        d.message = std::move(msg);
        d.expected = std::move(expected);
        diag_ = std::move(d);
    }
    void fail(const Token& t, std::string msg, std::vector<std::string> expected) {
        fail_at(t.offset, std::move(msg) + " " + tok_desc(t.kind), std::move(expected));
    }

    bool lex() {
        size_t i = 0;
        const size_t n = src_.size();
        while (i < n) {
            const char c = src_[i];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++i;
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
                size_t j = i;
                while (j < n && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                if (j < n && src_[j] == '.') {
                    ++j;
                    while (j < n && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
                }
                if (j < n && (src_[j] == 'e' || src_[j] == 'E')) {
                    size_t k = j + 1;
                    if (k < n && (src_[k] == '+' || src_[k] == '-')) ++k;
                    if (k < n && std::isdigit(static_cast<unsigned char>(src_[k]))) {
                        ++k;
                        while (k < n && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
                        j = k;
                    } else {
                        fail_at(j, "malformed exponent in numeric literal", {"digit"});
                        return false;
                    }
                }
                double v = 0;
                auto res = std::from_chars(src_.data() + i, src_.data() + j, v);
                if (res.ec != std::errc() || !std::isfinite(v)) {
                    fail_at(i, "numeric literal out of range", {});
                    return false;
                }
                toks_.push_back({TokKind::Number, i, j - i, v, {}});
                i = j;
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                size_t j = i;
                while (j < n && (std::isalnum(static_cast<unsigned char>(src_[j])) || src_[j] == '_')) ++j;
                toks_.push_back({TokKind::Ident, i, j - i, 0.0, src_.substr(i, j - i)});
                i = j;
                continue;
            }
            TokKind k;
            switch (c) {
                case '+': k = TokKind::Plus; break;
                case '-': k = TokKind::Minus; break;
                case '*': k = TokKind::Star; break;
                case '/': k = TokKind::Slash; break;
                case '^': k = TokKind::Caret; break;
                case '(': k = TokKind::LParen; break;
                case ')': k = TokKind::RParen; break;
                case ',': k = TokKind::Comma; break;
                default:
                    fail_at(i, std::string("invalid character '") +
                                   (std::isprint(static_cast<unsigned char>(c))
                                        ? std::string(1, c)
                                        : "\\x" + std::to_string(static_cast<unsigned>(static_cast<unsigned char>(c)))) +
                                   "'",
                            {});
                    return false;
            }
            toks_.push_back({k, i, 1, 0.0, {}});
            ++i;
        }
        toks_.push_back({TokKind::End, n, 0, 0.0, {}});
        return true;
    }

    struct DepthGuard {
        Parser& p;
        bool ok;
        explicit DepthGuard(Parser& parser) : p(parser), ok(++p.depth_ <= kMaxDepth) {
            if (!ok) p.fail_at(p.cur().offset, "expression too deeply nested", {});
        }
        ~DepthGuard() { --p.depth_; }
    };

    ExprPtr parse_expr() {
        DepthGuard g(*this);
        if (!g.ok) return nullptr;
        ExprPtr lhs = parse_term();
        if (!lhs) return nullptr;
        while (cur().kind == TokKind::Plus || cur().kind == TokKind::Minus) {
            const BinOp op = cur().kind == TokKind::Plus ? BinOp::Add : BinOp::Sub;
            advance();
            ExprPtr rhs = parse_term();
            if (!rhs) return nullptr;
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_term() {
        DepthGuard g(*this);
        if (!g.ok) return nullptr;
        ExprPtr lhs = parse_factor();
        if (!lhs) return nullptr;
        while (cur().kind == TokKind::Star || cur().kind == TokKind::Slash) {
            const BinOp op = cur().kind == TokKind::Star ? BinOp::Mul : BinOp::Div;
            advance();
            ExprPtr rhs = parse_factor();
            if (!rhs) return nullptr;
            lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_factor() {
        DepthGuard g(*this);
        if (!g.ok) return nullptr;
        if (cur().kind == TokKind::Minus) {
            advance();
            ExprPtr c = parse_factor();
            if (!c) return nullptr;
            // fold '-' over literals so printed negative constants round-trip
            if (c->kind == Expr::Kind::Literal) return Expr::literal(-c->value);
            return Expr::neg(std::move(c));
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        DepthGuard g(*this);
        if (!g.ok) return nullptr;
        ExprPtr base = parse_atom();
        if (!base) return nullptr;
        if (cur().kind == TokKind::Caret) {
            advance();
            ExprPtr exp = parse_factor();  // right-associative
            if (!exp) return nullptr;
            return Expr::binary(BinOp::Pow, std::move(base), std::move(exp));
        }
        return base;
    }

    ExprPtr parse_atom() {
        DepthGuard g(*this);
        if (!g.ok) return nullptr;
        const Token t = cur();
        if (t.kind == TokKind::Number) {
            advance();
            return Expr::literal(t.value);
        }
        if (t.kind == TokKind::Ident) {
            advance();
            if (cur().kind == TokKind::LParen) {
                auto fn = fn_from_name(t.text);
                if (!fn) {
                    fail_at(t.offset, "unknown function '" + std::string(t.text) + "'", {});
                    return nullptr;
                }
                advance();
                std::vector<ExprPtr> args;
                if (cur().kind == TokKind::RParen) {
                    fail(cur(), "empty argument list:", {"expression"});
                    return nullptr;
                }
                while (true) {
                    ExprPtr a = parse_expr();
                    if (!a) return nullptr;
                    args.push_back(std::move(a));
                    if (cur().kind == TokKind::Comma) {
                        advance();
                        continue;
                    }
                    break;
                }
                if (cur().kind != TokKind::RParen) {
                    fail(cur(), "unexpected", {"')'", "','"});
                    return nullptr;
                }
                advance();
                if (static_cast<int>(args.size()) != fn_arity(*fn)) {
                    fail_at(t.offset,
                            "function '" + std::string(fn_name(*fn)) + "' takes " +
                                std::to_string(fn_arity(*fn)) + " argument(s), got " +
                                std::to_string(args.size()),
                            {});
                    return nullptr;
                }
                return Expr::call(*fn, std::move(args));
            }
            return Expr::var(std::string(t.text));
        }
        if (t.kind == TokKind::LParen) {
            advance();
            ExprPtr e = parse_expr();
            if (!e) return nullptr;
            if (cur().kind != TokKind::RParen) {
                fail(cur(), "unexpected", {"')'"});
                return nullptr;
            }
            advance();
            return e;
        }
        fail(t, "unexpected", {"number", "identifier", "'('", "'-'"});
        return nullptr;
    }
};

inline double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
    return v;
}

}  // namespace detail

inline ParseResult parse_expression(std::string_view source) {
    return detail::Parser(source).run();
}

inline double apply_fn(FnId f, double a, double b = 0.0) {
    using detail::checked;
    switch (f) {
        case FnId::Sin: return checked(std::sin(a), "sin");
        case FnId::Cos: return checked(std::cos(a), "cos");
        case FnId::Tan: return checked(std::tan(a), "tan");
        case FnId::Exp: return checked(std::exp(a), "exp");
        case FnId::Ln:
            if (a <= 0.0) throw EvalError("ln of non-positive argument");
            return checked(std::log(a), "ln");
        case FnId::Sqrt:
            if (a < 0.0) throw EvalError("sqrt of negative argument");
            return checked(std::sqrt(a), "sqrt");
        case FnId::Abs: return std::abs(a);
        case FnId::Tanh: return std::tanh(a);
        case FnId::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        case FnId::Min: return std::min(a, b);
        case FnId::Max: return std::max(a, b);
    }
    throw EvalError("unknown function");
}

inline double apply_pow(double base, double exp) {
    if (base < 0.0 && std::nearbyint(exp) != exp)
        throw EvalError("negative base with non-integer exponent");
    if (base == 0.0 && exp < 0.0) throw EvalError("zero base with negative exponent");
    return detail::checked(std::pow(base, exp), "'^'");
}

/// Evaluate against a name -> value environment. Domain violations raise
/// EvalError; results are always finite.
inline double evaluate(const Expr& e, const std::map<std::string, double>& env) {
    switch (e.kind) {
        case Expr::Kind::Literal: return e.value;
        case Expr::Kind::Var: {
            auto it = env.find(e.name);
            if (it == env.end()) throw EvalError("unbound variable '" + e.name + "'");
            return it->second;
        }
        case Expr::Kind::Neg: return -evaluate(*e.lhs, env);
        case Expr::Kind::Binary: {
            const double a = evaluate(*e.lhs, env);
            const double b = evaluate(*e.rhs, env);
            switch (e.op) {
                case BinOp::Add: return detail::checked(a + b, "'+'");
                case BinOp::Sub: return detail::checked(a - b, "'-'");
                case BinOp::Mul: return detail::checked(a * b, "'*'");
                case BinOp::Div:
                    if (b == 0.0) throw EvalError("division by zero");
                    return detail::checked(a / b, "'/'");
                case BinOp::Pow: return apply_pow(a, b);
            }
            throw EvalError("unknown operator");
        }
        case Expr::Kind::Call: {
            const double a = evaluate(*e.args[0], env);
            const double b = e.args.size() > 1 ? evaluate(*e.args[1], env) : 0.0;
            return apply_fn(e.fn, a, b);
        }
    }
    throw EvalError("unknown node");
}

/// Collect every variable name referenced in the tree.
inline void free_variables(const Expr& e, std::vector<std::string>& out) {
    switch (e.kind) {
        case Expr::Kind::Literal: return;
        case Expr::Kind::Var:
            out.push_back(e.name);
            return;
        case Expr::Kind::Neg:
            free_variables(*e.lhs, out);
            return;
        case Expr::Kind::Binary:
            free_variables(*e.lhs, out);
            free_variables(*e.rhs, out);
            return;
        case Expr::Kind::Call:
            for (const auto& a : e.args) free_variables(*a, out);
            return;
    }
}

/// Replace parameter references by literal values (partial substitution).
inline ExprPtr substitute(const ExprPtr& e, const std::map<std::string, double>& bindings) {
    switch (e->kind) {
        case Expr::Kind::Literal: return e;
        case Expr::Kind::Var: {
            auto it = bindings.find(e->name);
            if (it == bindings.end()) return e;
            return Expr::literal(it->second);
        }
        case Expr::Kind::Neg: {
            ExprPtr c = substitute(e->lhs, bindings);
            return c == e->lhs ? e : Expr::neg(std::move(c));
        }
        case Expr::Kind::Binary: {
            ExprPtr l = substitute(e->lhs, bindings);
            ExprPtr r = substitute(e->rhs, bindings);
            return (l == e->lhs && r == e->rhs) ? e : Expr::binary(e->op, std::move(l), std::move(r));
        }
        case Expr::Kind::Call: {
            std::vector<ExprPtr> as;
            bool changed = false;
            as.reserve(e->args.size());
            for (const auto& a : e->args) {
                as.push_back(substitute(a, bindings));
                changed = changed || as.back() != a;
            }
            return changed ? Expr::call(e->fn, std::move(as)) : e;
        }
    }
    return e;
}

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// precedence levels: add=1, mul=2, unary=3, pow=4, atom=5
inline int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Literal: return e.value < 0 ? 3 : 5;
        case Expr::Kind::Var:
        case Expr::Kind::Call: return 5;
        case Expr::Kind::Neg: return 3;
        case Expr::Kind::Binary:
            switch (e.op) {
                case BinOp::Add:
                case BinOp::Sub: return 1;
                case BinOp::Mul:
                case BinOp::Div: return 2;
                case BinOp::Pow: return 4;
            }
    }
    return 5;
}

inline void print_rec(const Expr& e, std::string& out, int parent_min) {
    const int prec = precedence(e);
    const bool parens = prec < parent_min;
    if (parens) out += '(';
    switch (e.kind) {
        case Expr::Kind::Literal: out += fmt_double(e.value); break;
        case Expr::Kind::Var: out += e.name; break;
        case Expr::Kind::Neg:
            out += '-';
            print_rec(*e.lhs, out, 3);
            break;
        case Expr::Kind::Binary: {
            const char* sym = "?";
            int lmin = prec, rmin = prec + 1;
            switch (e.op) {
                case BinOp::Add: sym = " + "; break;
                case BinOp::Sub: sym = " - "; break;
                case BinOp::Mul: sym = "*"; break;
                case BinOp::Div: sym = "/"; break;
                case BinOp::Pow:
                    sym = "^";
                    lmin = 5;   // left operand of '^' must be an atom
                    rmin = 3;   // right side is a factor (may be unary/power)
                    break;
            }
            print_rec(*e.lhs, out, lmin);
            out += sym;
            print_rec(*e.rhs, out, rmin);
            break;
        }
        case Expr::Kind::Call: {
            out += fn_name(e.fn);
            out += '(';
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_rec(*e.args[i], out, 1);
            }
            out += ')';
            break;
        }
    }
    if (parens) out += ')';
}

}  // namespace detail

/// Precedence-aware printer; parse(to_string(e)) is structurally equal to e.
inline std::string to_string(const Expr& e) {
    std::string out;
    detail::print_rec(e, out, 1);
    return out;
}

}  // namespace sdstab
