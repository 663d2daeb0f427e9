#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdstab/expr.hpp"

namespace sdstab {

// ---------------------------------------------------------------------------
// System definition files.
//
// UTF-8 sectioned key/value documents:
//
//   [system]            n = 2, m = 1, param_mode = inline|symbolic
//   [f]                 f1..fn     over x1..xn, u1..um, params
//   [u_c]               uc1..ucm   over x1..xn, params            (optional)
//   [U.<name>]          U1..Um     over x1..xn, T, params         (0+ variants)
//   [params]            name = numeric literal
//
// '#' and ';' start comments. With param_mode = inline (the default) every
// parameter reference is replaced by its literal value at load time.
// ---------------------------------------------------------------------------

struct SystemDef {
    int n = 0;
    int m = 0;
    std::vector<ExprPtr> f;                               // size n
    std::vector<ExprPtr> u_c;                             // size m or empty
    std::map<std::string, std::vector<ExprPtr>> laws;     // name -> size-m exprs
    std::map<std::string, double> params;
    bool params_inlined = true;
    std::string name;

    bool has_ct_law() const { return !u_c.empty(); }
    bool has_law(const std::string& law) const { return laws.count(law) > 0; }
    const std::vector<ExprPtr>& law(const std::string& law_name) const {
        auto it = laws.find(law_name);
        if (it == laws.end()) throw DimensionError("unknown control law '" + law_name + "'");
        return it->second;
    }
    /// name of the first declared law, if any
    std::optional<std::string> default_law() const {
        if (laws.empty()) return std::nullopt;
        return laws.begin()->first;
    }
};

struct SystemParseResult {
    std::optional<SystemDef> system;
    std::optional<ParseDiagnostic> diagnostic;
    bool ok() const { return system.has_value(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

/// Is `ref` a variable the given role may mention?  Role: 0=f, 1=u_c, 2=U.
inline bool var_allowed(const std::string& ref, int n, int m, int role) {
    if (ref == "T") return role == 2;
    if (ref.size() >= 2 && (ref[0] == 'x' || ref[0] == 'u') &&
        std::all_of(ref.begin() + 1, ref.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        const int k = std::atoi(ref.c_str() + 1);
        if (ref[0] == 'x') return k >= 1 && k <= n;
        return role == 0 && k >= 1 && k <= m;
    }
    return false;  // parameter or unknown; handled separately
}

inline bool looks_like_state_or_input(const std::string& ref) {
    if (ref == "T") return true;
    if (ref.size() >= 2 && (ref[0] == 'x' || ref[0] == 'u'))
        return std::all_of(ref.begin() + 1, ref.end(),
                           [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    return false;
}

}  // namespace detail

inline SystemParseResult parse_system(std::string_view source, std::string name = "") {
    SystemDef def;
    def.name = std::move(name);

    auto fail = [](size_t offset, int line, std::string msg) {
        ParseDiagnostic d;
        d.offset = offset;
        d.line = line;
        d.column = 1;
        d.message = std::move(msg);
        return SystemParseResult{std::nullopt, d};
    };

    struct Entry {
        std::string section, key, value;
        int line;
        size_t offset;
    };
    std::vector<Entry> entries;
    std::vector<std::string> section_order;

    std::string section;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= source.size()) {
        size_t eol = source.find('\n', pos);
        if (eol == std::string_view::npos) eol = source.size();
        std::string_view raw = source.substr(pos, eol - pos);
        const size_t line_off = pos;
        pos = eol + 1;
        ++line_no;
        if (eol == source.size() && raw.empty() && pos > source.size()) break;

        size_t hash = raw.find_first_of("#;");
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string_view t = detail::trim(raw);
        if (t.empty()) {
            if (eol == source.size()) break;
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']')
                return fail(line_off, line_no, "unterminated section header");
            section = std::string(detail::trim(t.substr(1, t.size() - 2)));
            if (section.empty()) return fail(line_off, line_no, "empty section name");
            if (std::find(section_order.begin(), section_order.end(), section) == section_order.end())
                section_order.push_back(section);
        } else {
            size_t eq = t.find('=');
            if (eq == std::string_view::npos)
                return fail(line_off, line_no, "expected 'key = value'");
            std::string key(detail::trim(t.substr(0, eq)));
            std::string value(detail::trim(t.substr(eq + 1)));
            if (key.empty()) return fail(line_off, line_no, "empty key");
            if (section.empty()) return fail(line_off, line_no, "entry outside any section");
            entries.push_back({section, key, value, line_no, line_off});
        }
        if (eol == source.size()) break;
    }

    auto find_entry = [&](const std::string& sec, const std::string& key) -> const Entry* {
        for (const auto& e : entries)
            if (e.section == sec && e.key == key) return &e;
        return nullptr;
    };

    // [system]
    const Entry* en = find_entry("system", "n");
    if (!en) return fail(0, 1, "missing [system] n");
    def.n = std::atoi(en->value.c_str());
    if (def.n < 1 || def.n > kMaxDim)
        return fail(en->offset, en->line, "n must be in [1, " + std::to_string(kMaxDim) + "]");
    const Entry* em = find_entry("system", "m");
    if (!em) return fail(0, 1, "missing [system] m");
    def.m = std::atoi(em->value.c_str());
    if (def.m < 0 || def.m > kMaxDim)
        return fail(em->offset, em->line, "m must be in [0, " + std::to_string(kMaxDim) + "]");
    if (const Entry* mode = find_entry("system", "param_mode")) {
        if (mode->value == "inline")
            def.params_inlined = true;
        else if (mode->value == "symbolic")
            def.params_inlined = false;
        else
            return fail(mode->offset, mode->line, "param_mode must be 'inline' or 'symbolic'");
    }

    // [params]
    for (const auto& e : entries) {
        if (e.section != "params") continue;
        if (detail::looks_like_state_or_input(e.key))
            return fail(e.offset, e.line, "parameter name '" + e.key + "' collides with a reserved identifier");
        char* end = nullptr;
        const double v = std::strtod(e.value.c_str(), &end);
        if (end == e.value.c_str() || !detail::trim(std::string_view(end)).empty() || !std::isfinite(v))
            return fail(e.offset, e.line, "parameter '" + e.key + "' is not a numeric literal");
        def.params[e.key] = v;
    }

    // expression sections
    auto load_exprs = [&](const std::string& sec, const std::string& prefix, int count,
                          int role, std::vector<ExprPtr>& out) -> std::optional<SystemParseResult> {
        out.clear();
        for (int i = 1; i <= count; ++i) {
            const std::string key = prefix + std::to_string(i);
            const Entry* e = find_entry(sec, key);
            if (!e)
                return fail(0, 1, "section [" + sec + "] is missing entry '" + key + "'");
            ParseResult pr = parse_expression(e->value);
            if (!pr.ok()) {
                ParseDiagnostic d = *pr.diagnostic;
                d.line = e->line;
                d.message = "[" + sec + "] " + key + ": " + d.message;
                return SystemParseResult{std::nullopt, d};
            }
            std::vector<std::string> vars;
            free_variables(*pr.expr, vars);
            for (const auto& v : vars) {
                if (detail::var_allowed(v, def.n, def.m, role)) continue;
                if (detail::looks_like_state_or_input(v))
                    return fail(e->offset, e->line,
                                "[" + sec + "] " + key + ": variable '" + v +
                                    "' is out of range for n=" + std::to_string(def.n) +
                                    ", m=" + std::to_string(def.m) +
                                    (role != 0 && v[0] == 'u' ? " (inputs not allowed here)" : "") +
                                    (role != 2 && v == "T" ? " (T not allowed here)" : ""));
                if (!def.params.count(v))
                    return fail(e->offset, e->line,
                                "[" + sec + "] " + key + ": unknown identifier '" + v + "'");
            }
            out.push_back(def.params_inlined ? substitute(pr.expr, def.params) : pr.expr);
        }
        // reject extra entries beyond the declared dimension
        for (const auto& e : entries) {
            if (e.section != sec) continue;
            if (e.key.rfind(prefix, 0) != 0)
                return fail(e.offset, e.line, "unexpected key '" + e.key + "' in [" + sec + "]");
            const int k = std::atoi(e.key.c_str() + prefix.size());
            if (k < 1 || k > count)
                return fail(e.offset, e.line,
                            "entry '" + e.key + "' exceeds declared dimension in [" + sec + "]");
        }
        return std::nullopt;
    };

    if (auto err = load_exprs("f", "f", def.n, 0, def.f)) return *err;

    const bool has_uc = std::find(section_order.begin(), section_order.end(), "u_c") != section_order.end();
    if (has_uc) {
        if (def.m == 0) return fail(0, 1, "[u_c] present but m = 0");
        if (auto err = load_exprs("u_c", "uc", def.m, 1, def.u_c)) return *err;
    }

    for (const auto& sec : section_order) {
        if (sec.rfind("U.", 0) != 0) continue;
        const std::string law_name = sec.substr(2);
        if (law_name.empty()) return fail(0, 1, "empty law name in [U.]");
        if (def.m == 0) return fail(0, 1, "[" + sec + "] present but m = 0");
        std::vector<ExprPtr> exprs;
        if (auto err = load_exprs(sec, "U", def.m, 2, exprs)) return *err;
        def.laws[law_name] = std::move(exprs);
    }

    for (const auto& sec : section_order) {
        if (sec == "system" || sec == "f" || sec == "u_c" || sec == "params") continue;
        if (sec.rfind("U.", 0) == 0) continue;
        return fail(0, 1, "unknown section [" + sec + "]");
    }

    return {def, std::nullopt};
}

// ---------------------------------------------------------------------------
// Compiled expressions: flat postfix programs over indexed slots. This is the
// evaluation path the numeric modules use; it allocates nothing per call.
// ---------------------------------------------------------------------------

class CompiledExpr {
  public:
    /// Compile against declared dimensions; params become constants.
    /// role: 0 = f (x,u), 1 = u_c (x), 2 = U (x,T).
    static CompiledExpr compile(const ExprPtr& e, int n, int m, int role,
                                const std::map<std::string, double>& params) {
        CompiledExpr c;
        c.emit(*e, n, m, role, params);
        c.height_ = c.stack_height();
        if (c.height_ > kMaxStack) throw DimensionError("expression too deep to compile");
        return c;
    }

    double eval(std::span<const double> x, std::span<const double> u, double T) const {
        double st[kMaxStack];
        int sp = 0;
        for (const Instr& ins : prog_) {
            switch (ins.op) {
                case Op::Const: st[sp++] = ins.c; break;
                case Op::State: st[sp++] = x[static_cast<size_t>(ins.idx)]; break;
                case Op::Input: st[sp++] = u[static_cast<size_t>(ins.idx)]; break;
                case Op::Period: st[sp++] = T; break;
                case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
                case Op::Add: --sp; st[sp - 1] += st[sp]; break;
                case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
                case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
                case Op::Div:
                    --sp;
                    if (st[sp] == 0.0) throw EvalError("division by zero");
                    st[sp - 1] = detail::checked(st[sp - 1] / st[sp], "'/'");
                    break;
                case Op::Pow: --sp; st[sp - 1] = apply_pow(st[sp - 1], st[sp]); break;
                case Op::Fn1: st[sp - 1] = apply_fn(ins.fn, st[sp - 1]); break;
                case Op::Fn2: --sp; st[sp - 1] = apply_fn(ins.fn, st[sp - 1], st[sp]); break;
            }
        }
        return st[0];
    }

  private:
    static constexpr int kMaxStack = 64;

    enum class Op : uint8_t { Const, State, Input, Period, Neg, Add, Sub, Mul, Div, Pow, Fn1, Fn2 };
    struct Instr {
        Op op;
        int idx = 0;
        double c = 0.0;
        FnId fn = FnId::Sin;
    };
    std::vector<Instr> prog_;
    int height_ = 0;

    void emit(const Expr& e, int n, int m, int role, const std::map<std::string, double>& params) {
        switch (e.kind) {
            case Expr::Kind::Literal:
                prog_.push_back({Op::Const, 0, e.value, FnId::Sin});
                return;
            case Expr::Kind::Var: {
                const std::string& v = e.name;
                if (v == "T" && role == 2) {
                    prog_.push_back({Op::Period, 0, 0.0, FnId::Sin});
                    return;
                }
                if (detail::var_allowed(v, n, m, role)) {
                    const int k = std::atoi(v.c_str() + 1) - 1;
                    prog_.push_back({v[0] == 'x' ? Op::State : Op::Input, k, 0.0, FnId::Sin});
                    return;
                }
                auto it = params.find(v);
                if (it == params.end()) throw EvalError("unbound variable '" + v + "'");
                prog_.push_back({Op::Const, 0, it->second, FnId::Sin});
                return;
            }
            case Expr::Kind::Neg:
                emit(*e.lhs, n, m, role, params);
                prog_.push_back({Op::Neg, 0, 0.0, FnId::Sin});
                return;
            case Expr::Kind::Binary: {
                emit(*e.lhs, n, m, role, params);
                emit(*e.rhs, n, m, role, params);
                Op op = Op::Add;
                switch (e.op) {
                    case BinOp::Add: op = Op::Add; break;
                    case BinOp::Sub: op = Op::Sub; break;
                    case BinOp::Mul: op = Op::Mul; break;
                    case BinOp::Div: op = Op::Div; break;
                    case BinOp::Pow: op = Op::Pow; break;
                }
                prog_.push_back({op, 0, 0.0, FnId::Sin});
                return;
            }
            case Expr::Kind::Call:
                for (const auto& a : e.args) emit(*a, n, m, role, params);
                prog_.push_back({e.args.size() == 2 ? Op::Fn2 : Op::Fn1, 0, 0.0, e.fn});
                return;
        }
    }

    int stack_height() const {
        int h = 0, mx = 0;
        for (const Instr& ins : prog_) {
            switch (ins.op) {
                case Op::Const:
                case Op::State:
                case Op::Input:
                case Op::Period: ++h; break;
                case Op::Add:
                case Op::Sub:
                case Op::Mul:
                case Op::Div:
                case Op::Pow:
                case Op::Fn2: --h; break;
                default: break;
            }
            mx = std::max(mx, h);
        }
        return mx;
    }
};

}  // namespace sdstab
