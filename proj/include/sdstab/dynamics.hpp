#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sdstab/system.hpp"

namespace sdstab {

// ---------------------------------------------------------------------------
// Evaluable wrappers around a SystemDef. All wrappers are immutable and
// allocation-free per evaluation.
// ---------------------------------------------------------------------------

/// xdot = f(x, u)
struct Plant {
    int n = 0;
    int m = 0;
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> eval;

    SmallVec operator()(const SmallVec& x, const SmallVec& u) const {
        if (x.n != n || u.n != m) throw DimensionError("Plant: dimension mismatch");
        SmallVec out(n);
        eval(x.view(), u.view(), out.view());
        return out;
    }

    static Plant from(const SystemDef& def) {
        auto prog = std::make_shared<std::vector<CompiledExpr>>();
        for (const auto& e : def.f)
            prog->push_back(CompiledExpr::compile(e, def.n, def.m, 0, def.params));
        Plant p;
        p.n = def.n;
        p.m = def.m;
        p.eval = [prog](std::span<const double> x, std::span<const double> u, std::span<double> out) {
            for (size_t i = 0; i < prog->size(); ++i) out[i] = (*prog)[i].eval(x, u, 0.0);
        };
        return p;
    }
};

/// u = u_c(x), a continuous-time law
struct CtLaw {
    int n = 0;
    int m = 0;
    std::function<void(std::span<const double>, std::span<double>)> eval;

    SmallVec operator()(const SmallVec& x) const {
        if (x.n != n) throw DimensionError("CtLaw: dimension mismatch");
        SmallVec out(m);
        eval(x.view(), out.view());
        return out;
    }

    static CtLaw from(const SystemDef& def) {
        if (!def.has_ct_law()) throw DimensionError("system has no [u_c] section");
        auto prog = std::make_shared<std::vector<CompiledExpr>>();
        for (const auto& e : def.u_c)
            prog->push_back(CompiledExpr::compile(e, def.n, def.m, 1, def.params));
        CtLaw c;
        c.n = def.n;
        c.m = def.m;
        c.eval = [prog](std::span<const double> x, std::span<double> out) {
            std::span<const double> no_u;
            for (size_t i = 0; i < prog->size(); ++i) out[i] = (*prog)[i].eval(x, no_u, 0.0);
        };
        return c;
    }

    /// trivial law for autonomous plants (m = 0)
    static CtLaw empty(int n) {
        CtLaw c;
        c.n = n;
        c.m = 0;
        c.eval = [](std::span<const double>, std::span<double>) {};
        return c;
    }
};

/// u = U(x, T), a sampling-period dependent law
struct DtLaw {
    int n = 0;
    int m = 0;
    std::string name;
    std::function<void(std::span<const double>, double, std::span<double>)> eval;

    SmallVec operator()(const SmallVec& x, double T) const {
        if (x.n != n) throw DimensionError("DtLaw: dimension mismatch");
        SmallVec out(m);
        eval(x.view(), T, out.view());
        return out;
    }

    static DtLaw from(const SystemDef& def, const std::string& law_name) {
        const auto& exprs = def.law(law_name);
        auto prog = std::make_shared<std::vector<CompiledExpr>>();
        for (const auto& e : exprs)
            prog->push_back(CompiledExpr::compile(e, def.n, def.m, 2, def.params));
        DtLaw d;
        d.n = def.n;
        d.m = def.m;
        d.name = law_name;
        d.eval = [prog](std::span<const double> x, double T, std::span<double> out) {
            std::span<const double> no_u;
            for (size_t i = 0; i < prog->size(); ++i) out[i] = (*prog)[i].eval(x, no_u, T);
        };
        return d;
    }

    /// U_c(x, T) := u_c(x): the constant-in-T wrapper around a CT law.
    static DtLaw constant_in_T(const CtLaw& uc, std::string wrapper_name = "u_c") {
        DtLaw d;
        d.n = uc.n;
        d.m = uc.m;
        d.name = std::move(wrapper_name);
        auto inner = uc.eval;
        d.eval = [inner](std::span<const double> x, double, std::span<double> out) { inner(x, out); };
        return d;
    }

    static DtLaw empty(int n, std::string wrapper_name = "none") {
        DtLaw d;
        d.n = n;
        d.m = 0;
        d.name = std::move(wrapper_name);
        d.eval = [](std::span<const double>, double, std::span<double>) {};
        return d;
    }
};

/// u_c(x) := U(x, 0), the CT limit of a DT law.
inline CtLaw ct_limit(const DtLaw& U) {
    CtLaw c;
    c.n = U.n;
    c.m = U.m;
    auto inner = U.eval;
    c.eval = [inner](std::span<const double> x, std::span<double> out) { inner(x, 0.0, out); };
    return c;
}

/// h(x) := f(x, u_c(x)), the continuous-time closed loop.
inline std::function<void(std::span<const double>, std::span<double>)> closed_loop_field(
    const Plant& p, const CtLaw& c) {
    if (p.n != c.n || p.m != c.m) throw DimensionError("closed_loop_field: dimension mismatch");
    auto peval = p.eval;
    auto ceval = c.eval;
    const int m = p.m;
    return [peval, ceval, m](std::span<const double> x, std::span<double> out) {
        std::array<double, kMaxDim> u{};
        std::span<double> uv(u.data(), static_cast<size_t>(m));
        ceval(x, uv);
        peval(x, uv, out);
    };
}

inline SmallVec eval_field(const std::function<void(std::span<const double>, std::span<double>)>& h,
                           const SmallVec& x) {
    SmallVec out(x.n);
    h(x.view(), out.view());
    return out;
}

// ---------------------------------------------------------------------------
// Standing-assumption checks
// ---------------------------------------------------------------------------

/// |f(0,0)|, |u_c(0)| and max_T |U(0,T)| against a 1e-12 origin tolerance.
struct OriginReport {
    double f_origin_norm = 0.0;
    double uc_origin_norm = 0.0;
    double U_origin_norm = 0.0;   // max over the T grid
    double worst_T = 0.0;
    bool checked_uc = false;
    bool checked_U = false;
    bool pass = true;
};

inline constexpr double kOriginTol = 1e-12;

inline OriginReport check_origin(const Plant& p, const CtLaw* c, const DtLaw* d,
                                 std::span<const double> T_grid) {
    OriginReport r;
    SmallVec x0(p.n), u0(p.m);
    r.f_origin_norm = norm2(p(x0, u0));
    if (c) {
        r.checked_uc = true;
        r.uc_origin_norm = norm2((*c)(x0));
    }
    if (d && d->m > 0) {
        r.checked_U = true;
        for (double T : T_grid) {
            const double v = norm2((*d)(x0, T));
            if (v > r.U_origin_norm) {
                r.U_origin_norm = v;
                r.worst_T = T;
            }
        }
    }
    r.pass = r.f_origin_norm <= kOriginTol && r.uc_origin_norm <= kOriginTol &&
             r.U_origin_norm <= kOriginTol;
    return r;
}

// ---------------------------------------------------------------------------
// Lipschitz estimation by sampling
// ---------------------------------------------------------------------------

struct LipschitzEstimate {
    double M = 0.0;       // state-ball radius
    double M_u = 0.0;     // input-ball radius
    double L_hat = 0.0;   // max difference quotient (a lower bound on the true L)
    int sample_count = 0;
    uint64_t seed = 0;
    SmallVec worst_x, worst_y;   // state parts of the maximizing pair
    double worst_quotient = 0.0;
};

namespace detail {

/// Generic two-argument sampled Lipschitz scan.
/// fn maps (x in ball M, u in ball M_u) -> R^out_dim; set nu = 0 for
/// single-argument functions.
inline LipschitzEstimate lipschitz_scan(
    const std::function<SmallVec(const SmallVec&, const SmallVec&)>& fn, int nx, int nu,
    double M, double M_u, int n_samples, uint64_t seed) {
    LipschitzEstimate est;
    est.M = M;
    est.M_u = M_u;
    est.seed = seed;

    const int base_count = std::max(2, n_samples);
    std::vector<SmallVec> xs = ball_points(nx, M, base_count, sub_seed(seed, 1));
    std::vector<SmallVec> us;
    if (nu > 0)
        us = ball_points(nu, M_u, base_count, sub_seed(seed, 2));
    else
        us.assign(static_cast<size_t>(base_count), SmallVec(0));

    SplitMix64 rng(sub_seed(seed, 3));

    auto consider = [&](const SmallVec& x, const SmallVec& u, const SmallVec& y, const SmallVec& v) {
        const double den = dist2(x, y) + (nu > 0 ? dist2(u, v) : 0.0);
        if (den <= 0) return;
        const double q = dist2(fn(x, u), fn(y, v)) / den;
        ++est.sample_count;
        if (q > est.L_hat) {
            est.L_hat = q;
            est.worst_x = x;
            est.worst_y = y;
            est.worst_quotient = q;
        }
    };

    // pair up consecutive low-discrepancy points
    for (size_t i = 0; i + 1 < xs.size(); ++i) consider(xs[i], us[i], xs[i + 1], us[i + 1]);
    // and a shuffled matching across the ball
    for (size_t i = 0; i + 1 < xs.size(); i += 2) {
        const size_t j = xs.size() - 1 - i;
        consider(xs[i], us[i], xs[j], us[j]);
    }

    // near-coincident pairs: separations M * 10^-k probe the local slope
    for (size_t i = 0; i < xs.size(); ++i) {
        const SmallVec dir = unit_direction(nx, rng);
        const SmallVec udir = nu > 0 ? unit_direction(nu, rng) : SmallVec(0);
        for (int k = 1; k <= 6; ++k) {
            const double eps = std::pow(10.0, -k);
            SmallVec y = xs[i] + (M * eps) * dir;
            if (norm2(y) > M) y = xs[i] - (M * eps) * dir;   // stay inside the ball
            SmallVec v = us[i];
            if (nu > 0 && M_u > 0) {
                v = us[i] + (M_u * eps) * udir;
                if (norm2(v) > M_u) v = us[i] - (M_u * eps) * udir;
            }
            consider(xs[i], us[i], y, v);
        }
    }
    return est;
}

}  // namespace detail

inline LipschitzEstimate estimate_lipschitz(const Plant& p, double M, double M_u, int n_samples,
                                            uint64_t seed) {
    return detail::lipschitz_scan([&](const SmallVec& x, const SmallVec& u) { return p(x, u); },
                                  p.n, p.m, M, M_u, n_samples, seed);
}

inline LipschitzEstimate estimate_lipschitz(const CtLaw& c, double M, int n_samples, uint64_t seed) {
    return detail::lipschitz_scan([&](const SmallVec& x, const SmallVec&) { return c(x); }, c.n, 0,
                                  M, 0.0, n_samples, seed);
}

inline LipschitzEstimate estimate_lipschitz(
    const std::function<void(std::span<const double>, std::span<double>)>& field, int n, double M,
    int n_samples, uint64_t seed) {
    return detail::lipschitz_scan(
        [&](const SmallVec& x, const SmallVec&) { return eval_field(field, x); }, n, 0, M, 0.0,
        n_samples, seed);
}

}  // namespace sdstab
