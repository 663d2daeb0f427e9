#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "sdstab/core.hpp"

namespace sdstab {

// ---------------------------------------------------------------------------
// Nonuniform sampling sequences: finite prefixes of elements of Phi(Tbar),
// the set of sequences with T_i in (0, Tbar) strictly.
// ---------------------------------------------------------------------------

enum class SeqKind { Constant, Random, Alternating, FrontLoaded, BackLoaded, Dwell };

inline const char* seq_kind_name(SeqKind k) {
    switch (k) {
        case SeqKind::Constant: return "constant";
        case SeqKind::Random: return "random";
        case SeqKind::Alternating: return "alternating";
        case SeqKind::FrontLoaded: return "front_loaded";
        case SeqKind::BackLoaded: return "back_loaded";
        case SeqKind::Dwell: return "dwell";
    }
    return "?";
}

/// Value-type descriptor; regeneration from it is bit-identical.
struct SeqDescriptor {
    SeqKind kind = SeqKind::Constant;
    double Tbar = 0.0;
    int N = 0;
    uint64_t seed = 0;
    double p1 = 0.0;  // constant: T; random: min_fraction; alternating: big; front/back: start
    double p2 = 0.0;  // alternating: small; front_loaded: ratio

    std::string to_string() const {
        char buf[160];
        switch (kind) {
            case SeqKind::Constant:
                std::snprintf(buf, sizeof buf, "constant:T=%.17g,N=%d", p1, N);
                break;
            case SeqKind::Random:
                std::snprintf(buf, sizeof buf, "random:Tbar=%.17g,N=%d,seed=%llu,minfrac=%.17g",
                              Tbar, N, static_cast<unsigned long long>(seed), p1);
                break;
            case SeqKind::Alternating:
                std::snprintf(buf, sizeof buf, "alternating:Tbar=%.17g,N=%d,big=%.17g,small=%.17g",
                              Tbar, N, p1, p2);
                break;
            case SeqKind::FrontLoaded:
                std::snprintf(buf, sizeof buf, "front_loaded:Tbar=%.17g,N=%d,start=%.17g,ratio=%.17g",
                              Tbar, N, p1, p2);
                break;
            case SeqKind::BackLoaded:
                std::snprintf(buf, sizeof buf, "back_loaded:Tbar=%.17g,N=%d,start=%.17g", Tbar, N, p1);
                break;
            case SeqKind::Dwell:
                std::snprintf(buf, sizeof buf, "dwell:Tbar=%.17g,N=%d", Tbar, N);
                break;
        }
        return buf;
    }
};

struct SamplingSequence {
    double Tbar = 0.0;
    std::vector<double> values;
    SeqDescriptor descriptor;

    size_t size() const { return values.size(); }
    double operator[](size_t i) const { return values[i]; }

    bool in_phi() const {
        if (values.empty()) return false;
        for (double T : values)
            if (!(T > 0.0 && T < Tbar)) return false;
        return true;
    }
};

/// t_0 = 0, t_{k+1} = t_k + T_k (the empty prefix sums to zero).
inline std::vector<double> accumulate(const SamplingSequence& seq) {
    std::vector<double> t;
    t.reserve(seq.values.size() + 1);
    t.push_back(0.0);
    double acc = 0.0;
    for (double T : seq.values) {
        acc += T;
        t.push_back(acc);
    }
    return t;
}

inline SamplingSequence gen_constant(double T, int N) {
    if (!(T > 0.0) || N < 1) throw DimensionError("gen_constant: need T > 0, N >= 1");
    SamplingSequence s;
    s.Tbar = T * (1.0 + 1e-9);  // keep T < Tbar strictly
    s.values.assign(static_cast<size_t>(N), T);
    s.descriptor = {SeqKind::Constant, s.Tbar, N, 0, T, 0.0};
    return s;
}

inline SamplingSequence gen_random(double Tbar, int N, uint64_t seed, double min_fraction = 0.01) {
    if (!(Tbar > 0.0) || N < 1) throw DimensionError("gen_random: need Tbar > 0, N >= 1");
    SamplingSequence s;
    s.Tbar = Tbar;
    s.values.reserve(static_cast<size_t>(N));
    SplitMix64 rng(sub_seed(seed, 0xa5a5));
    const double lo = min_fraction * Tbar;
    for (int i = 0; i < N; ++i) s.values.push_back(rng.uniform_open(lo, Tbar));
    s.descriptor = {SeqKind::Random, Tbar, N, seed, min_fraction, 0.0};
    return s;
}

inline SamplingSequence gen_adversarial(SeqKind kind, double Tbar, int N, double p1 = 0.0,
                                        double p2 = 0.0) {
    if (!(Tbar > 0.0) || N < 1) throw DimensionError("gen_adversarial: need Tbar > 0, N >= 1");
    SamplingSequence s;
    s.Tbar = Tbar;
    s.values.reserve(static_cast<size_t>(N));
    auto clampT = [Tbar](double v) {
        if (v >= Tbar) v = std::nextafter(Tbar, 0.0);
        if (v <= 0.0) v = Tbar * 1e-9;
        return v;
    };
    switch (kind) {
        case SeqKind::Alternating: {
            const double big = p1 > 0 ? p1 : 0.9 * Tbar;
            const double small = p2 > 0 ? p2 : 0.1 * Tbar;
            for (int i = 0; i < N; ++i) s.values.push_back(clampT(i % 2 == 0 ? big : small));
            s.descriptor = {kind, Tbar, N, 0, big, small};
            break;
        }
        case SeqKind::FrontLoaded: {
            const double start = p1 > 0 ? p1 : 0.8 * Tbar;
            const double ratio = p2 > 0 ? p2 : 0.5;
            double v = start;
            for (int i = 0; i < N; ++i) {
                s.values.push_back(clampT(v));
                v *= ratio;
            }
            s.descriptor = {kind, Tbar, N, 0, start, ratio};
            break;
        }
        case SeqKind::BackLoaded: {
            const double start = p1 > 0 ? p1 : 0.2 * Tbar;
            const double end = 0.999 * Tbar;
            for (int i = 0; i < N; ++i) {
                const double a = N == 1 ? 1.0 : static_cast<double>(i) / (N - 1);
                s.values.push_back(clampT(start + a * (end - start)));
            }
            s.descriptor = {kind, Tbar, N, 0, start, 0.0};
            break;
        }
        case SeqKind::Dwell: {
            // long runs hugging Tbar: values in [0.99 Tbar, 0.999 Tbar] with a
            // deterministic golden-ratio jitter
            for (int i = 0; i < N; ++i) {
                const double fr = std::fmod(0.6180339887498949 * (i + 1), 1.0);
                s.values.push_back(clampT(Tbar * (0.99 + 0.009 * fr)));
            }
            s.descriptor = {kind, Tbar, N, 0, 0.0, 0.0};
            break;
        }
        default:
            throw DimensionError("gen_adversarial: unknown kind");
    }
    return s;
}

/// Rebuild a sequence from its descriptor (bit-identical to the original).
inline SamplingSequence regenerate(const SeqDescriptor& d) {
    switch (d.kind) {
        case SeqKind::Constant: return gen_constant(d.p1, d.N);
        case SeqKind::Random: return gen_random(d.Tbar, d.N, d.seed, d.p1);
        default: return gen_adversarial(d.kind, d.Tbar, d.N, d.p1, d.p2);
    }
}

/// Parse the CLI syntax "kind:key=value,...", e.g. "constant:T=0.1,N=200".
inline std::optional<SeqDescriptor> parse_seq_spec(const std::string& spec) {
    const size_t colon = spec.find(':');
    const std::string kind_s = spec.substr(0, colon);
    SeqDescriptor d;
    if (kind_s == "constant") d.kind = SeqKind::Constant;
    else if (kind_s == "random") d.kind = SeqKind::Random;
    else if (kind_s == "alternating") d.kind = SeqKind::Alternating;
    else if (kind_s == "front_loaded") d.kind = SeqKind::FrontLoaded;
    else if (kind_s == "back_loaded") d.kind = SeqKind::BackLoaded;
    else if (kind_s == "dwell") d.kind = SeqKind::Dwell;
    else return std::nullopt;

    d.N = 200;
    if (d.kind == SeqKind::Random) d.p1 = 0.01;
    if (colon == std::string::npos) return d.Tbar > 0 || d.kind == SeqKind::Constant ? std::optional<SeqDescriptor>(d) : std::nullopt;

    std::string rest = spec.substr(colon + 1);
    size_t pos = 0;
    while (pos < rest.size()) {
        size_t comma = rest.find(',', pos);
        if (comma == std::string::npos) comma = rest.size();
        const std::string kv = rest.substr(pos, comma - pos);
        pos = comma + 1;
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) return std::nullopt;
        const std::string key = kv.substr(0, eq);
        const double val = std::strtod(kv.c_str() + eq + 1, nullptr);
        if (key == "Tbar") d.Tbar = val;
        else if (key == "N") d.N = static_cast<int>(val);
        else if (key == "seed") d.seed = static_cast<uint64_t>(val);
        else if (key == "T" || key == "big" || key == "start" || key == "minfrac") d.p1 = val;
        else if (key == "small" || key == "ratio") d.p2 = val;
        else return std::nullopt;
    }
    if (d.kind == SeqKind::Constant) {
        if (!(d.p1 > 0)) return std::nullopt;
        d.Tbar = d.p1 * (1.0 + 1e-9);
    } else if (!(d.Tbar > 0)) {
        return std::nullopt;
    }
    return d;
}

}  // namespace sdstab
