#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdstab {

/// Hard cap on state/input dimension. The toolkit targets desk-scale
/// catalogs; fixed-capacity vectors keep every evaluation allocation-free.
inline constexpr int kMaxDim = 8;

class DimensionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Fixed-capacity numeric vector (capacity kMaxDim, logical size n).
struct SmallVec {
    std::array<double, kMaxDim> a{};
    int n = 0;

    SmallVec() = default;
    explicit SmallVec(int size) : n(size) {
        if (size < 0 || size > kMaxDim) throw DimensionError("SmallVec: size out of range");
    }
    SmallVec(std::initializer_list<double> xs) {
        if (static_cast<int>(xs.size()) > kMaxDim) throw DimensionError("SmallVec: too many elements");
        n = static_cast<int>(xs.size());
        int i = 0;
        for (double v : xs) a[static_cast<size_t>(i++)] = v;
    }
    static SmallVec from(std::span<const double> xs) {
        if (static_cast<int>(xs.size()) > kMaxDim) throw DimensionError("SmallVec: too many elements");
        SmallVec v(static_cast<int>(xs.size()));
        for (size_t i = 0; i < xs.size(); ++i) v.a[i] = xs[i];
        return v;
    }

    double& operator[](int i) { return a[static_cast<size_t>(i)]; }
    double operator[](int i) const { return a[static_cast<size_t>(i)]; }
    int size() const { return n; }

    std::span<const double> view() const { return {a.data(), static_cast<size_t>(n)}; }
    std::span<double> view() { return {a.data(), static_cast<size_t>(n)}; }

    bool operator==(const SmallVec& o) const {
        if (n != o.n) return false;
        for (int i = 0; i < n; ++i) if (a[static_cast<size_t>(i)] != o.a[static_cast<size_t>(i)]) return false;
        return true;
    }
};

inline double norm2(std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}
inline double norm2(const SmallVec& x) { return norm2(x.view()); }

inline double dist2(const SmallVec& x, const SmallVec& y) {
    double s = 0;
    for (int i = 0; i < x.n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline SmallVec operator+(const SmallVec& x, const SmallVec& y) {
    SmallVec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = x[i] + y[i];
    return r;
}
inline SmallVec operator-(const SmallVec& x, const SmallVec& y) {
    SmallVec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = x[i] - y[i];
    return r;
}
inline SmallVec operator*(double c, const SmallVec& x) {
    SmallVec r(x.n);
    for (int i = 0; i < x.n; ++i) r[i] = c * x[i];
    return r;
}

// --- deterministic random helpers -----------------------------------------
//
// All randomness goes through SplitMix64 + explicit mappings; std::
// distributions are implementation-defined and would break bit-for-bit
// reproducibility of certificates across platforms.

struct SplitMix64 {
    uint64_t s;
    explicit SplitMix64(uint64_t seed) : s(seed) {}
    uint64_t next() {
        uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// uniform in [0,1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// uniform in (lo,hi); endpoints nudged inward
    double uniform_open(double lo, double hi) {
        double u = uniform();
        double v = lo + u * (hi - lo);
        if (v <= lo) v = std::nextafter(lo, hi);
        if (v >= hi) v = std::nextafter(hi, lo);
        return v;
    }
    /// standard normal (Box-Muller, deterministic)
    double gaussian() {
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

/// stream-split a master seed into independent sub-seeds
inline uint64_t sub_seed(uint64_t master, uint64_t stream) {
    SplitMix64 g(master ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    return g.next();
}

inline double halton(uint64_t index, uint64_t base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

inline constexpr std::array<uint64_t, 8> kHaltonBases = {2, 3, 5, 7, 11, 13, 17, 19};

/// Unit direction in dim dimensions (deterministic gaussian normalize).
inline SmallVec unit_direction(int dim, SplitMix64& rng) {
    SmallVec d(dim);
    double nrm = 0;
    do {
        for (int i = 0; i < dim; ++i) d[i] = rng.gaussian();
        nrm = norm2(d);
    } while (nrm < 1e-12);
    for (int i = 0; i < dim; ++i) d[i] /= nrm;
    return d;
}

/// Low-discrepancy points in the closed ball of given radius.
/// Always starts with the origin and the axis extremes, then Halton points
/// (rejection from the enclosing cube) with a seed-dependent offset.
inline std::vector<SmallVec> ball_points(int dim, double radius, int count, uint64_t seed) {
    std::vector<SmallVec> pts;
    pts.reserve(static_cast<size_t>(count));
    if (count <= 0 || dim <= 0) return pts;
    pts.push_back(SmallVec(dim));  // origin
    for (int i = 0; i < dim && static_cast<int>(pts.size()) < count; ++i) {
        SmallVec p(dim);
        p[i] = radius;
        pts.push_back(p);
        if (static_cast<int>(pts.size()) < count) {
            p[i] = -radius;
            pts.push_back(p);
        }
    }
    uint64_t idx = 17 + (seed % 1024);
    const double r2 = radius * radius;
    while (static_cast<int>(pts.size()) < count) {
        SmallVec p(dim);
        double s = 0;
        for (int i = 0; i < dim; ++i) {
            const double c = 2.0 * halton(idx, kHaltonBases[static_cast<size_t>(i)]) - 1.0;
            p[i] = c * radius;
            s += p[i] * p[i];
        }
        ++idx;
        if (radius == 0.0 || s <= r2) pts.push_back(p);
    }
    return pts;
}

/// count points on the sphere of given radius (deterministic directions).
inline std::vector<SmallVec> sphere_points(int dim, double radius, int count, uint64_t seed) {
    std::vector<SmallVec> pts;
    pts.reserve(static_cast<size_t>(count));
    SplitMix64 rng(sub_seed(seed, 0x5f3759df));
    if (dim == 1) {
        // alternate the two endpoints
        for (int i = 0; i < count; ++i) {
            SmallVec p(1);
            p[0] = (i % 2 == 0) ? radius : -radius;
            pts.push_back(p);
        }
        return pts;
    }
    for (int i = 0; i < count; ++i) pts.push_back(radius * unit_direction(dim, rng));
    return pts;
}

inline bool approx_eq(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace sdstab
