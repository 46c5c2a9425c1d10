// Belief-grid construction: fixed-resolution uniform grids over the simplex
// and the variable-resolution scheme that assigns a resolution to each
// threshold region of pi_0 (probability healthy). Points are built in exact
// rational arithmetic and converted to floating point once, on emission.
#pragma once

#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cpomdp/common.hpp"

namespace cpomdp {

/// Exact fraction used for grid coordinates and region thresholds.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational of(std::int64_t n, std::int64_t d) {
        Rational r{n, d};
        r.reduce();
        return r;
    }

    /// Interprets a double as the decimal it was written as in config
    /// (9 digits), so 0.96 becomes exactly 96/100.
    static Rational from_decimal(real v) {
        constexpr std::int64_t scale = 1000000000;
        return of(std::llround(v * static_cast<real>(scale)), scale);
    }

    void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    real value() const { return static_cast<real>(num) / static_cast<real>(den); }

    friend bool operator==(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator>=(const Rational& a, const Rational& b) { return b <= a; }
};

/// A grid point as integer numerators over a common denominator, kept in
/// canonical (fully reduced) form so points from different resolutions
/// compare equal when they coincide.
struct RationalPoint {
    std::int64_t den = 1;
    std::vector<std::int64_t> num;

    void canonicalize() {
        std::int64_t g = den;
        for (std::int64_t n : num) g = std::gcd(g, n);
        if (g > 1) {
            den /= g;
            for (std::int64_t& n : num) n /= g;
        }
    }

    Rational component(std::size_t i) const { return Rational::of(num[i], den); }

    Belief to_belief() const {
        Belief b(num.size());
        for (std::size_t i = 0; i < num.size(); ++i)
            b[i] = static_cast<real>(num[i]) / static_cast<real>(den);
        return b;
    }

    friend bool operator==(const RationalPoint& a, const RationalPoint& b) {
        return a.den == b.den && a.num == b.num; // canonical forms
    }
    /// Lexicographically *descending* by component value sorts ascending
    /// under this comparator when negated; see grid ordering below.
    static bool lex_value_greater(const RationalPoint& a, const RationalPoint& b) {
        for (std::size_t i = 0; i < a.num.size(); ++i) {
            const auto lhs = static_cast<__int128>(a.num[i]) * b.den;
            const auto rhs = static_cast<__int128>(b.num[i]) * a.den;
            if (lhs != rhs) return lhs > rhs;
        }
        return false;
    }
};

struct FixedMeta {
    std::size_t rho;
};
struct VariableMeta {
    std::vector<std::size_t> rhos;
    std::vector<Rational> thresholds; // strictly decreasing, last == 0
};

/// Ordered finite set of belief points with construction metadata. Ordering
/// is deterministic: lexicographically descending by components.
struct GridSet {
    std::vector<Belief> points;
    std::vector<RationalPoint> rationals;
    std::variant<FixedMeta, VariableMeta> meta;
    std::size_t n_states = 0;

    std::size_t size() const { return points.size(); }

    /// True when all simplex vertices are present (projection precondition).
    bool contains_vertices() const {
        std::vector<bool> seen(n_states, false);
        for (const auto& rp : rationals)
            for (std::size_t i = 0; i < n_states; ++i)
                if (rp.num[i] == rp.den) seen[i] = true;
        for (bool s : seen)
            if (!s) return false;
        return true;
    }
};

/// binom(n_states-1+rho, rho), saturating instead of overflowing.
inline std::uint64_t grid_size_formula(std::size_t rho, std::size_t n_states) {
    const std::size_t k = std::min<std::size_t>(rho, n_states - 1);
    const std::size_t n = n_states - 1 + rho;
    unsigned __int128 c = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        c = c * (n - k + i) / i; // exact: running value is a binomial
        if (c > static_cast<unsigned __int128>(UINT64_MAX)) return UINT64_MAX;
    }
    return static_cast<std::uint64_t>(c);
}

namespace detail {

// Emits, in descending lexicographic order, every composition of `rho` into
// `n` parts whose first component n0 satisfies lo <= n0 <= hi.
inline void enumerate_compositions(std::size_t rho, std::size_t n, std::int64_t lo,
                                   std::int64_t hi, std::vector<RationalPoint>& out) {
    std::vector<std::int64_t> comp(n, 0);
    auto rec = [&](auto&& self, std::size_t pos, std::int64_t left) -> void {
        if (pos + 1 == n) {
            comp[pos] = left;
            RationalPoint p{static_cast<std::int64_t>(rho), comp};
            out.push_back(std::move(p));
            return;
        }
        for (std::int64_t v = left; v >= 0; --v) {
            comp[pos] = v;
            self(self, pos + 1, left - v);
        }
    };
    for (std::int64_t n0 = hi; n0 >= lo; --n0) {
        comp[0] = n0;
        rec(rec, 1, static_cast<std::int64_t>(rho) - n0);
    }
}

// Number of points of the rho-grid whose first numerator lies in [lo, hi].
inline std::uint64_t count_first_range(std::size_t rho, std::size_t n, std::int64_t lo,
                                       std::int64_t hi) {
    std::uint64_t total = 0;
    for (std::int64_t n0 = lo; n0 <= hi; ++n0) {
        const std::uint64_t c =
            grid_size_formula(static_cast<std::size_t>(rho - n0), n - 1);
        if (total > UINT64_MAX - c) return UINT64_MAX;
        total += c;
    }
    return total;
}

} // namespace detail

inline constexpr std::uint64_t default_grid_cap = 10000000; // 10^7 points

/// The full uniform grid {pi | pi_i = n/rho, sum pi_i = 1}, ordered
/// lexicographically descending. Throws ResourceBound when the predicted
/// size exceeds `cap`.
inline GridSet build_fixed(std::size_t rho, std::size_t n_states,
                           std::uint64_t cap = default_grid_cap) {
    if (rho < 1) throw Error("build_fixed: resolution must be >= 1");
    if (n_states < 2) throw Error("build_fixed: need at least 2 states");
    const std::uint64_t predicted = grid_size_formula(rho, n_states);
    if (predicted > cap)
        throw ResourceBound("build_fixed: grid of " + std::to_string(predicted) +
                            " points exceeds cap " + std::to_string(cap));
    GridSet g;
    g.n_states = n_states;
    g.meta = FixedMeta{rho};
    detail::enumerate_compositions(rho, n_states, 0, static_cast<std::int64_t>(rho),
                                   g.rationals);
    for (auto& rp : g.rationals) {
        g.points.push_back(rp.to_belief());
        rp.canonicalize();
    }
    return g;
}

/// Variable-resolution grid: region xi draws the points of the rho_xi grid
/// whose pi_0 lies in the closed interval [psi_xi, psi_{xi-1}] (psi_0 = 1).
/// Points coinciding at shared region boundaries are merged by the set
/// union; the result is ordered lexicographically descending.
inline GridSet build_variable(const std::vector<std::size_t>& rhos,
                              const std::vector<Rational>& thresholds,
                              std::size_t n_states,
                              std::uint64_t cap = default_grid_cap) {
    if (rhos.size() != thresholds.size() || rhos.empty())
        throw InvalidThresholds("build_variable: need one resolution per threshold");
    if (thresholds.back().num != 0)
        throw InvalidThresholds("build_variable: last threshold must be 0");
    for (std::size_t i = 0; i + 1 < thresholds.size(); ++i)
        if (!(thresholds[i + 1] < thresholds[i]))
            throw InvalidThresholds("build_variable: thresholds must be strictly decreasing");
    for (const auto& th : thresholds)
        if (th.num < 0 || th > Rational::of(1, 1))
            throw InvalidThresholds("build_variable: thresholds must lie in [0,1]");

    // first-component numerator range for region xi of the rho_xi grid:
    // ceil(rho*psi_xi) <= n0 <= floor(rho*psi_{xi-1})
    auto bound = [](const Rational& psi, std::size_t rho, bool ceil_mode) {
        const std::int64_t q = psi.num * static_cast<std::int64_t>(rho);
        std::int64_t b = q / psi.den;
        if (ceil_mode && b * psi.den < q) ++b;
        return b;
    };

    std::uint64_t predicted = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges(rhos.size());
    for (std::size_t xi = 0; xi < rhos.size(); ++xi) {
        const Rational upper = xi == 0 ? Rational::of(1, 1) : thresholds[xi - 1];
        const std::int64_t lo = bound(thresholds[xi], rhos[xi], true);
        const std::int64_t hi =
            std::min<std::int64_t>(bound(upper, rhos[xi], false), rhos[xi]);
        ranges[xi] = {lo, hi};
        if (lo <= hi)
            predicted += detail::count_first_range(rhos[xi], n_states, lo, hi);
        if (predicted > cap)
            throw ResourceBound("build_variable: grid exceeds cap " + std::to_string(cap));
    }

    GridSet g;
    g.n_states = n_states;
    g.meta = VariableMeta{rhos, thresholds};
    std::set<std::vector<std::int64_t>> seen; // canonical (den, nums...) keys
    for (std::size_t xi = 0; xi < rhos.size(); ++xi) {
        const auto [lo, hi] = ranges[xi];
        if (lo > hi) continue;
        std::vector<RationalPoint> region;
        detail::enumerate_compositions(rhos[xi], n_states, lo, hi, region);
        for (auto& rp : region) {
            rp.canonicalize();
            std::vector<std::int64_t> key;
            key.reserve(rp.num.size() + 1);
            key.push_back(rp.den);
            key.insert(key.end(), rp.num.begin(), rp.num.end());
            if (seen.insert(std::move(key)).second) g.rationals.push_back(std::move(rp));
        }
    }
    std::sort(g.rationals.begin(), g.rationals.end(), RationalPoint::lex_value_greater);
    for (const auto& rp : g.rationals) g.points.push_back(rp.to_belief());
    return g;
}

/// Convenience overload taking decimal threshold values (0.96, 0.8, ...).
inline GridSet build_variable(const std::vector<std::size_t>& rhos,
                              const std::vector<real>& thresholds, std::size_t n_states,
                              std::uint64_t cap = default_grid_cap) {
    std::vector<Rational> exact;
    exact.reserve(thresholds.size());
    for (real v : thresholds) exact.push_back(Rational::from_decimal(v));
    return build_variable(rhos, exact, n_states, cap);
}

/// Index of an exactly matching grid point, or size() when absent.
inline std::size_t find_point(const GridSet& g, const Belief& b, real tol = 1e-12) {
    for (std::size_t k = 0; k < g.points.size(); ++k) {
        real dist = 0;
        for (std::size_t i = 0; i < b.size(); ++i) dist += std::abs(g.points[k][i] - b[i]);
        if (dist <= tol) return k;
    }
    return g.size();
}

} // namespace cpomdp
