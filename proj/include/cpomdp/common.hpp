// Shared typedefs and error types for the cpomdp toolkit.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpomdp {

using real = double;
using numvec = std::vector<real>;
using indvec = std::vector<std::size_t>;

/// Belief over the partially observable states; components sum to one.
using Belief = numvec;

// Error hierarchy. validate() style diagnostics do not throw; these are for
// contract violations the caller cannot reasonably continue past.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bayes denominator is zero: the observation is impossible under the belief.
struct ZeroLikelihood : Error {
    using Error::Error;
};

/// A configured cap (grid size, alpha-vector count, ...) would be exceeded.
struct ResourceBound : Error {
    using Error::Error;
};

struct InvalidThresholds : Error {
    using Error::Error;
};

/// The grid does not span the simplex, so a belief cannot be projected.
struct SpanError : Error {
    using Error::Error;
};

struct SolverFailure : Error {
    using Error::Error;
};

struct NumericalFailure : Error {
    using Error::Error;
};

struct PolicyDomainError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

inline bool is_belief(const Belief& pi, real tol = 1e-9) {
    real sum = 0;
    for (real v : pi) {
        if (v < -tol) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

/// Days-to-years conversion used for all disutility accounting.
inline constexpr real days_to_years(real days) { return days / 365.0; }

} // namespace cpomdp
