// Unconstrained finite-horizon solvers used to validate the grid
// approximation: Monahan exhaustive enumeration (exact), the Lovejoy
// grid-restricted lower bound, the grid-MDP upper bound, and the optimality
// gap statistic.
//
// All three value the plain POMDP with the observation-then-transition order
// of events: QALY rewards r plus terminal rewards, every observation branch
// continuing. The upper bound follows from convexity of the value function:
// interpolating the continuation through grid weights can only overestimate.
#pragma once

#include <array>

#include "cpomdp/grid.hpp"
#include "cpomdp/lp.hpp"
#include "cpomdp/model.hpp"
#include "cpomdp/projection.hpp"
#include "cpomdp/rng.hpp"

namespace cpomdp {

struct DivisionByZero : Error {
    using Error::Error;
};

struct AlphaVector {
    numvec value;       // one entry per state
    std::size_t action; // generating action; SIZE_MAX for the terminal vector
};

/// Piecewise-linear value function: per-epoch alpha vectors, epochs 0..T
/// (epoch T holds the terminal vector).
struct AlphaSet {
    std::vector<std::vector<AlphaVector>> epochs;

    real value_at(std::size_t t, const Belief& pi) const {
        real best = -std::numeric_limits<real>::infinity();
        for (const AlphaVector& a : epochs[t]) {
            real v = 0;
            for (std::size_t i = 0; i < pi.size(); ++i) v += pi[i] * a.value[i];
            best = std::max(best, v);
        }
        return best;
    }
};

struct MonahanOptions {
    std::size_t vector_cap = 50000; // enumeration size guard per epoch
    real prune_tol = 1e-9;
};

namespace detail {

// alpha <= beta componentwise
inline bool pointwise_dominated(const numvec& alpha, const numvec& beta) {
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > beta[i]) return false;
    return true;
}

inline void remove_duplicates_and_pointwise(std::vector<AlphaVector>& vecs) {
    std::vector<char> dead(vecs.size(), 0);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        if (dead[i]) continue;
        for (std::size_t j = 0; j < vecs.size(); ++j) {
            if (i == j || dead[j]) continue;
            if (pointwise_dominated(vecs[j].value, vecs[i].value)) {
                // exact ties: keep the earlier one
                if (vecs[j].value == vecs[i].value && j < i) continue;
                dead[j] = 1;
            }
        }
    }
    std::vector<AlphaVector> kept;
    for (std::size_t i = 0; i < vecs.size(); ++i)
        if (!dead[i]) kept.push_back(std::move(vecs[i]));
    vecs = std::move(kept);
}

// Witness LP: the belief (if any) where alpha beats every vector in
// `others` by the largest margin (max d s.t. pi.(alpha - beta) >= d).
struct Witness {
    real margin;
    Belief pi;
};

inline Witness witness_lp(const numvec& alpha, const std::vector<const numvec*>& others) {
    const std::size_t S = alpha.size();
    lp::ProgramHandle p;
    for (std::size_t i = 0; i < S; ++i) p.add_var(0.0, 1.0, 0.0);
    const std::size_t d = p.add_var(-lp::inf, lp::inf, 1.0, "d");
    p.set_objective_sense(lp::Sense::maximize);
    for (const numvec* beta : others) {
        std::vector<std::pair<std::size_t, real>> row;
        for (std::size_t i = 0; i < S; ++i) {
            const real c = alpha[i] - (*beta)[i];
            if (c != 0) row.push_back({i, c});
        }
        row.push_back({d, -1.0});
        p.add_row(std::move(row), lp::RowSense::ge, 0.0);
    }
    std::vector<std::pair<std::size_t, real>> simplex_row;
    for (std::size_t i = 0; i < S; ++i) simplex_row.push_back({i, 1.0});
    p.add_row(std::move(simplex_row), lp::RowSense::eq, 1.0);
    const lp::SolveReport r = lp::solve(p);
    if (r.status != lp::Status::optimal)
        throw NumericalFailure("domination LP failed: " +
                               std::string(lp::to_string(r.status)));
    Witness w;
    w.margin = r.objective;
    w.pi.assign(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(S));
    return w;
}

// White/Lark filter: each LP runs against the retained set only, and the
// candidate that is best at the witness belief enters next. Deterministic
// candidate order, so deterministic output.
inline void lp_prune(std::vector<AlphaVector>& vecs, real tol) {
    remove_duplicates_and_pointwise(vecs);
    if (vecs.size() <= 1) return;
    const std::size_t S = vecs[0].value.size();
    std::vector<std::size_t> retained;
    std::vector<std::size_t> cand(vecs.size());
    for (std::size_t i = 0; i < cand.size(); ++i) cand[i] = i;

    auto move_best_at = [&](const Belief& pi) {
        std::size_t best_pos = 0;
        real best_v = -std::numeric_limits<real>::infinity();
        for (std::size_t pos = 0; pos < cand.size(); ++pos) {
            real v = 0;
            for (std::size_t i = 0; i < S; ++i) v += pi[i] * vecs[cand[pos]].value[i];
            if (v > best_v + 1e-15) {
                best_v = v;
                best_pos = pos;
            }
        }
        retained.push_back(cand[best_pos]);
        cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(best_pos));
    };

    // seed with the vector best at the uniform belief
    move_best_at(Belief(S, 1.0 / static_cast<real>(S)));
    while (!cand.empty()) {
        std::vector<const numvec*> others;
        others.reserve(retained.size());
        for (std::size_t r : retained) others.push_back(&vecs[r].value);
        const Witness w = witness_lp(vecs[cand.front()].value, others);
        if (w.margin <= tol) {
            cand.erase(cand.begin());
            continue;
        }
        move_best_at(w.pi);
    }
    std::sort(retained.begin(), retained.end());
    std::vector<AlphaVector> kept;
    kept.reserve(retained.size());
    for (std::size_t r : retained) kept.push_back(std::move(vecs[r]));
    vecs = std::move(kept);
}

// One-step alpha back-up, Eq.-(2) order: observation at the source state,
// then the transition.
inline AlphaVector backup(const ModelSpec& m, std::size_t t, std::size_t a,
                          const AlphaVector& succ_neg, const AlphaVector& succ_pos) {
    const std::size_t S = m.n_states();
    AlphaVector out;
    out.action = a;
    out.value.assign(S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        real v = m.reward_qaly[t][a][i];
        const std::array<const AlphaVector*, 2> succ{&succ_neg, &succ_pos};
        for (std::size_t theta = 0; theta < 2; ++theta) {
            const real z = m.observation_prob[t][a][i][theta];
            if (z == 0) continue;
            real cont = 0;
            for (std::size_t j = 0; j < S; ++j)
                cont += m.transition[t][a][i][j] * succ[theta]->value[j];
            v += m.discount * z * cont;
        }
        out.value[i] = v;
    }
    return out;
}

inline std::vector<AlphaVector> cross_sum_epoch(const ModelSpec& m, std::size_t t,
                                                const std::vector<AlphaVector>& next,
                                                std::size_t cap) {
    std::vector<AlphaVector> out;
    const std::size_t combos = next.size() * next.size() * m.n_actions();
    if (combos > cap)
        throw ResourceBound("alpha-vector enumeration needs " + std::to_string(combos) +
                            " candidates, cap is " + std::to_string(cap));
    for (std::size_t a = 0; a < m.n_actions(); ++a)
        for (const AlphaVector& sn : next)
            for (const AlphaVector& sp : next) {
                out.push_back(backup(m, t, a, sn, sp));
                // wait and screening-negative branches fully determine the
                // vector when the positive branch cannot continue anywhere
            }
    return out;
}

} // namespace detail

inline AlphaVector terminal_alpha(const ModelSpec& m) {
    return AlphaVector{m.terminal, SIZE_MAX};
}

/// Exhaustive enumeration with LP-domination pruning; exact optimal value
/// function of the screening POMDP.
inline AlphaSet monahan_exact(const ModelSpec& m, const MonahanOptions& opt = {}) {
    AlphaSet as;
    as.epochs.assign(m.horizon + 1, {});
    as.epochs[m.horizon] = {terminal_alpha(m)};
    for (std::size_t t = m.horizon; t-- > 0;) {
        std::vector<AlphaVector> cand =
            detail::cross_sum_epoch(m, t, as.epochs[t + 1], opt.vector_cap);
        detail::lp_prune(cand, opt.prune_tol);
        if (cand.size() > opt.vector_cap)
            throw ResourceBound("alpha-vector set exceeded cap after pruning");
        as.epochs[t] = std::move(cand);
    }
    return as;
}

/// Lovejoy lower bound: at each epoch only vectors that are optimal at some
/// grid point are retained, so the induced value never exceeds the exact one.
inline AlphaSet lovejoy_lb(const ModelSpec& m, const GridSet& grid,
                           const MonahanOptions& opt = {}) {
    AlphaSet as;
    as.epochs.assign(m.horizon + 1, {});
    as.epochs[m.horizon] = {terminal_alpha(m)};
    for (std::size_t t = m.horizon; t-- > 0;) {
        std::vector<AlphaVector> cand =
            detail::cross_sum_epoch(m, t, as.epochs[t + 1], opt.vector_cap);
        std::vector<char> keep(cand.size(), 0);
        for (const Belief& g : grid.points) {
            std::size_t best = 0;
            real best_v = -std::numeric_limits<real>::infinity();
            for (std::size_t c = 0; c < cand.size(); ++c) {
                real v = 0;
                for (std::size_t i = 0; i < g.size(); ++i) v += g[i] * cand[c].value[i];
                if (v > best_v + 1e-15) {
                    best_v = v;
                    best = c;
                }
            }
            keep[best] = 1;
        }
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (keep[c]) as.epochs[t].push_back(cand[c]);
    }
    return as;
}

/// Backward induction over grid points with beta-interpolated continuations;
/// values plus the greedy action per (epoch, grid point).
struct GridValueFunction {
    std::vector<numvec> value;               // [t][k], t in 0..T
    std::vector<std::vector<std::size_t>> action; // [t][k], t < T

    /// Value of an arbitrary belief: project, then interpolate.
    real value_at(std::size_t t, const Belief& pi, const GridSet& grid) const {
        real v = 0;
        for (const auto& [l, w] : project(pi, grid)) v += w * value[t][l];
        return v;
    }
};

inline GridValueFunction grid_ub(const ModelSpec& m, const GridSet& grid,
                                 const ProjectionTables& tables) {
    const std::size_t T = m.horizon, K = grid.size(), A = m.n_actions();
    GridValueFunction vf;
    vf.value.assign(T + 1, numvec(K, 0.0));
    vf.action.assign(T, std::vector<std::size_t>(K, m.wait_action));
    for (std::size_t k = 0; k < K; ++k) {
        real v = 0;
        for (std::size_t i = 0; i < m.n_states(); ++i)
            v += grid.points[k][i] * m.terminal[i];
        vf.value[T][k] = v;
    }
    for (std::size_t t = T; t-- > 0;) {
        for (std::size_t k = 0; k < K; ++k) {
            real best = -std::numeric_limits<real>::infinity();
            std::size_t best_a = m.wait_action;
            for (std::size_t a = 0; a < A; ++a) {
                real v = 0;
                for (std::size_t i = 0; i < m.n_states(); ++i)
                    v += grid.points[k][i] * m.reward_qaly[t][a][i];
                for (std::size_t theta = 0; theta < 2; ++theta) {
                    const real like = observation_likelihood(grid.points[k], t, a, theta, m);
                    if (like <= 0 || !tables.beta.has_row(t, a, theta, k)) continue;
                    real cont = 0;
                    for (const auto& [l, w] : tables.beta.row(t, a, theta, k))
                        cont += w * vf.value[t + 1][l];
                    v += m.discount * like * cont;
                }
                if (v > best + 1e-15) {
                    best = v;
                    best_a = a;
                }
            }
            vf.value[t][k] = best;
            vf.action[t][k] = best_a;
        }
    }
    return vf;
}

/// Optimality gap statistic, (ub - lb) / |lb|.
inline real gap(real lb, real ub) {
    if (lb == 0) throw DivisionByZero("gap: lower bound is zero");
    return (ub - lb) / std::abs(lb);
}

/// Seeded belief sampler stratified over the same threshold regions used for
/// grid construction: the region is drawn uniformly, pi_0 uniformly within
/// it, and the cancer mass split uniformly.
inline std::vector<Belief> sample_beliefs(std::size_t count, const std::vector<real>& psi,
                                          std::size_t n_states, std::uint64_t seed) {
    CounterRng rng(seed, 0xbe11ef);
    std::vector<Belief> out;
    out.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        const std::size_t region = static_cast<std::size_t>(
            rng.next_u64() % (psi.empty() ? 1 : psi.size()));
        const real hi = region == 0 ? 1.0 : psi[region - 1];
        const real lo = psi.empty() ? 0.0 : psi[region];
        const real pi0 = lo + (hi - lo) * rng.next_u01();
        Belief b(n_states, 0.0);
        b[0] = pi0;
        real rest = 1.0 - pi0;
        for (std::size_t i = 1; i + 1 < n_states; ++i) {
            const real share = rest * rng.next_u01();
            b[i] = share;
            rest -= share;
        }
        b[n_states - 1] = rest;
        out.push_back(std::move(b));
    }
    return out;
}

} // namespace cpomdp
