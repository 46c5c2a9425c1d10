// The approximate constrained-MDP occupancy-measure program over a belief
// grid: flow-balance constraints linking epochs through the f tensor, an
// expected-cost budget row, the QALY objective h1 (immediate + salvage on
// diagnosis + terminal), the mortality-risk objective h2 (diagnosed deaths,
// false-negative invasive deaths, untreated invasive deaths under wait),
// the deterministic-policy binary layer, and useful-grid elimination.
#pragma once

#include "cpomdp/bounds.hpp"
#include "cpomdp/grid.hpp"
#include "cpomdp/lp.hpp"
#include "cpomdp/model.hpp"
#include "cpomdp/projection.hpp"

namespace cpomdp {

struct OccupancyOptions {
    bool eliminate_unuseful = true;
    bool deterministic = false;
    bool with_epsilon_row = false;       // reserve an h2 <= eps row for sweeps
    std::optional<real> budget_override; // replaces the model budget
    bool ignore_budget = false;
};

/// The built program plus every index map needed to read solutions back.
struct OccupancyProgram {
    lp::ProgramHandle lp;
    std::size_t T = 0, K = 0, A = 0;
    std::size_t wait_action = 0;

    numvec delta;                        // initial distribution over grid points
    std::vector<std::vector<char>> useful; // [t][k] for t in 0..T (T = terminal)
    std::vector<std::size_t> x_index;    // flat (t*K + k)*A + a; SIZE_MAX if absent
    std::vector<std::size_t> xT_index;   // [k]; SIZE_MAX if absent
    std::vector<std::size_t> nu_index;   // flat like x_index; SIZE_MAX if absent
    std::optional<std::size_t> budget_row;
    std::optional<std::size_t> epsilon_row;
    real budget = 0;
    bool has_budget = false;

    numvec h1_coef, h2_coef, cost_coef;  // per structural variable
    std::size_t eliminated_variables = 0;

    // exit probability (diagnosed mass) per (t,k,a), for mass accounting
    numvec exit_mass;

    std::size_t x(std::size_t t, std::size_t k, std::size_t a) const {
        return x_index[(t * K + k) * A + a];
    }
    std::size_t xT(std::size_t k) const { return xT_index[k]; }
    std::size_t nu(std::size_t t, std::size_t k, std::size_t a) const {
        return nu_index[(t * K + k) * A + a];
    }
};

namespace detail {

// Forward reachability sweep of Proposition 1: epoch-0 useful set is the
// support of delta; afterwards a point is useful iff some useful point can
// reach it with positive probability under some action.
inline std::vector<std::vector<char>> useful_mask(const ModelSpec& m, const GridSet& grid,
                                                  const ProjectionTables& tables,
                                                  const numvec& delta) {
    const std::size_t T = m.horizon, K = grid.size(), A = m.n_actions();
    std::vector<std::vector<char>> mask(T + 1, std::vector<char>(K, 0));
    for (std::size_t k = 0; k < K; ++k) mask[0][k] = delta[k] > 0 ? 1 : 0;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            if (!mask[t][k]) continue;
            for (std::size_t a = 0; a < A; ++a)
                for (const auto& [dst, p] : tables.f.row(t, a, k))
                    if (p > 0) mask[t + 1][dst] = 1;
        }
    return mask;
}

} // namespace detail

/// h1 coefficient of one occupancy variable: immediate expected QALYs plus
/// the salvage expected on a positive screen from a cancer state.
inline real h1_coefficient(const ModelSpec& m, const GridSet& grid, std::size_t t,
                           std::size_t k, std::size_t a) {
    const Belief& b = grid.points[k];
    real c = 0;
    for (std::size_t i = 0; i < m.n_states(); ++i) c += b[i] * m.reward_qaly[t][a][i];
    if (m.is_screening(a))
        for (std::size_t i = 1; i < m.n_states(); ++i)
            c += b[i] * m.observation_prob[t][a][i][obs_positive] * m.salvage[t][i];
    return c;
}

/// h2 coefficient: diagnosed-then-die mass, plus invasive deaths behind a
/// false negative (screening) or while waiting. The invasive state is the
/// last core state by convention.
inline real h2_coefficient(const ModelSpec& m, const GridSet& grid, std::size_t t,
                           std::size_t k, std::size_t a) {
    const Belief& b = grid.points[k];
    const std::size_t inv = m.n_states() - 1;
    const real p_cancer_death = m.cancer_death_prob[t][a][inv];
    real c = 0;
    if (m.is_screening(a)) {
        for (std::size_t i = 1; i < m.n_states(); ++i)
            c += b[i] * m.observation_prob[t][a][i][obs_positive] *
                 m.post_diag_mortality[t][i];
        c += b[inv] * m.observation_prob[t][a][inv][obs_negative] * p_cancer_death;
    } else {
        for (std::size_t theta = 0; theta < 2; ++theta)
            c += b[inv] * m.observation_prob[t][a][inv][theta] * p_cancer_death;
    }
    return c;
}

inline void add_deterministic_constraints(OccupancyProgram& prog);

/// Builds the occupancy LP. The initial distribution is the projection of
/// pi0, so sum_k delta_k g^k = pi0 exactly up to the projection tolerance.
inline OccupancyProgram build_program(const ModelSpec& m, const GridSet& grid,
                                      const ProjectionTables& tables, const Belief& pi0,
                                      const OccupancyOptions& opts = {}) {
    if (m.discount != 1.0)
        throw ConfigError("occupancy program: the flow formulation requires discount 1");
    OccupancyProgram prog;
    prog.T = m.horizon;
    prog.K = grid.size();
    prog.A = m.n_actions();
    prog.wait_action = m.wait_action;

    prog.delta.assign(prog.K, 0.0);
    for (const auto& [k, w] : project(pi0, grid)) prog.delta[k] = w;

    if (opts.eliminate_unuseful) {
        prog.useful = detail::useful_mask(m, grid, tables, prog.delta);
    } else {
        prog.useful.assign(prog.T + 1, std::vector<char>(prog.K, 1));
    }

    const std::size_t T = prog.T, K = prog.K, A = prog.A;
    prog.x_index.assign(T * K * A, SIZE_MAX);
    prog.xT_index.assign(K, SIZE_MAX);
    prog.nu_index.assign(T * K * A, SIZE_MAX);

    // variables, time-major so the flow constraints are block-triangular
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            if (!prog.useful[t][k]) {
                prog.eliminated_variables += A;
                continue;
            }
            for (std::size_t a = 0; a < A; ++a)
                prog.x_index[(t * K + k) * A + a] = prog.lp.add_var(
                    0.0, lp::inf, 0.0,
                    "x_" + std::to_string(t) + "_" + std::to_string(k) + "_" +
                        std::to_string(a));
        }
    for (std::size_t k = 0; k < K; ++k) {
        if (!prog.useful[T][k]) {
            ++prog.eliminated_variables;
            continue;
        }
        prog.xT_index[k] = prog.lp.add_var(0.0, lp::inf, 0.0, "xT_" + std::to_string(k));
    }

    // initial-epoch balance rows
    for (std::size_t k = 0; k < K; ++k) {
        if (!prog.useful[0][k]) continue;
        std::vector<std::pair<std::size_t, real>> row;
        for (std::size_t a = 0; a < A; ++a) row.push_back({prog.x(0, k, a), 1.0});
        prog.lp.add_row(std::move(row), lp::RowSense::eq, prog.delta[k],
                        "balance_0_" + std::to_string(k));
    }
    // interior and terminal balance rows: inflows gathered per destination
    for (std::size_t t = 1; t <= T; ++t) {
        std::vector<std::vector<std::pair<std::size_t, real>>> inflow(K);
        for (std::size_t k = 0; k < K; ++k) {
            if (!prog.useful[t - 1][k]) continue;
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t xv = prog.x(t - 1, k, a);
                for (const auto& [dst, p] : tables.f.row(t - 1, a, k))
                    if (p > 0 && prog.useful[t][dst]) inflow[dst].push_back({xv, -p});
            }
        }
        for (std::size_t k = 0; k < K; ++k) {
            if (!prog.useful[t][k]) continue;
            std::vector<std::pair<std::size_t, real>> row;
            if (t < T) {
                for (std::size_t a = 0; a < A; ++a) row.push_back({prog.x(t, k, a), 1.0});
            } else {
                row.push_back({prog.xT(k), 1.0});
            }
            row.insert(row.end(), inflow[k].begin(), inflow[k].end());
            prog.lp.add_row(std::move(row), lp::RowSense::eq, 0.0,
                            "balance_" + std::to_string(t) + "_" + std::to_string(k));
        }
    }

    // budget row over the decision epochs
    std::optional<real> budget = opts.ignore_budget ? std::nullopt
                                 : opts.budget_override ? opts.budget_override
                                                        : m.budget;
    if (budget) {
        std::vector<std::pair<std::size_t, real>> row;
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t k = 0; k < K; ++k) {
                if (!prog.useful[t][k]) continue;
                for (std::size_t a = 0; a < A; ++a)
                    if (m.cost[a] != 0) row.push_back({prog.x(t, k, a), m.cost[a]});
            }
        prog.budget_row = prog.lp.add_row(std::move(row), lp::RowSense::le, *budget, "budget");
        prog.budget = *budget;
        prog.has_budget = true;
    }

    // objective and cost coefficient vectors
    const std::size_t n = prog.lp.n_vars();
    prog.h1_coef.assign(n, 0.0);
    prog.h2_coef.assign(n, 0.0);
    prog.cost_coef.assign(n, 0.0);
    prog.exit_mass.assign(T * K * A, 0.0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t k = 0; k < K; ++k) {
            if (!prog.useful[t][k]) continue;
            for (std::size_t a = 0; a < A; ++a) {
                const std::size_t xv = prog.x(t, k, a);
                prog.h1_coef[xv] = h1_coefficient(m, grid, t, k, a);
                prog.h2_coef[xv] = h2_coefficient(m, grid, t, k, a);
                prog.cost_coef[xv] = m.cost[a];
                real cont = 0;
                for (const auto& [dst, p] : tables.f.row(t, a, k)) cont += p;
                prog.exit_mass[(t * K + k) * A + a] = std::max(0.0, 1.0 - cont);
            }
        }
    for (std::size_t k = 0; k < K; ++k) {
        if (!prog.useful[T][k]) continue;
        real c = 0;
        for (std::size_t i = 0; i < m.n_states(); ++i)
            c += grid.points[k][i] * m.terminal[i];
        prog.h1_coef[prog.xT(k)] = c;
    }

    // optional h2 <= eps row, neutral until a sweep tightens it
    if (opts.with_epsilon_row) {
        std::vector<std::pair<std::size_t, real>> row;
        for (std::size_t j = 0; j < n; ++j)
            if (prog.h2_coef[j] != 0) row.push_back({j, prog.h2_coef[j]});
        prog.epsilon_row = prog.lp.add_row(std::move(row), lp::RowSense::le, lp::inf,
                                           "epsilon");
        prog.lp.set_rhs(*prog.epsilon_row, 1e30); // effectively inactive
    }

    if (opts.deterministic) add_deterministic_constraints(prog);
    return prog;
}

/// Eq.-(6) layer: one binary per useful (t,k,a), x linked by x <= nu and
/// exactly one action selected per useful (t,k).
inline void add_deterministic_constraints(OccupancyProgram& prog) {
    for (std::size_t t = 0; t < prog.T; ++t)
        for (std::size_t k = 0; k < prog.K; ++k) {
            if (!prog.useful[t][k]) continue;
            std::vector<std::pair<std::size_t, real>> one_action;
            for (std::size_t a = 0; a < prog.A; ++a) {
                const std::size_t nu = prog.lp.add_binary(
                    0.0, "nu_" + std::to_string(t) + "_" + std::to_string(k) + "_" +
                             std::to_string(a));
                prog.nu_index[(t * prog.K + k) * prog.A + a] = nu;
                prog.lp.add_row({{prog.x(t, k, a), 1.0}, {nu, -1.0}}, lp::RowSense::le,
                                0.0);
                one_action.push_back({nu, 1.0});
            }
            prog.lp.add_row(std::move(one_action), lp::RowSense::eq, 1.0);
        }
    const std::size_t n = prog.lp.n_vars();
    prog.h1_coef.resize(n, 0.0);
    prog.h2_coef.resize(n, 0.0);
    prog.cost_coef.resize(n, 0.0);
}

/// The spec's objective accessors: linear expressions over the program's
/// variables.
inline const numvec& objective_h1(const OccupancyProgram& prog) { return prog.h1_coef; }
inline const numvec& objective_h2(const OccupancyProgram& prog) { return prog.h2_coef; }

// ---------------------------------------------------------------------------
// Policies and solutions
// ---------------------------------------------------------------------------

/// Grid-indexed policy: an action distribution per useful (t, k); anything
/// unvisited falls back to wait (payoff-irrelevant under zero occupancy).
struct GridPolicy {
    std::size_t T = 0, K = 0;
    std::size_t wait_action = 0;
    struct Entry {
        bool defined = false;
        bool visited = false;
        std::vector<std::pair<std::size_t, real>> dist; // action, probability
    };
    std::vector<Entry> entries; // flat t*K + k

    const Entry* entry(std::size_t t, std::size_t k) const {
        const Entry& e = entries[t * K + k];
        return e.defined ? &e : nullptr;
    }
    /// Highest-probability action (deterministic lookup), wait by default.
    std::size_t map_action(std::size_t t, std::size_t k) const {
        const Entry* e = entry(t, k);
        if (!e || e->dist.empty()) return wait_action;
        std::size_t best = e->dist.front().first;
        real best_p = e->dist.front().second;
        for (const auto& [a, p] : e->dist)
            if (p > best_p + 1e-15) {
                best = a;
                best_p = p;
            }
        return best;
    }
};

struct OccupancySolution {
    lp::Status status = lp::Status::error;
    real objective = 0;  // value of the solved (possibly scaled) objective
    real h1 = 0, h2 = 0, expected_cost = 0;
    numvec x;
    GridPolicy policy;
    lp::Basis basis;
    std::size_t iterations = 0;
};

/// Reads the policy out of a solution vector: occupancy-weighted action
/// distributions, nu assignments in deterministic mode.
inline GridPolicy extract_policy(const OccupancyProgram& prog, const numvec& x,
                                 bool deterministic = false) {
    GridPolicy pol;
    pol.T = prog.T;
    pol.K = prog.K;
    pol.wait_action = prog.wait_action;
    pol.entries.assign(prog.T * prog.K, {});
    for (std::size_t t = 0; t < prog.T; ++t)
        for (std::size_t k = 0; k < prog.K; ++k) {
            if (!prog.useful[t][k]) continue;
            GridPolicy::Entry e;
            e.defined = true;
            real mass = 0;
            for (std::size_t a = 0; a < prog.A; ++a) mass += x[prog.x(t, k, a)];
            if (deterministic && prog.nu(t, k, 0) != SIZE_MAX) {
                std::size_t chosen = prog.wait_action;
                real best = -1;
                for (std::size_t a = 0; a < prog.A; ++a)
                    if (x[prog.nu(t, k, a)] > best) {
                        best = x[prog.nu(t, k, a)];
                        chosen = a;
                    }
                e.visited = mass > 1e-12;
                e.dist = {{chosen, 1.0}};
            } else if (mass > 1e-12) {
                e.visited = true;
                for (std::size_t a = 0; a < prog.A; ++a) {
                    const real p = x[prog.x(t, k, a)] / mass;
                    if (p > 1e-12) e.dist.push_back({a, p});
                }
            } else {
                e.visited = false;
                e.dist = {{prog.wait_action, 1.0}};
            }
            pol.entries[t * prog.K + k] = std::move(e);
        }
    return pol;
}

// ---------------------------------------------------------------------------
// Warm-start bases from policies
// ---------------------------------------------------------------------------

/// Basis of the flow solution induced by one action per useful (t,k): those
/// x variables plus the terminal x's are basic (the basis matrix is
/// block-triangular in time), every side-constraint slack is basic too.
inline lp::Basis policy_basis(const OccupancyProgram& prog,
                              const std::vector<std::size_t>& action_of) {
    lp::Basis b;
    b.cols.assign(prog.lp.n_vars() + prog.lp.n_rows(), lp::VarStatus::at_lower);
    std::size_t balance_rows = 0;
    for (std::size_t t = 0; t < prog.T; ++t)
        for (std::size_t k = 0; k < prog.K; ++k) {
            if (!prog.useful[t][k]) continue;
            const std::size_t a = action_of.empty() ? prog.wait_action
                                                    : action_of[t * prog.K + k];
            b.cols[prog.x(t, k, a)] = lp::VarStatus::basic;
            ++balance_rows;
        }
    for (std::size_t k = 0; k < prog.K; ++k)
        if (prog.useful[prog.T][k]) {
            b.cols[prog.xT(k)] = lp::VarStatus::basic;
            ++balance_rows;
        }
    // the remaining rows (budget, epsilon) keep their slacks basic
    for (std::size_t r = balance_rows; r < prog.lp.n_rows(); ++r)
        b.cols[prog.lp.n_vars() + r] = lp::VarStatus::basic;
    return b;
}

/// Exit-aware dynamic program on the grid MDP for an arbitrary linear
/// objective over the program's variables; great warm starts (and the exact
/// optimum when no side constraints bind).
inline std::vector<std::size_t> dp_policy(const OccupancyProgram& prog,
                                          const ProjectionTables& tables,
                                          const numvec& obj) {
    std::vector<std::size_t> action_of(prog.T * prog.K, prog.wait_action);
    numvec value(prog.K, 0.0), next(prog.K, 0.0);
    for (std::size_t k = 0; k < prog.K; ++k)
        if (prog.useful[prog.T][k]) value[k] = obj[prog.xT(k)];
    for (std::size_t t = prog.T; t-- > 0;) {
        for (std::size_t k = 0; k < prog.K; ++k) {
            if (!prog.useful[t][k]) {
                next[k] = 0;
                continue;
            }
            real best = -std::numeric_limits<real>::infinity();
            std::size_t best_a = prog.wait_action;
            for (std::size_t a = 0; a < prog.A; ++a) {
                real v = obj[prog.x(t, k, a)];
                for (const auto& [dst, p] : tables.f.row(t, a, k)) v += p * value[dst];
                if (v > best + 1e-15) {
                    best = v;
                    best_a = a;
                }
            }
            next[k] = best;
            action_of[t * prog.K + k] = best_a;
        }
        std::swap(value, next);
    }
    return action_of;
}

/// Solves the program for `maximize obj . x`, recomputing (h1, h2, cost)
/// from the solution vector. A warm basis may be supplied; otherwise the
/// program's own dynamic program seeds the solve.
inline OccupancySolution solve_occupancy(OccupancyProgram& prog,
                                         const ProjectionTables& tables, const numvec& obj,
                                         const lp::SolveParams& params = {},
                                         const lp::Basis* warm = nullptr) {
    for (std::size_t j = 0; j < prog.lp.n_vars(); ++j)
        prog.lp.set_objective(j, j < obj.size() ? obj[j] : 0.0);
    prog.lp.set_objective_sense(lp::Sense::maximize);

    lp::Basis seeded;
    const lp::Basis* start = warm;
    const bool milp = prog.lp.has_binaries();
    if (!start && !milp) {
        seeded = policy_basis(prog, dp_policy(prog, tables, obj));
        start = &seeded;
    }
    const lp::SolveReport rep = lp::solve(prog.lp, params, start);

    OccupancySolution sol;
    sol.status = rep.status;
    sol.iterations = rep.iterations;
    if (rep.status != lp::Status::optimal) return sol;
    sol.objective = rep.objective;
    sol.x = rep.x;
    sol.basis = rep.basis;
    for (std::size_t j = 0; j < rep.x.size(); ++j) {
        sol.h1 += prog.h1_coef[j] * rep.x[j];
        sol.h2 += prog.h2_coef[j] * rep.x[j];
        sol.expected_cost += prog.cost_coef[j] * rep.x[j];
    }
    sol.policy = extract_policy(prog, rep.x, milp);
    return sol;
}

/// Per-epoch in-process mass and cumulative diagnosed (exited) mass; the
/// two sum to one for every epoch of a feasible solution.
inline std::vector<std::pair<real, real>> mass_accounting(const OccupancyProgram& prog,
                                                          const numvec& x) {
    std::vector<std::pair<real, real>> out;
    real exited = 0;
    for (std::size_t t = 0; t < prog.T; ++t) {
        real mass = 0, exits = 0;
        for (std::size_t k = 0; k < prog.K; ++k) {
            if (!prog.useful[t][k]) continue;
            for (std::size_t a = 0; a < prog.A; ++a) {
                const real xv = x[prog.x(t, k, a)];
                mass += xv;
                exits += xv * prog.exit_mass[(t * prog.K + k) * prog.A + a];
            }
        }
        out.push_back({mass, exited});
        exited += exits;
    }
    real terminal_mass = 0;
    for (std::size_t k = 0; k < prog.K; ++k)
        if (prog.useful[prog.T][k]) terminal_mass += x[prog.xT(k)];
    out.push_back({terminal_mass, exited});
    return out;
}

} // namespace cpomdp
