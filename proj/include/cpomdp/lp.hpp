// Linear and mixed-integer linear solving behind a minimal backend-neutral
// interface. The reference backend is an in-tree bounded-variable revised
// simplex (two-phase, product-form inverse with triangularity-seeking
// reinversion, warm-startable) plus best-bound branch and bound for binaries.
//
// Every pivoting decision is deterministic (largest violation, ties by
// lowest index; Bland's rule after a degenerate stall), so repeated solves
// of the same program yield identical reports.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "cpomdp/common.hpp"

namespace cpomdp::lp {

inline constexpr real inf = std::numeric_limits<real>::infinity();

enum class Sense { minimize, maximize };
enum class RowSense { le, eq, ge };

enum class Status { optimal, infeasible, unbounded, limit, error };

inline const char* to_string(Status s) {
    switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::limit: return "limit";
    default: return "error";
    }
}

struct SolveParams {
    real feas_tol = 1e-7;  // bound violation tolerated on basic values
    real opt_tol = 1e-9;   // reduced-cost optimality tolerance
    real int_tol = 1e-7;   // integrality tolerance for binaries
    real mip_gap = 1e-6;   // relative branch-and-bound gap
    double time_limit_s = 0;         // 0 = none (branch and bound)
    std::size_t iteration_limit = 0; // 0 = automatic
    std::size_t node_limit = 2000000;
};

/// Basis status per column (structural variables first, then one slack per
/// row); reusable as a warm start for a program with the same shape.
enum class VarStatus : unsigned char { basic, at_lower, at_upper, free_nb };
struct Basis {
    std::vector<VarStatus> cols;
    bool empty() const { return cols.empty(); }
};

struct SolveReport {
    Status status = Status::error;
    real objective = 0;
    numvec x;        // structural variable values (empty unless optimal/limit)
    Basis basis;     // final basis, for warm starts (LP solves only)
    std::size_t iterations = 0;
    std::size_t nodes = 0;
    double wall_time_s = 0;
};

/// A mutable LP/MILP under construction. Variable and row indices are dense
/// and stable: they never change after creation.
class ProgramHandle {
  public:
    struct Var {
        real lb = 0, ub = inf;
        bool binary = false;
        std::string name;
    };
    struct Row {
        std::vector<std::pair<std::size_t, real>> coefs;
        RowSense sense = RowSense::le;
        real rhs = 0;
        std::string name;
    };

    std::size_t add_var(real lb, real ub, real obj_coef = 0, std::string name = {}) {
        vars_.push_back({lb, ub, false, std::move(name)});
        obj_.push_back(obj_coef);
        return vars_.size() - 1;
    }
    std::size_t add_binary(real obj_coef = 0, std::string name = {}) {
        vars_.push_back({0, 1, true, std::move(name)});
        obj_.push_back(obj_coef);
        return vars_.size() - 1;
    }
    std::size_t add_row(std::vector<std::pair<std::size_t, real>> coefs, RowSense sense,
                        real rhs, std::string name = {}) {
        rows_.push_back({std::move(coefs), sense, rhs, std::move(name)});
        return rows_.size() - 1;
    }

    void set_objective_sense(Sense s) { sense_ = s; }
    void set_objective(std::size_t var, real coef) { obj_[var] = coef; }
    void set_rhs(std::size_t row, real rhs) { rows_[row].rhs = rhs; }
    void set_bounds(std::size_t var, real lb, real ub) {
        vars_[var].lb = lb;
        vars_[var].ub = ub;
    }
    void set_binary(std::size_t var, bool binary) { vars_[var].binary = binary; }

    std::size_t n_vars() const { return vars_.size(); }
    std::size_t n_rows() const { return rows_.size(); }
    const Var& var(std::size_t j) const { return vars_[j]; }
    const Row& row(std::size_t i) const { return rows_[i]; }
    real objective_coef(std::size_t j) const { return obj_[j]; }
    Sense objective_sense() const { return sense_; }
    bool has_binaries() const {
        return std::any_of(vars_.begin(), vars_.end(), [](const Var& v) { return v.binary; });
    }

  private:
    std::vector<Var> vars_;
    std::vector<Row> rows_;
    numvec obj_;
    Sense sense_ = Sense::maximize;
};

namespace detail {

// One product-form update: B_new^{-1} = E(r, w) B_old^{-1} with w = B^{-1} a_q.
struct Eta {
    std::size_t r;
    std::vector<std::pair<std::size_t, real>> w; // sparse, includes (r, w_r)
    real wr;
};

struct Matrix { // column-wise sparse storage of [A | I]
    std::size_t m = 0, n_total = 0;
    std::vector<std::size_t> col_start;
    std::vector<std::size_t> row_index;
    numvec value;

    void scatter_column(std::size_t j, numvec& dense) const {
        for (std::size_t p = col_start[j]; p < col_start[j + 1]; ++p)
            dense[row_index[p]] = value[p];
    }
};

class Simplex {
  public:
    Simplex(const ProgramHandle& p, const SolveParams& params)
        : prog_(p), par_(params), m_(p.n_rows()), n_(p.n_vars()) {
        build_matrix();
        if (par_.iteration_limit == 0) par_.iteration_limit = 20000 + 40 * (m_ + n_);
    }

    // Bounds are passed per run so branch and bound can fix binaries without
    // touching the program.
    SolveReport run(const numvec& lb, const numvec& ub, const Basis* warm) {
        lb_.assign(lb.begin(), lb.end());
        ub_.assign(ub.begin(), ub.end());
        append_slack_bounds();
        const bool warm_ok =
            warm && warm->cols.size() == total_ &&
            std::count(warm->cols.begin(), warm->cols.end(), VarStatus::basic) ==
                static_cast<std::ptrdiff_t>(m_);
        bool factored = false;
        if (warm_ok) {
            load_basis(*warm);
            factored = refactorize();
        }
        if (!factored) {
            slack_basis();
            if (!refactorize()) return {}; // cannot happen: identity basis
        }
        compute_basics();

        SolveReport rep;
        rep.status = iterate();
        rep.iterations = iterations_;
        if (rep.status == Status::optimal) {
            rep.x.assign(n_, 0.0);
            for (std::size_t j = 0; j < n_; ++j)
                if (status_[j] != VarStatus::basic) rep.x[j] = resting_value(j);
            for (std::size_t i = 0; i < m_; ++i)
                if (basic_[i] < n_) rep.x[basic_[i]] = xb_[i];
            real obj = 0;
            for (std::size_t j = 0; j < n_; ++j) obj += prog_.objective_coef(j) * rep.x[j];
            rep.objective = obj;
            rep.basis.cols.assign(status_.begin(), status_.end());
        }
        return rep;
    }

  private:
    const ProgramHandle& prog_;
    SolveParams par_;
    std::size_t m_, n_, total_ = 0;
    Matrix mat_;
    numvec cost_; // internal minimization costs
    numvec lb_, ub_;
    std::vector<VarStatus> status_;
    std::vector<std::size_t> basic_;
    std::vector<Eta> etas_;
    std::size_t factored_etas_ = 0;
    numvec xb_;
    std::size_t iterations_ = 0;
    std::size_t degenerate_streak_ = 0;
    bool bland_ = false;
    numvec work_;

    void build_matrix() {
        total_ = n_ + m_;
        mat_.m = m_;
        mat_.n_total = total_;
        std::vector<std::size_t> count(total_, 0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& [j, v] : prog_.row(i).coefs)
                if (v != 0) ++count[j];
            ++count[n_ + i];
        }
        mat_.col_start.assign(total_ + 1, 0);
        for (std::size_t j = 0; j < total_; ++j)
            mat_.col_start[j + 1] = mat_.col_start[j] + count[j];
        mat_.row_index.resize(mat_.col_start.back());
        mat_.value.resize(mat_.col_start.back());
        std::vector<std::size_t> fill(mat_.col_start.begin(), mat_.col_start.end() - 1);
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& [j, v] : prog_.row(i).coefs)
                if (v != 0) {
                    mat_.row_index[fill[j]] = i;
                    mat_.value[fill[j]] = v;
                    ++fill[j];
                }
            mat_.row_index[fill[n_ + i]] = i;
            mat_.value[fill[n_ + i]] = 1.0;
            ++fill[n_ + i];
        }
        const real sgn = prog_.objective_sense() == Sense::maximize ? -1.0 : 1.0;
        cost_.assign(total_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) cost_[j] = sgn * prog_.objective_coef(j);
        work_.assign(m_, 0.0);
    }

    void append_slack_bounds() {
        lb_.resize(total_);
        ub_.resize(total_);
        for (std::size_t i = 0; i < m_; ++i) {
            switch (prog_.row(i).sense) {
            case RowSense::le: lb_[n_ + i] = 0; ub_[n_ + i] = inf; break;
            case RowSense::ge: lb_[n_ + i] = -inf; ub_[n_ + i] = 0; break;
            case RowSense::eq: lb_[n_ + i] = 0; ub_[n_ + i] = 0; break;
            }
        }
    }

    VarStatus nonbasic_resting_status(std::size_t j) const {
        if (std::isfinite(lb_[j])) return VarStatus::at_lower;
        if (std::isfinite(ub_[j])) return VarStatus::at_upper;
        return VarStatus::free_nb;
    }

    void slack_basis() {
        status_.resize(total_);
        for (std::size_t j = 0; j < n_; ++j) status_[j] = nonbasic_resting_status(j);
        basic_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            basic_[i] = n_ + i;
            status_[n_ + i] = VarStatus::basic;
        }
    }

    void load_basis(const Basis& warm) {
        status_.assign(warm.cols.begin(), warm.cols.end());
        basic_.clear();
        for (std::size_t j = 0; j < total_; ++j)
            if (status_[j] == VarStatus::basic) basic_.push_back(j);
        for (std::size_t j = 0; j < total_; ++j) {
            if (status_[j] == VarStatus::basic) continue;
            if ((status_[j] == VarStatus::at_lower && !std::isfinite(lb_[j])) ||
                (status_[j] == VarStatus::at_upper && !std::isfinite(ub_[j])))
                status_[j] = nonbasic_resting_status(j);
            if (lb_[j] == ub_[j]) status_[j] = VarStatus::at_lower;
        }
    }

    real resting_value(std::size_t j) const {
        switch (status_[j]) {
        case VarStatus::at_lower: return lb_[j];
        case VarStatus::at_upper: return ub_[j];
        default: return 0;
        }
    }

    // --- factorization ------------------------------------------------------

    void ftran(numvec& v) const {
        for (const Eta& e : etas_) {
            const real t = v[e.r] / e.wr;
            v[e.r] = t;
            if (t == 0) continue;
            for (const auto& [i, wi] : e.w)
                if (i != e.r) v[i] -= wi * t;
        }
    }

    void btran(numvec& y) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            const Eta& e = *it;
            real s = 0;
            for (const auto& [i, wi] : e.w)
                if (i != e.r) s += y[i] * wi;
            y[e.r] = (y[e.r] - s) / e.wr;
        }
    }

    // Reinverts the current basis. Columns are eliminated fewest-active-rows
    // first (exact for the triangular flow bases this solver mostly sees);
    // the pivot row is chosen from the *transformed* column, largest
    // magnitude first. Returns false on a singular basis.
    bool refactorize() {
        etas_.clear();
        factored_etas_ = 0;

        std::vector<std::size_t> active_rows_of_col(m_, 0);
        std::vector<std::vector<std::size_t>> cols_in_row(m_);
        for (std::size_t bpos = 0; bpos < m_; ++bpos) {
            const std::size_t j = basic_[bpos];
            active_rows_of_col[bpos] = mat_.col_start[j + 1] - mat_.col_start[j];
            for (std::size_t p = mat_.col_start[j]; p < mat_.col_start[j + 1]; ++p)
                cols_in_row[mat_.row_index[p]].push_back(bpos);
        }
        std::vector<char> col_done(m_, 0), row_done(m_, 0);
        std::vector<std::size_t> new_basic(m_, 0);
        numvec& v = work_;

        for (std::size_t step = 0; step < m_; ++step) {
            // next column: fewest remaining active rows, lowest index on ties
            std::size_t bpos = m_;
            std::size_t best_count = SIZE_MAX;
            for (std::size_t c = 0; c < m_; ++c)
                if (!col_done[c] && active_rows_of_col[c] < best_count) {
                    best_count = active_rows_of_col[c];
                    bpos = c;
                }
            if (bpos == m_) return false;

            const std::size_t j = basic_[bpos];
            std::fill(v.begin(), v.end(), 0.0);
            mat_.scatter_column(j, v);
            ftran(v);
            std::size_t pr = m_;
            real pv = 0;
            for (std::size_t i = 0; i < m_; ++i)
                if (!row_done[i] && std::abs(v[i]) > std::abs(pv)) {
                    pv = v[i];
                    pr = i;
                }
            if (pr == m_ || std::abs(pv) < 1e-11) return false;

            Eta e;
            e.r = pr;
            for (std::size_t i = 0; i < m_; ++i)
                if (v[i] != 0) e.w.push_back({i, v[i]});
            e.wr = pv;
            etas_.push_back(std::move(e));

            col_done[bpos] = 1;
            row_done[pr] = 1;
            new_basic[pr] = j;
            for (std::size_t other : cols_in_row[pr])
                if (!col_done[other] && active_rows_of_col[other] > 0)
                    --active_rows_of_col[other];
        }
        basic_ = std::move(new_basic);
        factored_etas_ = etas_.size();
        return true;
    }

    void compute_basics() {
        numvec rhs(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) rhs[i] = prog_.row(i).rhs;
        for (std::size_t j = 0; j < total_; ++j) {
            if (status_[j] == VarStatus::basic) continue;
            const real xj = resting_value(j);
            if (xj == 0) continue;
            for (std::size_t p = mat_.col_start[j]; p < mat_.col_start[j + 1]; ++p)
                rhs[mat_.row_index[p]] -= mat_.value[p] * xj;
        }
        ftran(rhs);
        xb_ = std::move(rhs);
    }

    bool basis_feasible() const {
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = basic_[i];
            if (xb_[i] < lb_[j] - par_.feas_tol || xb_[i] > ub_[j] + par_.feas_tol)
                return false;
        }
        return true;
    }

    // --- primal loop ---------------------------------------------------------

    enum class Phase { one, two };

    Status iterate() {
        if (!basis_feasible()) {
            const Status s = phase_loop(Phase::one);
            if (s != Status::optimal) return s == Status::unbounded ? Status::error : s;
            if (!basis_feasible()) return Status::infeasible;
        }
        return phase_loop(Phase::two);
    }

    Status phase_loop(Phase ph) {
        numvec y(m_);
        while (true) {
            if (++iterations_ > par_.iteration_limit) return Status::limit;
            if (etas_.size() > factored_etas_ + std::max<std::size_t>(60, m_ / 8)) {
                if (!refactorize()) return Status::error;
                compute_basics();
            }
            if (ph == Phase::one && basis_feasible()) return Status::optimal;

            // duals under the phase cost vector (phase 1: +-1 on infeasible
            // basics, 0 elsewhere)
            std::fill(y.begin(), y.end(), 0.0);
            bool any_cost = false;
            for (std::size_t i = 0; i < m_; ++i) {
                const std::size_t j = basic_[i];
                real c;
                if (ph == Phase::two) {
                    c = cost_[j];
                } else if (xb_[i] < lb_[j] - par_.feas_tol) {
                    c = -1.0;
                } else if (xb_[i] > ub_[j] + par_.feas_tol) {
                    c = 1.0;
                } else {
                    c = 0.0;
                }
                y[i] = c;
                if (c != 0) any_cost = true;
            }
            if (ph == Phase::two) any_cost = true;
            if (!any_cost) return Status::optimal;
            btran(y);

            // pricing
            std::size_t q = total_;
            int dir = 0;
            real best_viol = par_.opt_tol;
            for (std::size_t j = 0; j < total_; ++j) {
                if (status_[j] == VarStatus::basic || lb_[j] == ub_[j]) continue;
                real dj = ph == Phase::two ? cost_[j] : 0.0;
                for (std::size_t p = mat_.col_start[j]; p < mat_.col_start[j + 1]; ++p)
                    dj -= y[mat_.row_index[p]] * mat_.value[p];
                int this_dir = 0;
                real viol = 0;
                if (status_[j] == VarStatus::at_lower) {
                    if (dj < -par_.opt_tol) { viol = -dj; this_dir = 1; }
                } else if (status_[j] == VarStatus::at_upper) {
                    if (dj > par_.opt_tol) { viol = dj; this_dir = -1; }
                } else { // free
                    if (std::abs(dj) > par_.opt_tol) {
                        viol = std::abs(dj);
                        this_dir = dj < 0 ? 1 : -1;
                    }
                }
                if (this_dir == 0) continue;
                if (bland_) { q = j; dir = this_dir; break; }
                if (viol > best_viol) {
                    best_viol = viol;
                    q = j;
                    dir = this_dir;
                }
            }
            if (q == total_) return Status::optimal;

            numvec& w = work_;
            std::fill(w.begin(), w.end(), 0.0);
            mat_.scatter_column(q, w);
            ftran(w);

            // ratio test against basic bounds; in phase 1 an infeasible basic
            // blocks at the bound it is violating (restoring feasibility)
            const real sigma = static_cast<real>(dir);
            real t_basic = inf;
            std::size_t leave = m_;
            bool leave_at_upper = false;
            for (std::size_t i = 0; i < m_; ++i) {
                const real delta = sigma * w[i];
                if (std::abs(delta) < 1e-11) continue;
                const std::size_t bj = basic_[i];
                const bool below = ph == Phase::one && xb_[i] < lb_[bj] - par_.feas_tol;
                const bool above = ph == Phase::one && xb_[i] > ub_[bj] + par_.feas_tol;
                real target;
                bool target_upper;
                if (below) {
                    if (delta > 0) continue; // drifting further below lb: no block
                    target = lb_[bj];
                    target_upper = false;
                } else if (above) {
                    if (delta < 0) continue; // drifting further above ub: no block
                    target = ub_[bj];
                    target_upper = true;
                } else if (delta > 0) { // feasible basic decreasing
                    target = lb_[bj];
                    target_upper = false;
                } else { // feasible basic increasing
                    target = ub_[bj];
                    target_upper = true;
                }
                if (!std::isfinite(target)) continue;
                real limit = (xb_[i] - target) / delta;
                if (limit < 0) limit = 0; // tolerate tiny bound violations
                bool take = false;
                if (limit < t_basic - 1e-12) {
                    take = true;
                } else if (limit <= t_basic + 1e-12 && leave != m_) {
                    // tie: larger pivot magnitude wins, then lower column index
                    const real cur = std::abs(w[leave]);
                    if (std::abs(w[i]) > cur + 1e-12) take = true;
                    else if (std::abs(std::abs(w[i]) - cur) <= 1e-12 && basic_[i] < basic_[leave])
                        take = true;
                }
                if (take) {
                    t_basic = std::min(t_basic, limit);
                    leave = i;
                    leave_at_upper = target_upper;
                }
            }

            real t_flip = inf;
            if (std::isfinite(lb_[q]) && std::isfinite(ub_[q])) t_flip = ub_[q] - lb_[q];

            if (!std::isfinite(t_basic) && !std::isfinite(t_flip))
                return ph == Phase::one ? Status::error : Status::unbounded;

            if (t_flip < t_basic - 1e-12) {
                // entering variable swings to its other bound, no basis change
                for (std::size_t i = 0; i < m_; ++i) xb_[i] -= sigma * t_flip * w[i];
                status_[q] = dir > 0 ? VarStatus::at_upper : VarStatus::at_lower;
                track_degeneracy(t_flip);
                continue;
            }

            const real t = t_basic;
            const std::size_t out = basic_[leave];
            const real enter_val = resting_value(q) + sigma * t;
            for (std::size_t i = 0; i < m_; ++i) xb_[i] -= sigma * t * w[i];
            xb_[leave] = enter_val;
            status_[out] = leave_at_upper ? VarStatus::at_upper : VarStatus::at_lower;
            status_[q] = VarStatus::basic;
            basic_[leave] = q;

            Eta e;
            e.r = leave;
            for (std::size_t i = 0; i < m_; ++i)
                if (w[i] != 0) e.w.push_back({i, w[i]});
            e.wr = w[leave];
            if (std::abs(e.wr) < 1e-11) { // too unstable to update incrementally
                if (!refactorize()) return Status::error;
                compute_basics();
            } else {
                etas_.push_back(std::move(e));
            }
            track_degeneracy(t);
        }
    }

    void track_degeneracy(real step) {
        if (step <= 1e-12) {
            if (++degenerate_streak_ > 60) bland_ = true;
        } else {
            degenerate_streak_ = 0;
            bland_ = false;
        }
    }
};

struct BBNode {
    real bound;
    std::size_t id;
    numvec lb, ub;
    Basis basis;
};

} // namespace detail

/// Solves the continuous relaxation (binaries treated as [0,1]).
inline SolveReport solve_lp_relaxation(const ProgramHandle& p, const SolveParams& params = {},
                                       const Basis* warm = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    numvec lb(p.n_vars()), ub(p.n_vars());
    for (std::size_t j = 0; j < p.n_vars(); ++j) {
        lb[j] = p.var(j).lb;
        ub[j] = p.var(j).ub;
    }
    detail::Simplex s(p, params);
    SolveReport rep = s.run(lb, ub, warm);
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

/// Solve entry point: revised simplex for LPs, best-bound branch and bound
/// over the binaries for MILPs.
inline SolveReport solve(const ProgramHandle& p, const SolveParams& params = {},
                         const Basis* warm = nullptr) {
    if (!p.has_binaries()) return solve_lp_relaxation(p, params, warm);

    const auto start = std::chrono::steady_clock::now();
    const bool maximize = p.objective_sense() == Sense::maximize;
    auto better = [&](real a, real b) { return maximize ? a > b : a < b; };

    numvec lb0(p.n_vars()), ub0(p.n_vars());
    for (std::size_t j = 0; j < p.n_vars(); ++j) {
        lb0[j] = p.var(j).lb;
        ub0[j] = p.var(j).ub;
    }

    detail::Simplex root_solver(p, params);
    SolveReport root = root_solver.run(lb0, ub0, warm);
    if (root.status != Status::optimal) {
        root.nodes = 1;
        root.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return root;
    }

    auto node_cmp = [maximize](const detail::BBNode& a, const detail::BBNode& b) {
        if (a.bound != b.bound) return maximize ? a.bound < b.bound : a.bound > b.bound;
        return a.id > b.id;
    };
    std::priority_queue<detail::BBNode, std::vector<detail::BBNode>, decltype(node_cmp)>
        open(node_cmp);
    std::size_t next_id = 0;
    open.push({root.objective, next_id++, std::move(lb0), std::move(ub0), root.basis});

    SolveReport incumbent;
    incumbent.status = Status::infeasible;
    std::size_t nodes = 0, iterations = 0;
    bool hit_limit = false;

    auto most_fractional = [&](const numvec& x) {
        std::size_t best = p.n_vars();
        real best_frac = params.int_tol;
        for (std::size_t j = 0; j < p.n_vars(); ++j) {
            if (!p.var(j).binary) continue;
            const real f = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
            if (f > best_frac + 1e-15) {
                best_frac = f;
                best = j;
            }
        }
        return best;
    };

    while (!open.empty()) {
        if (nodes >= params.node_limit) { hit_limit = true; break; }
        if (params.time_limit_s > 0 &&
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >
                params.time_limit_s) {
            hit_limit = true;
            break;
        }
        detail::BBNode node = open.top();
        open.pop();
        ++nodes;
        if (incumbent.status == Status::optimal) {
            const real ref = std::max<real>(1.0, std::abs(incumbent.objective));
            const real margin = params.mip_gap * ref;
            if (maximize ? node.bound <= incumbent.objective + margin
                         : node.bound >= incumbent.objective - margin)
                continue; // cannot beat the incumbent by more than the gap
        }
        detail::Simplex s(p, params);
        SolveReport r = s.run(node.lb, node.ub, node.basis.empty() ? nullptr : &node.basis);
        iterations += r.iterations;
        if (r.status == Status::unbounded) {
            r.nodes = nodes;
            r.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            return r;
        }
        if (r.status != Status::optimal) continue;
        if (incumbent.status == Status::optimal && !better(r.objective, incumbent.objective))
            continue;
        const std::size_t frac = most_fractional(r.x);
        if (frac == p.n_vars()) {
            incumbent = r;
            continue;
        }
        for (int side = 0; side < 2; ++side) {
            detail::BBNode child{r.objective, next_id++, node.lb, node.ub, r.basis};
            if (side == 0)
                child.ub[frac] = 0;
            else
                child.lb[frac] = 1;
            open.push(std::move(child));
        }
    }

    incumbent.nodes = nodes;
    incumbent.iterations = iterations;
    incumbent.basis = Basis{}; // MILP bases are node-specific, not reusable
    if (incumbent.status != Status::optimal && hit_limit) incumbent.status = Status::limit;
    incumbent.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return incumbent;
}

} // namespace cpomdp::lp
