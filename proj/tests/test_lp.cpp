#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cpomdp/lp.hpp"
#include "cpomdp/lp_format.hpp"

using namespace cpomdp;
using namespace cpomdp::lp;

namespace {

TEST(Simplex, TrivialBoundedMax) {
    ProgramHandle p;
    auto x = p.add_var(0, inf, 1.0, "x");
    p.add_row({{x, 1.0}}, RowSense::le, 3.0);
    p.set_objective_sense(Sense::maximize);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    EXPECT_NEAR(r.objective, 3.0, 1e-9);
    EXPECT_NEAR(r.x[x], 3.0, 1e-9);
}

TEST(Simplex, InfeasiblePair) {
    ProgramHandle p;
    auto x = p.add_var(0, inf, 1.0, "x");
    p.add_row({{x, 1.0}}, RowSense::le, 0.0);
    p.add_row({{x, 1.0}}, RowSense::ge, 1.0);
    auto r = solve(p);
    EXPECT_EQ(r.status, Status::infeasible);
}

TEST(Simplex, Unbounded) {
    ProgramHandle p;
    auto x = p.add_var(0, inf, 1.0, "x");
    auto y = p.add_var(0, inf, 0.0, "y");
    p.add_row({{x, 1.0}, {y, -1.0}}, RowSense::le, 1.0);
    p.set_objective_sense(Sense::maximize);
    auto r = solve(p);
    EXPECT_EQ(r.status, Status::unbounded);
}

TEST(Simplex, EqualityAndNegativeRhs) {
    // min x + y  s.t.  x - y = -2, x + y >= 4, 0 <= x, y
    ProgramHandle p;
    p.set_objective_sense(Sense::minimize);
    auto x = p.add_var(0, inf, 1.0, "x");
    auto y = p.add_var(0, inf, 1.0, "y");
    p.add_row({{x, 1.0}, {y, -1.0}}, RowSense::eq, -2.0);
    p.add_row({{x, 1.0}, {y, 1.0}}, RowSense::ge, 4.0);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    EXPECT_NEAR(r.objective, 4.0, 1e-8);
    EXPECT_NEAR(r.x[x], 1.0, 1e-8);
    EXPECT_NEAR(r.x[y], 3.0, 1e-8);
}

TEST(Simplex, FreeAndUpperBoundedVariables) {
    // max 2x + y, x free, -3 <= y <= 5, x + y <= 4, x <= 2.5
    ProgramHandle p;
    auto x = p.add_var(-inf, inf, 2.0, "x");
    auto y = p.add_var(-3.0, 5.0, 1.0, "y");
    p.add_row({{x, 1.0}, {y, 1.0}}, RowSense::le, 4.0);
    p.add_row({{x, 1.0}}, RowSense::le, 2.5);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    EXPECT_NEAR(r.objective, 2.0 * 2.5 + 1.5, 1e-8);
}

TEST(Simplex, DegenerateProblemTerminates) {
    // many redundant rows through the origin
    ProgramHandle p;
    auto x = p.add_var(0, inf, 1.0, "x");
    auto y = p.add_var(0, inf, 1.0, "y");
    for (int k = 1; k <= 8; ++k)
        p.add_row({{x, static_cast<real>(k)}, {y, 1.0}}, RowSense::le, 0.0);
    p.add_row({{x, 1.0}, {y, 1.0}}, RowSense::le, 1.0);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    EXPECT_NEAR(r.objective, 0.0, 1e-9);
}

// Brute-force LP oracle: enumerate all basic solutions of {A x ~ b} with
// simple bounds by trying every subset of active constraints; only suitable
// for <= 3 variables. Dense Gaussian solve per subset.
real brute_force_lp_max(const ProgramHandle& p) {
    const std::size_t n = p.n_vars();
    std::vector<std::vector<real>> planes; // a . x = rhs candidates
    for (std::size_t i = 0; i < p.n_rows(); ++i) {
        std::vector<real> a(n + 1, 0.0);
        for (auto [j, v] : p.row(i).coefs) a[j] = v;
        a[n] = p.row(i).rhs;
        planes.push_back(a);
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(p.var(j).lb)) {
            std::vector<real> a(n + 1, 0.0);
            a[j] = 1;
            a[n] = p.var(j).lb;
            planes.push_back(a);
        }
        if (std::isfinite(p.var(j).ub)) {
            std::vector<real> a(n + 1, 0.0);
            a[j] = 1;
            a[n] = p.var(j).ub;
            planes.push_back(a);
        }
    }
    real best = -inf;
    const std::size_t P = planes.size();
    std::vector<std::size_t> idx(n);
    auto feasible = [&](const std::vector<real>& x) {
        for (std::size_t j = 0; j < n; ++j)
            if (x[j] < p.var(j).lb - 1e-7 || x[j] > p.var(j).ub + 1e-7) return false;
        for (std::size_t i = 0; i < p.n_rows(); ++i) {
            real act = 0;
            for (auto [j, v] : p.row(i).coefs) act += v * x[j];
            const auto& row = p.row(i);
            if (row.sense == RowSense::le && act > row.rhs + 1e-7) return false;
            if (row.sense == RowSense::ge && act < row.rhs - 1e-7) return false;
            if (row.sense == RowSense::eq && std::abs(act - row.rhs) > 1e-7) return false;
        }
        return true;
    };
    auto consider = [&](std::vector<std::size_t> sel) {
        // solve the n x n system
        std::vector<std::vector<real>> A(n, std::vector<real>(n + 1, 0.0));
        for (std::size_t r = 0; r < n; ++r) A[r] = planes[sel[r]];
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c; r < n; ++r)
                if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
            if (std::abs(A[piv][c]) < 1e-10) return;
            std::swap(A[c], A[piv]);
            for (std::size_t r = 0; r < n; ++r) {
                if (r == c) continue;
                const real f = A[r][c] / A[c][c];
                for (std::size_t k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
            }
        }
        std::vector<real> x(n);
        for (std::size_t r = 0; r < n; ++r) x[r] = A[r][n] / A[r][r];
        if (!feasible(x)) return;
        real obj = 0;
        for (std::size_t j = 0; j < n; ++j) obj += p.objective_coef(j) * x[j];
        best = std::max(best, obj);
    };
    // all subsets of size n
    std::vector<std::size_t> sel(n);
    auto rec = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
        if (depth == n) {
            consider(sel);
            return;
        }
        for (std::size_t i = start; i < P; ++i) {
            sel[depth] = i;
            self(self, i + 1, depth + 1);
        }
    };
    rec(rec, 0, 0);
    return best;
}

TEST(Simplex, RandomSmallProblemsAgainstEnumeration) {
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<real> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> rows(2, 6);
    int verified = 0;
    for (int trial = 0; trial < 120; ++trial) {
        ProgramHandle p;
        const std::size_t n = 2 + (trial % 2);
        for (std::size_t j = 0; j < n; ++j) p.add_var(0.0, 4.0, coef(rng));
        const int R = rows(rng);
        for (int i = 0; i < R; ++i) {
            std::vector<std::pair<std::size_t, real>> terms;
            for (std::size_t j = 0; j < n; ++j) terms.push_back({j, coef(rng)});
            p.add_row(terms, RowSense::le, std::uniform_real_distribution<real>(0.5, 6.0)(rng));
        }
        p.set_objective_sense(Sense::maximize);
        auto r = solve(p);
        ASSERT_EQ(r.status, Status::optimal); // box-bounded, origin feasible
        const real oracle = brute_force_lp_max(p);
        EXPECT_NEAR(r.objective, oracle, 1e-6) << "trial " << trial;
        ++verified;
    }
    EXPECT_EQ(verified, 120);
}

TEST(Simplex, WarmStartReachesSameOptimum) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<real> coef(-2.0, 2.0);
    ProgramHandle p;
    for (int j = 0; j < 10; ++j) p.add_var(0.0, 5.0, coef(rng));
    for (int i = 0; i < 8; ++i) {
        std::vector<std::pair<std::size_t, real>> terms;
        for (std::size_t j = 0; j < 10; ++j) terms.push_back({j, coef(rng)});
        p.add_row(terms, RowSense::le, 4.0);
    }
    auto cold = solve(p);
    ASSERT_EQ(cold.status, Status::optimal);
    // perturb the objective, warm start from the old basis
    p.set_objective(3, p.objective_coef(3) + 0.25);
    auto warm = solve(p, {}, &cold.basis);
    auto cold2 = solve(p);
    ASSERT_EQ(warm.status, Status::optimal);
    ASSERT_EQ(cold2.status, Status::optimal);
    EXPECT_NEAR(warm.objective, cold2.objective, 1e-8);
    EXPECT_LE(warm.iterations, cold2.iterations + 5);
}

TEST(Simplex, DeterministicRepeatedSolves) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<real> coef(-2.0, 2.0);
    ProgramHandle p;
    for (int j = 0; j < 12; ++j) p.add_var(0.0, 2.0, coef(rng));
    for (int i = 0; i < 10; ++i) {
        std::vector<std::pair<std::size_t, real>> terms;
        for (std::size_t j = 0; j < 12; ++j) terms.push_back({j, coef(rng)});
        p.add_row(terms, i % 2 ? RowSense::le : RowSense::ge, i % 2 ? 3.0 : -3.0);
    }
    auto a = solve(p);
    auto b = solve(p);
    ASSERT_EQ(a.status, b.status);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.x, b.x); // bitwise identical paths
}

TEST(Milp, SmallBinaryKnapsack) {
    // max x1 + x2 s.t. x1 + x2 <= 1.5, binary -> 1
    ProgramHandle p;
    auto x1 = p.add_binary(1.0, "x1");
    auto x2 = p.add_binary(1.0, "x2");
    p.add_row({{x1, 1.0}, {x2, 1.0}}, RowSense::le, 1.5);
    auto r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    EXPECT_NEAR(r.objective, 1.0, 1e-9);
    EXPECT_NEAR(r.x[x1] + r.x[x2], 1.0, 1e-7);
}

TEST(Milp, MatchesBinaryEnumeration) {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<real> coef(-2.0, 3.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t nb = 6;
        ProgramHandle p;
        numvec c(nb), w(nb);
        for (std::size_t j = 0; j < nb; ++j) {
            c[j] = coef(rng);
            w[j] = std::abs(coef(rng)) + 0.1;
            p.add_binary(c[j]);
        }
        std::vector<std::pair<std::size_t, real>> terms;
        for (std::size_t j = 0; j < nb; ++j) terms.push_back({j, w[j]});
        const real cap = std::uniform_real_distribution<real>(0.5, 4.0)(rng);
        p.add_row(terms, RowSense::le, cap);
        auto r = solve(p);
        ASSERT_EQ(r.status, Status::optimal);
        real best = -inf;
        for (unsigned mask = 0; mask < (1u << nb); ++mask) {
            real obj = 0, wt = 0;
            for (std::size_t j = 0; j < nb; ++j)
                if (mask & (1u << j)) {
                    obj += c[j];
                    wt += w[j];
                }
            if (wt <= cap + 1e-9) best = std::max(best, obj);
        }
        EXPECT_NEAR(r.objective, best, 1e-7) << "trial " << trial;
    }
}

TEST(LpFormat, RoundTripSolvesToSameObjective) {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<real> coef(-2.0, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        ProgramHandle p;
        for (int j = 0; j < 5; ++j) p.add_var(j % 2 ? -1.0 : 0.0, 3.0, coef(rng));
        p.add_var(-inf, inf, 0.5, "fr");
        for (int i = 0; i < 6; ++i) {
            std::vector<std::pair<std::size_t, real>> terms;
            for (std::size_t j = 0; j < p.n_vars(); ++j) {
                const real v = coef(rng);
                if (std::abs(v) > 0.3) terms.push_back({j, v});
            }
            if (terms.empty()) terms.push_back({0, 1.0});
            p.add_row(terms, i % 3 == 0 ? RowSense::eq : RowSense::le, coef(rng) + 3.0);
        }
        // keep it bounded
        for (std::size_t j = 0; j < p.n_vars(); ++j)
            if (!std::isfinite(p.var(j).ub)) p.set_bounds(j, p.var(j).lb, 5.0);
        auto direct = solve(p);
        if (direct.status != Status::optimal) continue;
        std::ostringstream os;
        write_lp(p, os);
        std::istringstream is(os.str());
        ProgramHandle q = read_lp(is);
        auto reread = solve(q);
        ASSERT_EQ(reread.status, Status::optimal) << os.str();
        EXPECT_NEAR(direct.objective, reread.objective, 1e-8) << os.str();
    }
}

TEST(LpFormat, BinarySectionRoundTrip) {
    ProgramHandle p;
    p.add_binary(2.0, "b0");
    p.add_var(0, 2, 1.0, "y");
    p.add_row({{0, 1.0}, {1, 1.0}}, RowSense::le, 2.5);
    std::ostringstream os;
    write_lp(p, os);
    std::istringstream is(os.str());
    ProgramHandle q = read_lp(is);
    EXPECT_TRUE(q.has_binaries());
    auto a = solve(p), b = solve(q);
    ASSERT_EQ(a.status, Status::optimal);
    ASSERT_EQ(b.status, Status::optimal);
    EXPECT_NEAR(a.objective, b.objective, 1e-9);
}

} // namespace
