#include <gtest/gtest.h>

#include <cstdio>
#include <random>

#include "cpomdp/projection.hpp"
#include "support/test_models.hpp"

using namespace cpomdp;
using cpomdp::testing::toy3;

namespace {

real reconstruct_error(const SparseWeights& w, const GridSet& g, const Belief& target) {
    Belief mix(g.n_states, 0.0);
    real mass = 0;
    for (const auto& [l, v] : w) {
        mass += v;
        for (std::size_t i = 0; i < g.n_states; ++i) mix[i] += v * g.points[l][i];
    }
    real err = std::abs(mass - 1.0);
    for (std::size_t i = 0; i < g.n_states; ++i)
        err = std::max(err, std::abs(mix[i] - target[i]));
    return err;
}

real weights_objective(const SparseWeights& w, const GridSet& g, const Belief& b) {
    real obj = 0;
    for (const auto& [l, v] : w) {
        real dist = 0;
        for (std::size_t i = 0; i < g.n_states; ++i) dist += std::abs(g.points[l][i] - b[i]);
        obj += v * dist;
    }
    return obj;
}

// Exhaustive oracle over basic solutions: every subset of <= |S| grid points,
// weights solved exactly; returns the minimum objective and whether the
// minimizing support is unique.
struct BruteResult {
    real objective = std::numeric_limits<real>::infinity();
    std::vector<std::pair<std::size_t, real>> weights;
    bool unique = true;
};

BruteResult brute_force_projection(const Belief& b, const GridSet& g) {
    const std::size_t K = g.size(), S = g.n_states;
    BruteResult best;
    std::vector<std::size_t> sel;
    auto try_subset = [&](const std::vector<std::size_t>& sub) {
        const std::size_t k = sub.size();
        // solve sum w_l g^l = b, sum w = 1 by least squares on the S+1 system
        std::vector<std::vector<real>> A(S + 1, std::vector<real>(k, 0.0));
        numvec rhs(S + 1, 0.0);
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < S; ++i) A[i][c] = g.points[sub[c]][i];
        for (std::size_t c = 0; c < k; ++c) A[S][c] = 1.0;
        for (std::size_t i = 0; i < S; ++i) rhs[i] = b[i];
        rhs[S] = 1.0;
        // Gaussian elimination on the normal equations (tiny, exactness ok)
        std::vector<std::vector<real>> N(k, std::vector<real>(k + 1, 0.0));
        for (std::size_t r = 0; r < k; ++r) {
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t i = 0; i <= S; ++i) N[r][c] += A[i][r] * A[i][c];
            for (std::size_t i = 0; i <= S; ++i) N[r][k] += A[i][r] * rhs[i];
        }
        for (std::size_t c = 0; c < k; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c; r < k; ++r)
                if (std::abs(N[r][c]) > std::abs(N[piv][c])) piv = r;
            if (std::abs(N[piv][c]) < 1e-12) return;
            std::swap(N[c], N[piv]);
            for (std::size_t r = 0; r < k; ++r) {
                if (r == c) continue;
                const real f = N[r][c] / N[c][c];
                for (std::size_t cc = c; cc <= k; ++cc) N[r][cc] -= f * N[c][cc];
            }
        }
        numvec w(k);
        for (std::size_t r = 0; r < k; ++r) w[r] = N[r][k] / N[r][r];
        // must actually solve the system and be a convex combination
        for (std::size_t i = 0; i <= S; ++i) {
            real acc = 0;
            for (std::size_t c = 0; c < k; ++c) acc += A[i][c] * w[c];
            if (std::abs(acc - rhs[i]) > 1e-9) return;
        }
        for (real v : w)
            if (v < -1e-9) return;
        real obj = 0;
        for (std::size_t c = 0; c < k; ++c) {
            real dist = 0;
            for (std::size_t i = 0; i < S; ++i)
                dist += std::abs(g.points[sub[c]][i] - b[i]);
            obj += std::max(w[c], 0.0) * dist;
        }
        if (obj < best.objective - 1e-10) {
            best.objective = obj;
            best.weights.clear();
            for (std::size_t c = 0; c < k; ++c)
                if (w[c] > 1e-12) best.weights.push_back({sub[c], w[c]});
            best.unique = true;
        } else if (obj < best.objective + 1e-10) {
            // same objective value with a different support
            std::vector<std::pair<std::size_t, real>> cand;
            for (std::size_t c = 0; c < k; ++c)
                if (w[c] > 1e-12) cand.push_back({sub[c], w[c]});
            if (cand != best.weights) best.unique = false;
        }
    };
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (!sel.empty()) try_subset(sel);
        if (sel.size() == S) return;
        for (std::size_t l = start; l < K; ++l) {
            sel.push_back(l);
            self(self, l + 1);
            sel.pop_back();
        }
    };
    rec(rec, 0);
    return best;
}

TEST(Project, GridPointProjectsToItself) {
    GridSet g = build_fixed(3, 3);
    for (std::size_t k = 0; k < g.size(); k += 2) {
        SparseWeights w = project(g.points[k], g);
        ASSERT_EQ(w.size(), 1u);
        EXPECT_EQ(w[0].first, k);
        EXPECT_NEAR(w[0].second, 1.0, 1e-9);
    }
}

TEST(Project, VertexProjectsToVertex) {
    GridSet g = build_fixed(2, 3);
    SparseWeights w = project({0.0, 0.0, 1.0}, g);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(g.points[w[0].first], (Belief{0, 0, 1}));
}

TEST(Project, KnownTwoPointCombination) {
    GridSet g = build_fixed(2, 3);
    const Belief b{0.75, 0.25, 0.0};
    SparseWeights w = project(b, g);
    BruteResult oracle = brute_force_projection(b, g);
    ASSERT_TRUE(oracle.unique);
    EXPECT_NEAR(weights_objective(w, g, b), oracle.objective, 1e-9);
    // the unique distance-minimizing basic solution: half on [1,0,0], half
    // on [1/2,1/2,0]
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(g.points[w[0].first], (Belief{1, 0, 0}));
    EXPECT_NEAR(w[0].second, 0.5, 1e-9);
    EXPECT_EQ(g.points[w[1].first], (Belief{0.5, 0.5, 0}));
    EXPECT_NEAR(w[1].second, 0.5, 1e-9);
}

TEST(Project, MatchesBruteForceObjectiveOnRandomBeliefs) {
    GridSet g = build_fixed(2, 3);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<real> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        real a = u(rng), b2 = u(rng);
        if (a > b2) std::swap(a, b2);
        Belief b{a, b2 - a, 1.0 - b2};
        SparseWeights w = project(b, g);
        EXPECT_LE(reconstruct_error(w, g, b), 1e-8);
        EXPECT_LE(w.size(), 3u);
        BruteResult oracle = brute_force_projection(b, g);
        EXPECT_NEAR(weights_objective(w, g, b), oracle.objective, 1e-8);
    }
}

TEST(Project, RefinementNeverIncreasesObjective) {
    GridSet coarse = build_fixed(2, 3);
    GridSet fine = build_fixed(4, 3); // superset of the coarse grid
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<real> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        real a = u(rng), b2 = u(rng);
        if (a > b2) std::swap(a, b2);
        Belief b{a, b2 - a, 1.0 - b2};
        const real obj_c = weights_objective(project(b, coarse), coarse, b);
        const real obj_f = weights_objective(project(b, fine), fine, b);
        EXPECT_LE(obj_f, obj_c + 1e-9);
    }
}

TEST(Project, SpanErrorWithoutVertices) {
    GridSet g = build_fixed(2, 3);
    // drop the first vertex
    g.points.erase(g.points.begin());
    g.rationals.erase(g.rationals.begin());
    EXPECT_THROW(project({0.9, 0.05, 0.05}, g), SpanError);
}

TEST(BetaTables, IdentityDynamicsUninformativeObservation) {
    using cpomdp::testing::make_toy;
    using cpomdp::testing::ToyParams;
    ToyParams tp;
    tp.horizon = 1;
    tp.n_actions = 2;
    tp.p_core = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    tp.death = {0, 0, 0};
    tp.cancer_death = {0, 0, 0};
    tp.sens = {0.5, 0.5};
    tp.spec = {0.5, 0.5};
    tp.cost = {0, 10};
    tp.screening_du_days = {0, 0};
    tp.salvage = {0, 0, 0};
    tp.q = {0, 0, 0};
    tp.terminal = {0, 0, 0};
    ModelSpec m = make_toy(tp);

    GridSet g = build_fixed(2, 3);
    BetaTables bt = build_beta_tables(m, g);
    for (std::size_t k = 0; k < g.size(); ++k)
        for (std::size_t theta = 0; theta < 2; ++theta) {
            ASSERT_TRUE(bt.has_row(0, 0, theta, k));
            const SparseWeights& row = bt.row(0, 0, theta, k);
            ASSERT_EQ(row.size(), 1u);
            EXPECT_EQ(row[0].first, k);
            EXPECT_NEAR(row[0].second, 1.0, 1e-9);
        }
}

TEST(BetaTables, ReconstructionInvariantHolds) {
    ModelSpec m = toy3(3);
    GridSet g = build_fixed(3, 3);
    BetaTables bt = build_beta_tables(m, g);
    for (std::size_t t = 0; t < m.horizon; ++t)
        for (std::size_t a = 0; a < m.n_actions(); ++a)
            for (std::size_t theta = 0; theta < 2; ++theta)
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (!bt.has_row(t, a, theta, k)) continue;
                    const Belief next = belief_update(g.points[k], t, a, theta, m);
                    EXPECT_LE(reconstruct_error(bt.row(t, a, theta, k), g, next), 1e-8);
                }
}

TEST(BetaTables, SpotRowMatchesPublicComposition) {
    ModelSpec m = toy3(2);
    GridSet g = build_fixed(3, 3);
    BetaTables bt = build_beta_tables(m, g);
    const std::size_t t = 1, a = 1, theta = obs_positive, k = 2;
    ASSERT_TRUE(bt.has_row(t, a, theta, k));
    SparseWeights direct = project(belief_update(g.points[k], t, a, theta, m), g);
    const SparseWeights& stored = bt.row(t, a, theta, k);
    ASSERT_EQ(stored.size(), direct.size());
    for (std::size_t i = 0; i < stored.size(); ++i) {
        EXPECT_EQ(stored[i].first, direct[i].first);
        EXPECT_NEAR(stored[i].second, direct[i].second, 1e-12);
    }
}

TEST(FTensor, AbsorbingHealthyCornerSelfLoop) {
    using cpomdp::testing::make_toy;
    using cpomdp::testing::ToyParams;
    ToyParams tp;
    tp.horizon = 1;
    tp.n_actions = 2;
    tp.p_core = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    tp.death = {0, 0, 0};
    tp.cancer_death = {0, 0, 0};
    tp.sens = {0.0, 0.8};
    tp.spec = {1.0, 1.0}; // perfect specificity
    tp.cost = {0, 10};
    tp.screening_du_days = {0, 0};
    tp.salvage = {0, 0, 0};
    tp.q = {0, 0, 0};
    tp.terminal = {0, 0, 0};
    ModelSpec m = make_toy(tp);
    GridSet g = build_fixed(2, 3);
    ProjectionTables pt = build_projection_tables(m, g);

    const std::size_t healthy = find_point(g, {1, 0, 0});
    ASSERT_LT(healthy, g.size());
    for (std::size_t a = 0; a < 2; ++a) {
        const SparseWeights& row = pt.f.row(0, a, healthy);
        ASSERT_EQ(row.size(), 1u);
        EXPECT_EQ(row[0].first, healthy);
        EXPECT_NEAR(row[0].second, 1.0, 1e-9);
    }
}

TEST(FTensor, WaitRowsStochasticScreeningRowsLeakDiagnosedMass) {
    ModelSpec m = toy3(3);
    GridSet g = build_fixed(3, 3);
    ProjectionTables pt = build_projection_tables(m, g);
    for (std::size_t t = 0; t < m.horizon; ++t)
        for (std::size_t src = 0; src < g.size(); ++src) {
            EXPECT_NEAR(pt.f.row_sum(t, 0, src), 1.0, 1e-8);
            // screening: deficit equals sensitivity times cancer mass
            const Belief& b = g.points[src];
            const real cancer = b[1] + b[2];
            const real expect = 1.0 - m.sensitivity[t][1] * cancer;
            EXPECT_NEAR(pt.f.row_sum(t, 1, src), expect, 1e-8);
            for (const auto& [dst, v] : pt.f.row(t, 1, src)) {
                EXPECT_GE(v, 0.0);
                EXPECT_LT(dst, g.size());
            }
        }
}

TEST(ProjectionCache, RoundTripAndHashMismatch) {
    ModelSpec m = toy3(2);
    GridSet g = build_fixed(2, 3);
    ProjectionTables pt = build_projection_tables(m, g);
    const std::uint64_t h = projection_content_hash(m, g);
    const std::string path = ::testing::TempDir() + "cpomdp_cache_test.bin";
    save_projection_tables(pt, h, path);
    auto loaded = load_projection_tables(h, path);
    ASSERT_TRUE(loaded.has_value());
    ASSERT_EQ(loaded->beta.rows.size(), pt.beta.rows.size());
    for (std::size_t i = 0; i < pt.beta.rows.size(); ++i)
        EXPECT_EQ(loaded->beta.rows[i], pt.beta.rows[i]);
    for (std::size_t i = 0; i < pt.f.rows.size(); ++i)
        EXPECT_EQ(loaded->f.rows[i], pt.f.rows[i]);
    EXPECT_FALSE(load_projection_tables(h + 1, path).has_value());
    std::remove(path.c_str());
}

} // namespace
