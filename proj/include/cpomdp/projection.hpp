// Convex-combination projection of beliefs onto a grid, the precomputed
// beta tables for every (epoch, action, observation, grid point), and the
// induced grid-to-grid transition tensor f of the approximate MDP.
//
// f encodes the diagnosis exits: for a screening action and a positive
// observation only the healthy (false positive) mass continues, so screening
// rows sum to one minus the diagnosed mass; wait rows are stochastic.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

#include "cpomdp/grid.hpp"
#include "cpomdp/lp.hpp"
#include "cpomdp/model.hpp"

namespace cpomdp {

/// Sparse nonnegative weights over grid indices.
using SparseWeights = std::vector<std::pair<std::size_t, real>>;

/// The beta objective is pluggable; the paper's source for the projection LP
/// is not reproduced, so the artifact ships the value-independent
/// distance-minimizing choice.
enum class ProjectionStrategy { min_l1_distance };

/// Expresses b as a convex combination of grid points by LP: minimize the
/// distance-weighted mass sum over {beta >= 0, sum beta = 1,
/// sum_l beta_l g^l = b}. A basic optimal solution is returned, so at most
/// |S| weights are nonzero. Requires the grid to contain all vertices.
inline SparseWeights project(const Belief& b, const GridSet& grid,
                             ProjectionStrategy strategy = ProjectionStrategy::min_l1_distance) {
    (void)strategy; // a single strategy ships; the seam is the parameter
    const std::size_t K = grid.size(), S = grid.n_states;
    if (!grid.contains_vertices())
        throw SpanError("project: grid must contain every simplex vertex");

    lp::ProgramHandle p;
    p.set_objective_sense(lp::Sense::minimize);
    for (std::size_t l = 0; l < K; ++l) {
        real dist = 0;
        for (std::size_t i = 0; i < S; ++i) dist += std::abs(grid.points[l][i] - b[i]);
        p.add_var(0.0, 1.0, dist);
    }
    // component rows (last one is implied by the convexity row)
    for (std::size_t i = 0; i + 1 < S; ++i) {
        std::vector<std::pair<std::size_t, real>> row;
        for (std::size_t l = 0; l < K; ++l)
            if (grid.points[l][i] != 0) row.push_back({l, grid.points[l][i]});
        p.add_row(std::move(row), lp::RowSense::eq, b[i]);
    }
    std::vector<std::pair<std::size_t, real>> ones;
    ones.reserve(K);
    for (std::size_t l = 0; l < K; ++l) ones.push_back({l, 1.0});
    p.add_row(std::move(ones), lp::RowSense::eq, 1.0);

    const lp::SolveReport r = lp::solve(p);
    if (r.status != lp::Status::optimal)
        throw SpanError("project: projection LP not optimal (" +
                        std::string(lp::to_string(r.status)) + ")");
    SparseWeights w;
    for (std::size_t l = 0; l < K; ++l)
        if (r.x[l] > 1e-12) w.push_back({l, r.x[l]});
    return w;
}

/// Beta rows for every (t, a, theta, source grid point); rows whose
/// observation has zero likelihood at the source point are marked absent.
struct BetaTables {
    std::size_t T = 0, A = 0, K = 0;
    std::vector<SparseWeights> rows;
    std::vector<char> present;

    std::size_t index(std::size_t t, std::size_t a, std::size_t theta, std::size_t k) const {
        return ((t * A + a) * 2 + theta) * K + k;
    }
    const SparseWeights& row(std::size_t t, std::size_t a, std::size_t theta,
                             std::size_t k) const {
        return rows[index(t, a, theta, k)];
    }
    bool has_row(std::size_t t, std::size_t a, std::size_t theta, std::size_t k) const {
        return present[index(t, a, theta, k)] != 0;
    }
};

/// Grid transition rows f[t][a][source] -> sparse over destinations.
struct FTensor {
    std::size_t T = 0, A = 0, K = 0;
    std::vector<SparseWeights> rows;

    std::size_t index(std::size_t t, std::size_t a, std::size_t src) const {
        return (t * A + a) * K + src;
    }
    const SparseWeights& row(std::size_t t, std::size_t a, std::size_t src) const {
        return rows[index(t, a, src)];
    }
    real row_sum(std::size_t t, std::size_t a, std::size_t src) const {
        real s = 0;
        for (const auto& [k, v] : row(t, a, src)) s += v;
        return s;
    }
};

struct ProjectionTables {
    BetaTables beta;
    FTensor f;
};

/// Probability of observing theta from grid point g under (t, a); the
/// in-process transition rows are stochastic, so transitions drop out.
inline real observation_likelihood(const Belief& g, std::size_t t, std::size_t a,
                                   std::size_t theta, const ModelSpec& m) {
    real l = 0;
    for (std::size_t i = 0; i < m.n_states(); ++i)
        l += g[i] * m.observation_prob[t][a][i][theta];
    return l;
}

inline BetaTables build_beta_tables(const ModelSpec& m, const GridSet& grid) {
    BetaTables bt;
    bt.T = m.horizon;
    bt.A = m.n_actions();
    bt.K = grid.size();
    bt.rows.assign(bt.T * bt.A * 2 * bt.K, {});
    bt.present.assign(bt.rows.size(), 0);
    for (std::size_t t = 0; t < bt.T; ++t)
        for (std::size_t a = 0; a < bt.A; ++a)
            for (std::size_t theta = 0; theta < 2; ++theta)
                for (std::size_t k = 0; k < bt.K; ++k) {
                    if (observation_likelihood(grid.points[k], t, a, theta, m) <= 0)
                        continue; // absent row
                    const Belief next = belief_update(grid.points[k], t, a, theta, m);
                    const std::size_t idx = bt.index(t, a, theta, k);
                    bt.rows[idx] = project(next, grid);
                    bt.present[idx] = 1;
                }
    return bt;
}

/// The case-split transition build: wait actions and negative screening
/// outcomes carry their full observation likelihood; positive screening
/// outcomes carry only the healthy row (true positives exit the process).
inline FTensor build_f(const ModelSpec& m, const GridSet& grid, const BetaTables& beta) {
    FTensor f;
    f.T = m.horizon;
    f.A = m.n_actions();
    f.K = grid.size();
    f.rows.assign(f.T * f.A * f.K, {});
    for (std::size_t t = 0; t < f.T; ++t)
        for (std::size_t a = 0; a < f.A; ++a)
            for (std::size_t src = 0; src < f.K; ++src) {
                std::map<std::size_t, real> acc;
                for (std::size_t theta = 0; theta < 2; ++theta) {
                    real coef;
                    if (a == m.wait_action || theta == obs_negative) {
                        coef = observation_likelihood(grid.points[src], t, a, theta, m);
                    } else {
                        coef = grid.points[src][0] * m.observation_prob[t][a][0][theta];
                    }
                    if (coef <= 0 || !beta.has_row(t, a, theta, src)) continue;
                    for (const auto& [dst, w] : beta.row(t, a, theta, src))
                        acc[dst] += coef * w;
                }
                SparseWeights row;
                row.reserve(acc.size());
                for (const auto& [dst, v] : acc)
                    if (v > 0) row.push_back({dst, v});
                f.rows[f.index(t, a, src)] = std::move(row);
            }
    return f;
}

inline ProjectionTables build_projection_tables(const ModelSpec& m, const GridSet& grid) {
    ProjectionTables pt;
    pt.beta = build_beta_tables(m, grid);
    pt.f = build_f(m, grid, pt.beta);
    return pt;
}

// ---------------------------------------------------------------------------
// Binary cache, keyed by a content hash of (model, grid)
// ---------------------------------------------------------------------------

namespace detail {

inline void fnv_mix(std::uint64_t& h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
}

template <typename T> void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T> bool read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return static_cast<bool>(in);
}

inline void write_rows(std::ofstream& out, const std::vector<SparseWeights>& rows) {
    write_pod(out, static_cast<std::uint64_t>(rows.size()));
    for (const auto& row : rows) {
        write_pod(out, static_cast<std::uint32_t>(row.size()));
        for (const auto& [idx, w] : row) {
            write_pod(out, static_cast<std::uint32_t>(idx));
            write_pod(out, w);
        }
    }
}

inline bool read_rows(std::ifstream& in, std::vector<SparseWeights>& rows) {
    std::uint64_t n = 0;
    if (!read_pod(in, n)) return false;
    rows.assign(n, {});
    for (auto& row : rows) {
        std::uint32_t len = 0;
        if (!read_pod(in, len)) return false;
        row.resize(len);
        for (auto& [idx, w] : row) {
            std::uint32_t i32 = 0;
            if (!read_pod(in, i32) || !read_pod(in, w)) return false;
            idx = i32;
        }
    }
    return true;
}

} // namespace detail

/// Hash of everything the tables depend on; numeric content included bitwise.
inline std::uint64_t projection_content_hash(const ModelSpec& m, const GridSet& grid) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_real = [&h](real v) { detail::fnv_mix(h, &v, sizeof(v)); };
    auto mix_size = [&h](std::size_t v) {
        const std::uint64_t u = v;
        detail::fnv_mix(h, &u, sizeof(u));
    };
    mix_size(m.horizon);
    mix_size(m.n_states());
    mix_size(m.n_actions());
    mix_size(m.wait_action);
    for (std::size_t t = 0; t < m.horizon; ++t)
        for (std::size_t a = 0; a < m.n_actions(); ++a)
            for (std::size_t i = 0; i < m.n_states(); ++i) {
                for (real v : m.transition[t][a][i]) mix_real(v);
                for (real v : m.observation_prob[t][a][i]) mix_real(v);
            }
    mix_size(grid.size());
    for (const auto& rp : grid.rationals) {
        mix_size(static_cast<std::size_t>(rp.den));
        for (auto n : rp.num) mix_size(static_cast<std::size_t>(n));
    }
    return h;
}

inline constexpr char projection_cache_magic[8] = {'C', 'P', 'F', 'T', '1', '\n', 0, 0};

inline void save_projection_tables(const ProjectionTables& pt, std::uint64_t content_hash,
                                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write projection cache: " + path);
    out.write(projection_cache_magic, sizeof(projection_cache_magic));
    detail::write_pod(out, content_hash);
    detail::write_pod(out, static_cast<std::uint64_t>(pt.beta.T));
    detail::write_pod(out, static_cast<std::uint64_t>(pt.beta.A));
    detail::write_pod(out, static_cast<std::uint64_t>(pt.beta.K));
    detail::write_rows(out, pt.beta.rows);
    out.write(reinterpret_cast<const char*>(pt.beta.present.data()),
              static_cast<std::streamsize>(pt.beta.present.size()));
    detail::write_rows(out, pt.f.rows);
}

/// Loads the cache if it exists and matches the hash; nullopt otherwise.
inline std::optional<ProjectionTables> load_projection_tables(std::uint64_t content_hash,
                                                              const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof(projection_cache_magic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, projection_cache_magic, sizeof(magic)) != 0)
        return std::nullopt;
    std::uint64_t h = 0;
    if (!detail::read_pod(in, h) || h != content_hash) return std::nullopt;
    std::uint64_t T = 0, A = 0, K = 0;
    if (!detail::read_pod(in, T) || !detail::read_pod(in, A) || !detail::read_pod(in, K))
        return std::nullopt;
    ProjectionTables pt;
    pt.beta.T = T;
    pt.beta.A = A;
    pt.beta.K = K;
    pt.f.T = T;
    pt.f.A = A;
    pt.f.K = K;
    if (!detail::read_rows(in, pt.beta.rows)) return std::nullopt;
    pt.beta.present.assign(pt.beta.rows.size(), 0);
    in.read(reinterpret_cast<char*>(pt.beta.present.data()),
            static_cast<std::streamsize>(pt.beta.present.size()));
    if (!in) return std::nullopt;
    if (!detail::read_rows(in, pt.f.rows)) return std::nullopt;
    return pt;
}

} // namespace cpomdp
