// Hand-built model instances and a seeded random-instance generator shared
// by the unit and acceptance suites.
#pragma once

#include <cstdint>
#include <random>

#include "cpomdp/model.hpp"

namespace cpomdp::testing {

/// Raw ingredients for a small instance; everything is broadcast over epochs.
struct ToyParams {
    std::size_t horizon = 2;
    std::size_t n_actions = 2; // wait + one screen unless overridden
    std::vector<numvec> p_core; // [S][S] sub-stochastic core rows (pre-normalization)
    numvec death;               // [S] total death mass per state
    numvec cancer_death;        // [S] death-by-cancer share
    numvec sens;                // [A]
    numvec spec;                // [A]
    numvec cost;                // [A]
    numvec screening_du_days;   // [A]
    real tp_du_days = 0;
    real fp_du_days = 0;
    numvec salvage;  // [S]
    numvec q;        // [S]
    numvec terminal; // [S]
    std::optional<real> budget;
};

inline ModelSpec make_toy(const ToyParams& tp) {
    ModelSpec m;
    const std::size_t S = tp.p_core.size();
    m.horizon = tp.horizon;
    m.states.resize(S);
    for (std::size_t i = 0; i < S; ++i) m.states[i] = "s" + std::to_string(i);
    m.absorbing_states = {"death-cancer", "death-other"};
    m.actions.resize(tp.n_actions);
    m.actions[0] = "W";
    for (std::size_t a = 1; a < tp.n_actions; ++a) m.actions[a] = "A" + std::to_string(a);
    m.observations = {"neg", "pos"};

    const std::size_t T = m.horizon, A = tp.n_actions;
    m.transition.assign(T, {});
    m.death_prob.assign(T, {});
    m.cancer_death_prob.assign(T, {});
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t a = 0; a < A; ++a) {
            std::vector<numvec> p(S, numvec(S, 0.0));
            for (std::size_t i = 0; i < S; ++i) {
                const real alive = 1.0 - tp.death[i];
                real row_sum = 0;
                for (std::size_t j = 0; j < S; ++j) row_sum += tp.p_core[i][j];
                for (std::size_t j = 0; j < S; ++j)
                    p[i][j] = row_sum > 0 && alive > 0 ? tp.p_core[i][j] / row_sum : (i == j);
            }
            m.transition[t].push_back(p);
            m.death_prob[t].push_back(tp.death);
            m.cancer_death_prob[t].push_back(tp.cancer_death);
        }
    m.action_independent_transitions = true;

    m.sensitivity.assign(T, tp.sens);
    m.specificity.assign(T, tp.spec);
    m.cost = tp.cost;
    m.screening_disutility_days = tp.screening_du_days;
    m.tp_disutility_days = tp.tp_du_days;
    m.fp_disutility_days = tp.fp_du_days;
    m.salvage.assign(T, tp.salvage);
    m.post_diag_mortality.assign(T, tp.q);
    m.terminal = tp.terminal;
    m.budget = tp.budget;
    m.label = "toy";
    finalize_model(m);
    return m;
}

/// 3-state, 2-action instance with mild dynamics; the workhorse fixture of
/// the unit tests.
inline ModelSpec toy3(std::size_t horizon = 2, std::optional<real> budget = {}) {
    ToyParams tp;
    tp.horizon = horizon;
    tp.n_actions = 2;
    tp.p_core = {{0.95, 0.04, 0.01}, {0.0, 0.90, 0.10}, {0.0, 0.0, 1.0}};
    tp.death = {0.01, 0.02, 0.08};
    tp.cancer_death = {0.0, 0.005, 0.05};
    tp.sens = {0.05, 0.85};
    tp.spec = {0.995, 0.90};
    tp.cost = {0.0, 100.0};
    tp.screening_du_days = {0.0, 0.5};
    tp.tp_du_days = 14;
    tp.fp_du_days = 28;
    tp.salvage = {0.0, 8.0, 4.0};
    tp.q = {0.0, 0.1, 0.4};
    tp.terminal = {2.5, 1.2, 0.5};
    tp.budget = budget;
    return make_toy(tp);
}

/// Seeded random screening instance: upper-diagonal core dynamics,
/// age-increasing incidence and death, plausible test characteristics.
/// Deterministic for a given (seed, horizon, n_actions).
inline ModelSpec random_instance(std::uint64_t seed, std::size_t horizon,
                                 std::size_t n_actions = 3) {
    std::mt19937_64 rng(seed);
    auto unif = [&](real lo, real hi) {
        return std::uniform_real_distribution<real>(lo, hi)(rng);
    };

    ModelSpec m;
    const std::size_t S = 3;
    m.horizon = horizon;
    m.states = {"healthy", "in-situ", "invasive"};
    m.absorbing_states = {"death-cancer", "death-other"};
    m.actions.resize(n_actions);
    m.actions[0] = "W";
    for (std::size_t a = 1; a < n_actions; ++a) m.actions[a] = "A" + std::to_string(a);
    m.observations = {"neg", "pos"};

    const real incidence0 = unif(0.002, 0.02);
    const real incidence_slope = unif(0.0, 0.002);
    const real progress = unif(0.05, 0.3);
    const real death0 = unif(0.003, 0.02);
    const real death_slope = unif(0.0, 0.003);
    const real inv_cancer_death = unif(0.03, 0.2);

    m.transition.assign(horizon, {});
    m.death_prob.assign(horizon, {});
    m.cancer_death_prob.assign(horizon, {});
    for (std::size_t t = 0; t < horizon; ++t) {
        const real inc = incidence0 + incidence_slope * static_cast<real>(t);
        numvec death = {death0 + death_slope * t, death0 + death_slope * t + 0.005,
                        death0 + death_slope * t + 0.01 + inv_cancer_death};
        numvec cancer_death = {0.0, 0.002, inv_cancer_death};
        std::vector<numvec> p(S, numvec(S, 0.0));
        p[0][0] = 1.0 - inc;
        p[0][1] = inc * 0.8;
        p[0][2] = inc * 0.2;
        p[1][1] = 1.0 - progress;
        p[1][2] = progress;
        p[2][2] = 1.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            m.transition[t].push_back(p);
            m.death_prob[t].push_back(death);
            m.cancer_death_prob[t].push_back(cancer_death);
        }
    }
    m.action_independent_transitions = true;

    numvec sens(n_actions), spec(n_actions), cost(n_actions), du(n_actions);
    sens[0] = unif(0.02, 0.1);
    spec[0] = unif(0.98, 0.999);
    cost[0] = 0;
    du[0] = 0;
    for (std::size_t a = 1; a < n_actions; ++a) {
        sens[a] = unif(0.6, 0.95);
        spec[a] = unif(0.8, 0.99);
        cost[a] = unif(50, 500);
        du[a] = unif(0.0, 3.0);
    }
    m.sensitivity.assign(horizon, sens);
    m.specificity.assign(horizon, spec);
    m.cost = cost;
    m.screening_disutility_days = du;
    m.tp_disutility_days = unif(0, 20);
    m.fp_disutility_days = unif(0, 30);

    m.salvage.assign(horizon, {});
    m.post_diag_mortality.assign(horizon, {});
    for (std::size_t t = 0; t < horizon; ++t) {
        const real remain = static_cast<real>(horizon - t);
        m.salvage[t] = {0.0, remain * unif(0.5, 0.9), remain * unif(0.2, 0.5)};
        m.post_diag_mortality[t] = {0.0, std::min(0.9, unif(0.02, 0.1) + 0.002 * t),
                                    std::min(0.95, unif(0.2, 0.5) + 0.003 * t)};
    }
    m.terminal = {2.5, 1.2, 0.5};
    m.label = "random-" + std::to_string(seed);
    finalize_model(m);
    return m;
}

} // namespace cpomdp::testing
