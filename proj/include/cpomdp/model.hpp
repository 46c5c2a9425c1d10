// POMDP instance data model for the screening problem: time-indexed
// transition/observation tensors, QALY reward construction (half-cycle
// correction and disutility adjustments), salvage/terminal rewards and
// post-diagnosis mortality.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cpomdp/common.hpp"

namespace cpomdp {

/// Observation indices: 0 = negative, 1 = positive.
enum Obs : std::size_t { obs_negative = 0, obs_positive = 1 };

/// One invariant violation found by validate(); `path` is an index path such
/// as "transition[3][1][0]".
struct Violation {
    std::string path;
    std::string message;
};

/// A full POMDP instance. The partially observable state space S lists the
/// in-process health states (healthy first); two absorbing death states
/// (death by cancer, death other) exist only in the full-space transition
/// rows and are folded into death_prob / cancer_death_prob.
///
/// Tensors are indexed [t][a][i](...) with t a decision epoch (0..T-1),
/// a an action index (wait_action is 0 by convention) and i a state in S.
/// `transition` is the row-normalized restriction to S, so its rows sum to
/// one; the removed death mass is death_prob and its cancer share is
/// cancer_death_prob.
struct ModelSpec {
    std::size_t horizon = 0; ///< number of decision epochs T
    std::size_t base_age = 40; ///< age at epoch 0, used for trace output

    std::vector<std::string> states;           // partially observable labels
    std::vector<std::string> absorbing_states; // metadata: death states
    std::vector<std::string> actions;          // index 0 = wait
    std::vector<std::string> observations;     // {negative, positive}

    std::size_t wait_action = 0;

    // transition[t][a][i][j]: normalized over S; rows sum to 1
    std::vector<std::vector<std::vector<numvec>>> transition;
    // death_prob[t][a][i]: total probability of death at t+1 from state i
    std::vector<std::vector<numvec>> death_prob;
    // cancer_death_prob[t][a][i]: probability of the death-by-cancer branch
    std::vector<std::vector<numvec>> cancer_death_prob;
    bool action_independent_transitions = false;

    // observation model, z[t][a][i][theta]; built from sens/spec
    std::vector<std::vector<std::vector<numvec>>> observation_prob;
    std::vector<numvec> sensitivity; // [t][a]
    std::vector<numvec> specificity; // [t][a]

    // reward_qaly[t][a][i]: expected immediate QALYs (observation-averaged)
    std::vector<std::vector<numvec>> reward_qaly;
    std::vector<numvec> salvage;  // [t][i], lump-sum QALYs on diagnosis
    numvec terminal;              // [i], QALYs at epoch T
    std::vector<numvec> post_diag_mortality; // q[t][i]

    numvec cost;                  // [a], dollars
    std::optional<real> budget;   // absent => unconstrained

    numvec screening_disutility_days; // [a], 0 for wait
    real tp_disutility_days = 0;
    real fp_disutility_days = 0;

    real discount = 1.0;
    real scale_qaly = 1.0 / 40.0; // varsigma_1
    real scale_risk = 10.0;       // varsigma_2

    std::string label;

    std::size_t n_states() const { return states.size(); }
    std::size_t n_actions() const { return actions.size(); }
    std::size_t n_observations() const { return observations.size(); }

    bool is_screening(std::size_t a) const { return a != wait_action; }
};

/// Bayes update of Eq.-(1) form: the observation is made at the source state
/// i, then the transition i->j occurs. Throws ZeroLikelihood when the
/// observation is impossible under pi.
inline Belief belief_update(const Belief& pi, std::size_t t, std::size_t a,
                            std::size_t theta, const ModelSpec& m) {
    const std::size_t n = m.n_states();
    Belief out(n, 0.0);
    real denom = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const real w = pi[i] * m.observation_prob[t][a][i][theta];
        if (w == 0) continue;
        const numvec& row = m.transition[t][a][i];
        for (std::size_t j = 0; j < n; ++j) out[j] += w * row[j];
        denom += w;
    }
    if (denom <= 0)
        throw ZeroLikelihood("belief_update: observation " + std::to_string(theta) +
                             " has zero likelihood at t=" + std::to_string(t));
    for (real& v : out) v /= denom;
    return out;
}

/// Half-cycle corrected wait reward: a full QALY when the patient survives
/// the epoch, half when she dies during it.
inline real wait_reward(std::size_t t, std::size_t i, const ModelSpec& m) {
    const real d = m.death_prob[t][m.wait_action][i];
    return 1.0 * (1.0 - d) + 0.5 * d;
}

/// Per-observation reward rows r[i][theta] for a screening action: the
/// negative-result reward subtracts the screening disutility from the wait
/// reward; positive results additionally subtract the TP (i != 0) or FP
/// (i == 0) disutility. All disutilities are configured in days.
inline std::vector<numvec> screening_rewards(std::size_t t, std::size_t a,
                                             const ModelSpec& m) {
    std::vector<numvec> r(m.n_states(), numvec(m.n_observations(), 0.0));
    for (std::size_t i = 0; i < m.n_states(); ++i) {
        const real base = wait_reward(t, i, m) - days_to_years(m.screening_disutility_days[a]);
        r[i][obs_negative] = base;
        r[i][obs_positive] =
            base - days_to_years(i == 0 ? m.fp_disutility_days : m.tp_disutility_days);
    }
    return r;
}

/// Rebuilds observation_prob from sensitivity/specificity and reward_qaly
/// from the half-cycle and disutility rules. Call after editing transitions,
/// sens/spec or disutilities.
inline void finalize_model(ModelSpec& m) {
    const std::size_t T = m.horizon, A = m.n_actions(), S = m.n_states();
    m.observation_prob.assign(T, std::vector<std::vector<numvec>>(
                                     A, std::vector<numvec>(S, numvec(2, 0.0))));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t i = 0; i < S; ++i) {
                if (i == 0) {
                    m.observation_prob[t][a][i][obs_negative] = m.specificity[t][a];
                    m.observation_prob[t][a][i][obs_positive] = 1.0 - m.specificity[t][a];
                } else {
                    m.observation_prob[t][a][i][obs_positive] = m.sensitivity[t][a];
                    m.observation_prob[t][a][i][obs_negative] = 1.0 - m.sensitivity[t][a];
                }
            }

    m.reward_qaly.assign(T, std::vector<numvec>(A, numvec(S, 0.0)));
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t a = 0; a < A; ++a) {
            if (a == m.wait_action) {
                for (std::size_t i = 0; i < S; ++i)
                    m.reward_qaly[t][a][i] = wait_reward(t, i, m);
            } else {
                const auto rows = screening_rewards(t, a, m);
                for (std::size_t i = 0; i < S; ++i) {
                    real r = 0;
                    for (std::size_t th = 0; th < m.n_observations(); ++th)
                        r += m.observation_prob[t][a][i][th] * rows[i][th];
                    m.reward_qaly[t][a][i] = r;
                }
            }
        }
}

namespace detail {
inline std::string idx(const std::string& name, std::initializer_list<std::size_t> is) {
    std::ostringstream os;
    os << name;
    for (auto i : is) os << '[' << i << ']';
    return os.str();
}
} // namespace detail

/// Checks every ModelSpec invariant and returns the violations (empty list
/// iff well formed). Diagnostics only; never throws.
inline std::vector<Violation> validate(const ModelSpec& m) {
    std::vector<Violation> out;
    auto add = [&out](std::string path, std::string msg) {
        out.push_back({std::move(path), std::move(msg)});
    };
    constexpr real tol = 1e-9;

    if (m.horizon < 1) add("horizon", "horizon must be >= 1");
    if (m.n_states() < 2) add("states", "need at least 2 partially observable states");
    if (m.actions.empty()) add("actions", "no actions");
    if (m.n_observations() != 2) add("observations", "expected {negative, positive}");
    if (m.wait_action >= m.n_actions()) add("wait_action", "index out of range");

    const std::size_t T = m.horizon, A = m.n_actions(), S = m.n_states();
    auto shape_ok = [&](std::size_t got, std::size_t want, const char* what) {
        if (got != want) add(what, "wrong length: " + std::to_string(got) +
                                       " (expected " + std::to_string(want) + ")");
        return got == want;
    };

    if (shape_ok(m.transition.size(), T, "transition")) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t a = 0; a < m.transition[t].size(); ++a)
                for (std::size_t i = 0; i < m.transition[t][a].size(); ++i) {
                    const numvec& row = m.transition[t][a][i];
                    real sum = 0;
                    for (std::size_t j = 0; j < row.size(); ++j) {
                        if (row[j] < -tol || row[j] > 1 + tol)
                            add(detail::idx("transition", {t, a, i, j}), "entry outside [0,1]");
                        if (j < i && row[j] > tol)
                            add(detail::idx("transition", {t, a, i, j}),
                                "nonzero below the diagonal: cancer progression cannot reverse");
                        sum += row[j];
                    }
                    if (std::abs(sum - 1.0) > tol)
                        add(detail::idx("transition", {t, a, i}),
                            "row sums to " + std::to_string(sum));
                }
    }

    if (m.action_independent_transitions && m.transition.size() == T) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t a = 1; a < m.transition[t].size(); ++a)
                if (m.transition[t][a] != m.transition[t][0])
                    add(detail::idx("transition", {t, a}),
                        "instance declares action-independent transitions but rows differ");
    }

    if (shape_ok(m.observation_prob.size(), T, "observation_prob")) {
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t a = 0; a < m.observation_prob[t].size(); ++a)
                for (std::size_t i = 0; i < m.observation_prob[t][a].size(); ++i) {
                    const numvec& row = m.observation_prob[t][a][i];
                    real sum = 0;
                    for (real v : row) sum += v;
                    if (std::abs(sum - 1.0) > tol)
                        add(detail::idx("observation_prob", {t, a, i}),
                            "row sums to " + std::to_string(sum));
                    // spec/sens linkage
                    if (i == 0 && std::abs(row[obs_negative] - m.specificity[t][a]) > tol)
                        add(detail::idx("observation_prob", {t, a, i}),
                            "z[0][neg] differs from specificity");
                    if (i != 0 && std::abs(row[obs_positive] - m.sensitivity[t][a]) > tol)
                        add(detail::idx("observation_prob", {t, a, i}),
                            "z[i!=0][pos] differs from sensitivity");
                }
    }

    for (std::size_t t = 0; t < std::min(T, m.death_prob.size()); ++t)
        for (std::size_t a = 0; a < m.death_prob[t].size(); ++a)
            for (std::size_t i = 0; i < m.death_prob[t][a].size(); ++i) {
                const real d = m.death_prob[t][a][i];
                const real dc = m.cancer_death_prob[t][a][i];
                if (d < -tol || d > 1 + tol)
                    add(detail::idx("death_prob", {t, a, i}), "outside [0,1]");
                if (dc < -tol || dc > d + tol)
                    add(detail::idx("cancer_death_prob", {t, a, i}),
                        "exceeds the total death probability");
            }

    if (shape_ok(m.cost.size(), A, "costs")) {
        for (std::size_t a = 0; a < A; ++a)
            if (m.cost[a] < 0) add(detail::idx("costs", {a}), "negative cost");
    }
    if (m.budget && *m.budget < 0) add("budget", "negative budget");

    shape_ok(m.salvage.size(), T, "salvage");
    shape_ok(m.post_diag_mortality.size(), T, "post_diag_mortality");
    for (std::size_t t = 0; t < std::min(T, m.post_diag_mortality.size()); ++t)
        for (std::size_t i = 0; i < m.post_diag_mortality[t].size(); ++i) {
            const real q = m.post_diag_mortality[t][i];
            if (q < -tol || q > 1 + tol)
                add(detail::idx("post_diag_mortality", {t, i}), "outside [0,1]");
        }
    shape_ok(m.terminal.size(), S, "terminal");

    if (shape_ok(m.screening_disutility_days.size(), A, "disutilities_days.screening")) {
        for (std::size_t a = 0; a < A; ++a)
            if (m.screening_disutility_days[a] < 0)
                add(detail::idx("disutilities_days.screening", {a}), "negative disutility");
    }
    if (m.tp_disutility_days < 0) add("disutilities_days.true_positive", "negative");
    if (m.fp_disutility_days < 0) add("disutilities_days.false_positive", "negative");

    if (!(m.scale_qaly > 0) || !(m.scale_risk > 0)) add("scale", "scale factors must be positive");
    if (m.discount < 0 || m.discount > 1 + tol) add("discount", "outside [0,1]");
    return out;
}

} // namespace cpomdp
