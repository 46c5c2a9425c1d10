// Model file loading/saving. A model file is a single JSON document with
// schema tag "cpomdp-model/1". The transition key carries full-space rows
// (core states plus the two absorbing death columns); the loader splits them
// into the normalized in-process transition, the per-epoch death mass and
// its death-by-cancer share.
#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cpomdp/model.hpp"

namespace cpomdp {

using json = nlohmann::ordered_json;

inline constexpr const char* model_schema_id = "cpomdp-model/1";

namespace detail {

// sens/spec entries can be a scalar (time-constant) or an array of length T
inline numvec per_epoch(const json& v, std::size_t T, const std::string& what) {
    numvec out(T);
    if (v.is_number()) {
        std::fill(out.begin(), out.end(), v.get<real>());
    } else if (v.is_array()) {
        if (v.size() != T)
            throw ConfigError(what + ": expected scalar or array of length " +
                              std::to_string(T));
        for (std::size_t t = 0; t < T; ++t) out[t] = v[t].get<real>();
    } else {
        throw ConfigError(what + ": expected number or array");
    }
    return out;
}

inline numvec by_action(const json& v, const std::vector<std::string>& actions,
                        const std::string& what) {
    numvec out(actions.size(), 0.0);
    if (v.is_array()) {
        if (v.size() != actions.size())
            throw ConfigError(what + ": expected one entry per action");
        for (std::size_t a = 0; a < actions.size(); ++a) out[a] = v[a].get<real>();
        return out;
    }
    if (!v.is_object()) throw ConfigError(what + ": expected object keyed by action");
    for (std::size_t a = 0; a < actions.size(); ++a) {
        auto it = v.find(actions[a]);
        if (it != v.end()) out[a] = it->get<real>();
    }
    return out;
}

inline std::vector<numvec> matrix(const json& v) {
    std::vector<numvec> rows;
    for (const auto& r : v) rows.push_back(r.get<numvec>());
    return rows;
}

} // namespace detail

/// Parses a model document. Throws ConfigError on schema problems; the
/// returned model has already been through finalize_model() but not
/// validate() -- callers decide how strict to be.
inline ModelSpec model_from_json(const json& j) {
    if (!j.contains("schema") || j["schema"].get<std::string>() != model_schema_id)
        throw ConfigError("model file: missing or unsupported schema (want " +
                          std::string(model_schema_id) + ")");
    ModelSpec m;
    m.horizon = j.at("horizon").get<std::size_t>();
    m.states = j.at("states").get<std::vector<std::string>>();
    m.actions = j.at("actions").get<std::vector<std::string>>();
    m.observations = j.at("observations").get<std::vector<std::string>>();
    if (j.contains("absorbing_states"))
        m.absorbing_states = j["absorbing_states"].get<std::vector<std::string>>();
    if (j.contains("base_age")) m.base_age = j["base_age"].get<std::size_t>();
    if (j.contains("label")) m.label = j["label"].get<std::string>();

    const std::size_t T = m.horizon, A = m.n_actions(), S = m.n_states();
    const std::size_t full = S + 2; // + death-by-cancer, death-other columns

    // transition: [T] of either [.][full] matrix (action-independent) or
    // [A] of such matrices. Rows may cover only the core states.
    const json& tr = j.at("transition");
    if (tr.size() != T) throw ConfigError("transition: expected one entry per epoch");
    m.transition.assign(T, {});
    m.death_prob.assign(T, {});
    m.cancer_death_prob.assign(T, {});
    auto split_full = [&](const std::vector<numvec>& rows, std::size_t t, std::size_t) {
        std::vector<numvec> p(S, numvec(S, 0.0));
        numvec d(S, 0.0), dc(S, 0.0);
        for (std::size_t i = 0; i < S; ++i) {
            const numvec& row = rows[i];
            if (row.size() != full && row.size() != S)
                throw ConfigError("transition row at t=" + std::to_string(t) +
                                  " has wrong width");
            if (row.size() == full) {
                dc[i] = row[S];
                d[i] = row[S] + row[S + 1];
            }
            const real alive = 1.0 - d[i];
            if (alive > 0) {
                for (std::size_t k = 0; k < S; ++k) p[i][k] = row[k] / alive;
            } else {
                p[i][i] = 1.0; // certain death: self-loop keeps the row stochastic
            }
        }
        m.transition[t].push_back(std::move(p));
        m.death_prob[t].push_back(std::move(d));
        m.cancer_death_prob[t].push_back(std::move(dc));
    };
    // action-nested iff the first epoch entry is an array of matrices
    const bool nested = tr[0][0][0].is_array();
    m.action_independent_transitions = !nested;
    for (std::size_t t = 0; t < T; ++t) {
        if (nested) {
            if (tr[t].size() != A)
                throw ConfigError("transition: expected one matrix per action");
            for (std::size_t a = 0; a < A; ++a) split_full(detail::matrix(tr[t][a]), t, a);
        } else {
            split_full(detail::matrix(tr[t]), t, 0);
            for (std::size_t a = 1; a < A; ++a) {
                m.transition[t].push_back(m.transition[t][0]);
                m.death_prob[t].push_back(m.death_prob[t][0]);
                m.cancer_death_prob[t].push_back(m.cancer_death_prob[t][0]);
            }
        }
    }

    const json& sens = j.at("sensitivity");
    const json& spec = j.at("specificity");
    m.sensitivity.assign(T, numvec(A, 0.0));
    m.specificity.assign(T, numvec(A, 1.0));
    for (std::size_t a = 0; a < A; ++a) {
        numvec se = detail::per_epoch(sens.at(m.actions[a]), T, "sensitivity." + m.actions[a]);
        numvec sp = detail::per_epoch(spec.at(m.actions[a]), T, "specificity." + m.actions[a]);
        for (std::size_t t = 0; t < T; ++t) {
            m.sensitivity[t][a] = se[t];
            m.specificity[t][a] = sp[t];
        }
    }

    const json& du = j.at("disutilities_days");
    m.screening_disutility_days = detail::by_action(du.at("screening"), m.actions,
                                                    "disutilities_days.screening");
    m.tp_disutility_days = du.at("true_positive").get<real>();
    m.fp_disutility_days = du.at("false_positive").get<real>();

    auto per_epoch_state = [&](const json& v, const char* what) {
        std::vector<numvec> out(T, numvec(S, 0.0));
        if (!v.is_array() || v.empty()) throw ConfigError(std::string(what) + ": expected array");
        if (v[0].is_number()) { // single [S] row broadcast over epochs
            numvec row = v.get<numvec>();
            if (row.size() != S) throw ConfigError(std::string(what) + ": row width != |S|");
            std::fill(out.begin(), out.end(), row);
        } else {
            if (v.size() != T) throw ConfigError(std::string(what) + ": expected T rows");
            for (std::size_t t = 0; t < T; ++t) {
                out[t] = v[t].get<numvec>();
                if (out[t].size() != S)
                    throw ConfigError(std::string(what) + ": row width != |S|");
            }
        }
        return out;
    };
    m.salvage = per_epoch_state(j.at("salvage"), "salvage");
    m.post_diag_mortality = per_epoch_state(j.at("post_diag_mortality"), "post_diag_mortality");
    m.terminal = j.at("terminal").get<numvec>();

    m.cost = detail::by_action(j.at("costs"), m.actions, "costs");
    if (j.contains("budget") && !j["budget"].is_null())
        m.budget = j["budget"].get<real>();
    if (j.contains("scale")) {
        m.scale_qaly = j["scale"][0].get<real>();
        m.scale_risk = j["scale"][1].get<real>();
    }
    if (j.contains("discount")) m.discount = j["discount"].get<real>();

    finalize_model(m);
    return m;
}

inline ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("model file " + path + ": " + e.what());
    }
    return model_from_json(j);
}

/// Serializes the model back to the file schema, reassembling full-space
/// transition rows from the normalized restriction and the death masses.
inline json model_to_json(const ModelSpec& m) {
    const std::size_t T = m.horizon, A = m.n_actions(), S = m.n_states();
    json j;
    j["schema"] = model_schema_id;
    j["label"] = m.label;
    j["horizon"] = m.horizon;
    j["base_age"] = m.base_age;
    j["states"] = m.states;
    j["absorbing_states"] = m.absorbing_states;
    j["actions"] = m.actions;
    j["observations"] = m.observations;

    auto full_rows = [&](std::size_t t, std::size_t a) {
        json rows = json::array();
        for (std::size_t i = 0; i < S; ++i) {
            const real d = m.death_prob[t][a][i], dc = m.cancer_death_prob[t][a][i];
            numvec row(S + 2, 0.0);
            for (std::size_t k = 0; k < S; ++k) row[k] = m.transition[t][a][i][k] * (1.0 - d);
            if (d >= 1.0) std::fill(row.begin(), row.begin() + S, 0.0);
            row[S] = dc;
            row[S + 1] = d - dc;
            rows.push_back(row);
        }
        return rows;
    };
    json tr = json::array();
    for (std::size_t t = 0; t < T; ++t) {
        if (m.action_independent_transitions) {
            tr.push_back(full_rows(t, 0));
        } else {
            json per_a = json::array();
            for (std::size_t a = 0; a < A; ++a) per_a.push_back(full_rows(t, a));
            tr.push_back(per_a);
        }
    }
    j["transition"] = std::move(tr);

    json sens = json::object(), spec = json::object();
    for (std::size_t a = 0; a < A; ++a) {
        numvec se(T), sp(T);
        for (std::size_t t = 0; t < T; ++t) {
            se[t] = m.sensitivity[t][a];
            sp[t] = m.specificity[t][a];
        }
        const bool se_const = std::all_of(se.begin(), se.end(), [&](real v) { return v == se[0]; });
        const bool sp_const = std::all_of(sp.begin(), sp.end(), [&](real v) { return v == sp[0]; });
        sens[m.actions[a]] = se_const ? json(se[0]) : json(se);
        spec[m.actions[a]] = sp_const ? json(sp[0]) : json(sp);
    }
    j["sensitivity"] = std::move(sens);
    j["specificity"] = std::move(spec);

    json du;
    json scr = json::object();
    for (std::size_t a = 0; a < A; ++a) scr[m.actions[a]] = m.screening_disutility_days[a];
    du["screening"] = std::move(scr);
    du["true_positive"] = m.tp_disutility_days;
    du["false_positive"] = m.fp_disutility_days;
    j["disutilities_days"] = std::move(du);

    j["salvage"] = m.salvage;
    j["terminal"] = m.terminal;
    j["post_diag_mortality"] = m.post_diag_mortality;
    json costs = json::object();
    for (std::size_t a = 0; a < A; ++a) costs[m.actions[a]] = m.cost[a];
    j["costs"] = std::move(costs);
    j["budget"] = m.budget ? json(*m.budget) : json(nullptr);
    j["scale"] = numvec{m.scale_qaly, m.scale_risk};
    j["discount"] = m.discount;
    return j;
}

inline void save_model(const ModelSpec& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write model file: " + path);
    out << model_to_json(m).dump(1) << '\n';
}

} // namespace cpomdp
