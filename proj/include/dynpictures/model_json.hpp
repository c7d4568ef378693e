#pragma once

#include <json.hpp>

#include <set>
#include <string>

#include "dynpictures/model.hpp"
#include "dynpictures/state.hpp"

namespace dynp {

using Json = nlohmann::json;

namespace detail {

/// Strict object check: every present key must be allowed, every required
/// key must be present. `where` names the object in diagnostics.
inline void check_keys(const Json& j, const std::string& where,
                       const std::set<std::string>& required,
                       const std::set<std::string>& optional = {}) {
    if (!j.is_object()) throw validation_error(where + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!required.count(key) && !optional.count(key))
            throw validation_error(where + ": unknown field '" + key + "'");
    }
    for (const auto& key : required) {
        if (!j.contains(key))
            throw validation_error(where + ": missing required field '" + key + "'");
    }
}

inline double get_num(const Json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw validation_error(where + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline double get_num_or(const Json& j, const std::string& where, const std::string& key,
                         double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw validation_error(where + "." + key + ": expected a number");
    return j.at(key).get<double>();
}

inline int get_int(const Json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw validation_error(where + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

inline int get_int_or(const Json& j, const std::string& where, const std::string& key,
                      int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer())
        throw validation_error(where + "." + key + ": expected an integer");
    return j.at(key).get<int>();
}

}  // namespace detail

/// Build a model from its JSON descriptor {"kind": ..., "params": {...}}.
/// Field names are part of the tool's file contract; see the README table.
inline HamiltonianModel model_from_json(const Json& j) {
    detail::check_keys(j, "model", {"kind", "params"});
    const std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
    const Json& params = j.at("params");
    if (kind == "harmonic") {
        detail::check_keys(params, "model.params", {"mass", "k"});
        return models::harmonic(detail::get_num(params, "model.params", "mass"),
                                detail::get_num(params, "model.params", "k"));
    }
    if (kind == "constant_force") {
        detail::check_keys(params, "model.params", {"mass", "force"});
        return models::constant_force(detail::get_num(params, "model.params", "mass"),
                                      detail::get_num(params, "model.params", "force"));
    }
    if (kind == "quartic") {
        detail::check_keys(params, "model.params", {"mass", "coeff"});
        return models::quartic(detail::get_num(params, "model.params", "mass"),
                               detail::get_num(params, "model.params", "coeff"));
    }
    if (kind == "double_well_driven") {
        detail::check_keys(params, "model.params", {"mass", "a", "b", "epsilon", "omega"});
        return models::double_well_driven(detail::get_num(params, "model.params", "mass"),
                                          detail::get_num(params, "model.params", "a"),
                                          detail::get_num(params, "model.params", "b"),
                                          detail::get_num(params, "model.params", "epsilon"),
                                          detail::get_num(params, "model.params", "omega"));
    }
    if (kind == "standard_map") {
        detail::check_keys(params, "model.params", {"kick_strength"});
        return models::standard_map(detail::get_num(params, "model.params", "kick_strength"));
    }
    throw validation_error("model.kind: unknown kind '" + kind +
                           "' (expected harmonic | constant_force | quartic | "
                           "double_well_driven | standard_map)");
}

/// Grid-state layout: JSON header plus flat row-major array (q outer, p
/// inner). The inverse of grid_to_json.
inline Json grid_to_json(const GridR& g) {
    Json j;
    j["format"] = "dynpictures-grid";
    j["version"] = 1;
    j["dof"] = 1;
    j["q_min"] = g.grid.q_min;
    j["dq"] = g.grid.dq;
    j["nq"] = g.grid.nq;
    j["p_min"] = g.grid.p_min;
    j["dp"] = g.grid.dp;
    j["np"] = g.grid.np;
    j["complex"] = false;
    j["order"] = "row-major q-outer";
    j["data"] = g.values;
    return j;
}

inline GridR grid_from_json(const Json& j) {
    detail::check_keys(j, "grid",
                       {"format", "version", "dof", "q_min", "dq", "nq", "p_min", "dp", "np",
                        "complex", "order", "data"});
    if (j.at("format") != "dynpictures-grid" || j.at("version") != 1)
        throw validation_error("grid: unsupported format/version");
    const int nq = j.at("nq").get<int>(), np = j.at("np").get<int>();
    const double q_min = j.at("q_min").get<double>(), dq = j.at("dq").get<double>();
    const double p_min = j.at("p_min").get<double>(), dp = j.at("dp").get<double>();
    PhaseGrid grid(q_min, q_min + dq * (nq - 1), nq, p_min, p_min + dp * (np - 1), np);
    auto data = j.at("data").get<std::vector<double>>();
    return GridR(grid, std::move(data));
}

}  // namespace dynp
