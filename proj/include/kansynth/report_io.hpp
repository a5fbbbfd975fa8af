#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "kansynth/approximation.hpp"
#include "kansynth/serialization.hpp"

namespace kansynth {

inline nlohmann::json mlp_to_json(const MlpNetwork& mlp) {
    nlohmann::json units = nlohmann::json::array();
    for (const auto& u : mlp.units)
        units.push_back(nlohmann::json{{"w", u.w}, {"b", u.b}, {"c", u.c}});
    return nlohmann::json{{"n", mlp.n},
                          {"activation", edge_to_json(mlp.activation)},
                          {"units", std::move(units)}};
}

inline MlpNetwork mlp_from_json(const nlohmann::json& j, const std::string& path = "mlp") {
    if (!j.is_object()) throw ParseError(path + ": expected an object");
    const auto& n = detail::field(j, "n", path);
    if (!n.is_number_integer() || n.get<int>() < 1)
        throw ParseError(path + ".n: expected a positive integer");
    MlpNetwork mlp;
    mlp.n = n.get<int>();
    mlp.activation = edge_from_json(detail::field(j, "activation", path), path + ".activation");
    const auto& units = detail::field(j, "units", path);
    if (!units.is_array() || units.empty())
        throw ParseError(path + ".units: expected a non-empty array");
    for (std::size_t k = 0; k < units.size(); ++k) {
        const std::string upath = path + ".units[" + std::to_string(k) + "]";
        const auto& uj = units[k];
        if (!uj.is_object()) throw ParseError(upath + ": expected an object");
        MlpUnit unit;
        unit.w = detail::finite_array(detail::field(uj, "w", upath), upath + ".w");
        unit.b = detail::finite_number(detail::field(uj, "b", upath), upath + ".b");
        unit.c = detail::finite_number(detail::field(uj, "c", upath), upath + ".c");
        mlp.units.push_back(std::move(unit));
    }
    try {
        mlp.validate();
    } catch (const ValidationError& err) {
        throw ParseError(path + ": " + err.what());
    }
    return mlp;
}

inline MlpNetwork load_mlp_file(const std::string& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& err) {
        throw ParseError(std::string("malformed mlp document: ") + err.what());
    }
    return mlp_from_json(doc);
}

/// Everything except the compiled network, which is saved separately.
inline nlohmann::json fit_report_to_json(const FitReport& report) {
    nlohmann::json j{{"sup_error", report.sup_error},
                     {"sup_argmax", report.sup_argmax},
                     {"kan_vs_mlp_error", report.kan_vs_mlp_error},
                     {"warnings", report.warnings},
                     {"mlp", mlp_to_json(report.mlp)}};
    if (report.dyadic_mlp) j["dyadic_mlp"] = mlp_to_json(*report.dyadic_mlp);
    if (report.dyadic_sup_error) j["dyadic_sup_error"] = *report.dyadic_sup_error;
    if (report.rounding_drift) j["rounding_drift"] = *report.rounding_drift;
    return j;
}

} // namespace kansynth
