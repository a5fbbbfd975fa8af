#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kansynth/network.hpp"

namespace kansynth {

inline constexpr int network_format_version = 1;

namespace detail {

inline double finite_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError(path + ": expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(path + ": non-finite numeric literal");
    return v;
}

inline std::vector<double> finite_array(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path + ": expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(finite_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* name, const std::string& path) {
    auto it = j.find(name);
    if (it == j.end()) throw ParseError(path + ": missing field '" + name + "'");
    return *it;
}

inline nlohmann::json spline_to_json(const SplineFn& s) {
    return nlohmann::json{{"degree", s.space->degree()},
                          {"knots", s.space->knots()},
                          {"coeffs", s.coeffs}};
}

inline SplineFn spline_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path + ": expected a spline object");
    const auto& deg = field(j, "degree", path);
    if (!deg.is_number_integer() || deg.get<int>() < 1)
        throw ParseError(path + ".degree: expected a positive integer");
    std::vector<double> knots = finite_array(field(j, "knots", path), path + ".knots");
    std::vector<double> coeffs = finite_array(field(j, "coeffs", path), path + ".coeffs");
    try {
        auto space = SplineSpace::make(deg.get<int>(), std::move(knots));
        if (static_cast<int>(coeffs.size()) != space->dim())
            throw ParseError(path + ".coeffs: length " + std::to_string(coeffs.size()) +
                             " does not match basis dimension " + std::to_string(space->dim()));
        return SplineFn{std::move(space), std::move(coeffs)};
    } catch (const ValidationError& err) {
        throw ParseError(path + ": " + err.what());
    }
}

} // namespace detail

inline nlohmann::json edge_to_json(const EdgeFunction& edge) {
    switch (edge.kind()) {
        case EdgeKind::affine: {
            const AffineMap* f = edge.as_affine();
            return nlohmann::json{{"kind", "affine"}, {"a", f->a}, {"b", f->b}};
        }
        case EdgeKind::named:
            return nlohmann::json{{"kind", "named"}, {"id", edge.as_named()->id}};
        case EdgeKind::polynomial:
            return nlohmann::json{{"kind", "poly"}, {"coeffs", edge.as_polynomial()->coeffs}};
        case EdgeKind::spline:
            return nlohmann::json{{"kind", "spline"},
                                  {"degree", edge.as_spline()->space->degree()},
                                  {"knots", edge.as_spline()->space->knots()},
                                  {"coeffs", edge.as_spline()->coeffs}};
        case EdgeKind::composite: {
            const CompositeFn* c = edge.as_composite();
            return nlohmann::json{{"kind", "composite"},
                                  {"wb", c->wb},
                                  {"base", c->base.id},
                                  {"ws", c->ws},
                                  {"spline", detail::spline_to_json(c->spline)}};
        }
    }
    throw ValidationError("edge_to_json: unreachable edge kind");
}

inline EdgeFunction edge_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw ParseError(path + ": expected an edge object");
    const auto& kind = detail::field(j, "kind", path);
    if (!kind.is_string()) throw ParseError(path + ".kind: expected a string");
    const std::string k = kind.get<std::string>();
    if (k == "affine") {
        return EdgeFunction::affine(detail::finite_number(detail::field(j, "a", path), path + ".a"),
                                    detail::finite_number(detail::field(j, "b", path), path + ".b"));
    }
    if (k == "named") {
        const auto& id = detail::field(j, "id", path);
        if (!id.is_string()) throw ParseError(path + ".id: expected a string");
        if (!BaseRegistry::instance().contains(id.get<std::string>()))
            throw ParseError(path + ".id: unknown base function '" + id.get<std::string>() + "'");
        return EdgeFunction::named(id.get<std::string>());
    }
    if (k == "poly") {
        std::vector<double> coeffs = detail::finite_array(detail::field(j, "coeffs", path), path + ".coeffs");
        if (coeffs.empty()) throw ParseError(path + ".coeffs: empty coefficient list");
        return EdgeFunction::polynomial(std::move(coeffs));
    }
    if (k == "spline") {
        SplineFn s = detail::spline_from_json(j, path);
        return EdgeFunction::spline(std::move(s.space), std::move(s.coeffs));
    }
    if (k == "composite") {
        const auto& base = detail::field(j, "base", path);
        if (!base.is_string()) throw ParseError(path + ".base: expected a string");
        if (!BaseRegistry::instance().contains(base.get<std::string>()))
            throw ParseError(path + ".base: unknown base function '" + base.get<std::string>() + "'");
        SplineFn s = detail::spline_from_json(detail::field(j, "spline", path), path + ".spline");
        return EdgeFunction::composite(detail::finite_number(detail::field(j, "wb", path), path + ".wb"),
                                       base.get<std::string>(),
                                       detail::finite_number(detail::field(j, "ws", path), path + ".ws"),
                                       std::move(s));
    }
    throw ParseError(path + ".kind: unknown edge kind '" + k + "'");
}

inline nlohmann::json network_to_json(const KanNetwork& net,
                                      nlohmann::json metadata = nlohmann::json::object()) {
    nlohmann::json layers = nlohmann::json::array();
    for (const Layer& layer : net.layers()) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& row : layer.edges)
            for (const auto& edge : row) edges.push_back(edge_to_json(edge));
        layers.push_back(nlohmann::json{{"width", layer.width()}, {"edges", std::move(edges)}});
    }
    return nlohmann::json{{"format_version", network_format_version},
                          {"input_width", net.input_width()},
                          {"layers", std::move(layers)},
                          {"metadata", std::move(metadata)}};
}

/// UTF-8 text document; reals keep their exact binary value across a
/// round-trip.
inline std::string encode_network(const KanNetwork& net,
                                  nlohmann::json metadata = nlohmann::json::object()) {
    return network_to_json(net, std::move(metadata)).dump(2) + "\n";
}

struct DecodedNetwork {
    KanNetwork network;
    nlohmann::json metadata;
};

inline DecodedNetwork decode_network_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("document: expected an object");
    const auto& version = detail::field(doc, "format_version", "document");
    if (!version.is_number_integer() || version.get<int>() != network_format_version)
        throw ParseError("document.format_version: unsupported version " + version.dump());
    const auto& width = detail::field(doc, "input_width", "document");
    if (!width.is_number_integer() || width.get<int>() < 1)
        throw ParseError("document.input_width: expected a positive integer");
    const auto& layers_json = detail::field(doc, "layers", "document");
    if (!layers_json.is_array() || layers_json.empty())
        throw ParseError("document.layers: expected a non-empty array");

    int fan_in = width.get<int>();
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < layers_json.size(); ++l) {
        const std::string path = "document.layers[" + std::to_string(l) + "]";
        const auto& lj = layers_json[l];
        if (!lj.is_object()) throw ParseError(path + ": expected an object");
        const auto& w = detail::field(lj, "width", path);
        if (!w.is_number_integer() || w.get<int>() < 1)
            throw ParseError(path + ".width: expected a positive integer");
        const auto& edges = detail::field(lj, "edges", path);
        if (!edges.is_array()) throw ParseError(path + ".edges: expected an array");
        const int layer_width = w.get<int>();
        if (static_cast<int>(edges.size()) != layer_width * fan_in)
            throw ParseError(path + ".edges: got " + std::to_string(edges.size()) +
                             " edges, expected width*fan_in = " + std::to_string(layer_width) + "*" +
                             std::to_string(fan_in) + " = " + std::to_string(layer_width * fan_in));
        Layer layer = Layer::zeros(layer_width, fan_in);
        for (int k = 0; k < layer_width; ++k)
            for (int j = 0; j < fan_in; ++j)
                layer.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = edge_from_json(
                    edges[static_cast<std::size_t>(k * fan_in + j)],
                    path + ".edges[" + std::to_string(k * fan_in + j) + "]");
        layers.push_back(std::move(layer));
        fan_in = layer_width;
    }

    nlohmann::json metadata = nlohmann::json::object();
    if (auto it = doc.find("metadata"); it != doc.end()) metadata = *it;

    try {
        return DecodedNetwork{KanNetwork(width.get<int>(), std::move(layers)), std::move(metadata)};
    } catch (const ValidationError& err) {
        throw ParseError(std::string("document: ") + err.what());
    }
}

inline DecodedNetwork decode_network(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& err) {
        throw ParseError(std::string("malformed document: ") + err.what());
    }
    return decode_network_json(doc);
}

// ---------------------------------------------------------------------------
// file helpers (write-temp-then-rename)
// ---------------------------------------------------------------------------

inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out) throw ParseError("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ParseError("cannot rename '" + tmp + "' to '" + path + "'");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void save_network_file(const std::string& path, const KanNetwork& net,
                              nlohmann::json metadata = nlohmann::json::object()) {
    write_file_atomic(path, encode_network(net, std::move(metadata)));
}

inline DecodedNetwork load_network_file(const std::string& path) {
    return decode_network(read_file(path));
}

} // namespace kansynth
