#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kansynth/network.hpp"

namespace kansynth {

/// Exact affine form of a network: x -> matrix * x + offset.
struct AffineForm {
    std::vector<std::vector<double>> matrix; // output_width x input_width
    std::vector<double> offset;              // output_width

    std::vector<double> eval(const std::vector<double>& x) const {
        std::vector<double> y(offset);
        for (std::size_t i = 0; i < matrix.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j) y[i] += matrix[i][j] * x[j];
        return y;
    }
};

/// Symbolic propagation of affine maps through the layers. Present exactly
/// when every edge is the Affine variant.
inline std::optional<AffineForm> affine_closed_form(const KanNetwork& net) {
    const std::size_t n0 = static_cast<std::size_t>(net.input_width());
    std::vector<std::vector<double>> rows(n0, std::vector<double>(n0, 0.0));
    std::vector<double> offsets(n0, 0.0);
    for (std::size_t j = 0; j < n0; ++j) rows[j][j] = 1.0;

    for (const Layer& layer : net.layers()) {
        std::vector<std::vector<double>> next_rows(static_cast<std::size_t>(layer.width()),
                                                   std::vector<double>(n0, 0.0));
        std::vector<double> next_offsets(static_cast<std::size_t>(layer.width()), 0.0);
        for (std::size_t k = 0; k < layer.edges.size(); ++k) {
            for (std::size_t j = 0; j < layer.edges[k].size(); ++j) {
                const AffineMap* f = layer.edges[k][j].as_affine();
                if (!f) return std::nullopt;
                if (f->a != 0.0)
                    for (std::size_t q = 0; q < n0; ++q) next_rows[k][q] += f->a * rows[j][q];
                next_offsets[k] += f->a * offsets[j] + f->b;
            }
        }
        rows = std::move(next_rows);
        offsets = std::move(next_offsets);
    }
    return AffineForm{std::move(rows), std::move(offsets)};
}

/// Pads a network to the target depth by appending width-preserving layers
/// with identity edges on the diagonal and zero edges elsewhere. The computed
/// function is unchanged.
inline KanNetwork depth_equalize(const KanNetwork& net, int target_depth) {
    if (target_depth < net.depth())
        throw ValidationError("depth_equalize: target depth " + std::to_string(target_depth) +
                              " below current depth " + std::to_string(net.depth()));
    std::vector<Layer> layers = net.layers();
    const int w = net.output_width();
    for (int d = net.depth(); d < target_depth; ++d) {
        Layer pad = Layer::zeros(w, w);
        for (int k = 0; k < w; ++k)
            pad.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = EdgeFunction::identity();
        layers.push_back(std::move(pad));
    }
    return KanNetwork(net.input_width(), std::move(layers));
}

/// Places two networks over the same inputs side by side; the result outputs
/// the concatenation of both outputs. Depths are equalized first and all
/// edges between the two halves are the zero function.
inline KanNetwork parallel_compose(const KanNetwork& a, const KanNetwork& b) {
    if (a.input_width() != b.input_width())
        throw ValidationError("parallel_compose: input widths " + std::to_string(a.input_width()) +
                              " and " + std::to_string(b.input_width()) + " differ");
    const int depth = std::max(a.depth(), b.depth());
    KanNetwork ea = depth_equalize(a, depth);
    KanNetwork eb = depth_equalize(b, depth);

    std::vector<Layer> layers;
    layers.reserve(static_cast<std::size_t>(depth));
    for (int i = 0; i < depth; ++i) {
        const Layer& la = ea.layer(i);
        const Layer& lb = eb.layer(i);
        Layer merged;
        if (i == 0) {
            // both halves read the shared inputs directly
            merged.edges = la.edges;
            merged.edges.insert(merged.edges.end(), lb.edges.begin(), lb.edges.end());
        } else {
            const int fan_a = la.fan_in();
            const int fan_b = lb.fan_in();
            merged = Layer::zeros(la.width() + lb.width(), fan_a + fan_b);
            for (int k = 0; k < la.width(); ++k)
                for (int j = 0; j < fan_a; ++j)
                    merged.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                        la.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            for (int k = 0; k < lb.width(); ++k)
                for (int j = 0; j < fan_b; ++j)
                    merged.edges[static_cast<std::size_t>(la.width() + k)]
                                [static_cast<std::size_t>(fan_a + j)] =
                        lb.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        }
        layers.push_back(std::move(merged));
    }
    return KanNetwork(a.input_width(), std::move(layers));
}

/// Feeds the output of `inner` into `outer`; the layer list is the
/// concatenation of both.
inline KanNetwork serial_compose(const KanNetwork& outer, const KanNetwork& inner) {
    if (inner.output_width() != outer.input_width())
        throw ValidationError("serial_compose: inner output width " +
                              std::to_string(inner.output_width()) + " != outer input width " +
                              std::to_string(outer.input_width()));
    std::vector<Layer> layers = inner.layers();
    layers.insert(layers.end(), outer.layers().begin(), outer.layers().end());
    return KanNetwork(inner.input_width(), std::move(layers));
}

using AffineDictionary = std::set<std::pair<double, double>>;

/// Distinct (a, b) payloads of the Affine edges appearing in the network.
inline AffineDictionary collect_affine_dictionary(const KanNetwork& net) {
    AffineDictionary dict;
    for (const Layer& layer : net.layers())
        for (const auto& row : layer.edges)
            for (const auto& edge : row)
                if (const AffineMap* f = edge.as_affine()) dict.insert({f->a, f->b});
    return dict;
}

inline bool dictionary_subset(const AffineDictionary& dict, const AffineDictionary& family) {
    for (const auto& entry : dict)
        if (family.find(entry) == family.end()) return false;
    return true;
}

} // namespace kansynth
