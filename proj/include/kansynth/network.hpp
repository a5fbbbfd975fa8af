#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kansynth/edge_function.hpp"
#include "kansynth/errors.hpp"

namespace kansynth {

/// One layer of a KAN: a dense grid of edge functions. edges[k][j] sits on
/// the connection from node j of the previous layer to node k of this one;
/// node k computes the sum of its incoming edge values.
struct Layer {
    std::vector<std::vector<EdgeFunction>> edges;

    int width() const { return static_cast<int>(edges.size()); }
    int fan_in() const { return edges.empty() ? 0 : static_cast<int>(edges[0].size()); }

    static Layer zeros(int width, int fan_in) {
        Layer layer;
        layer.edges.assign(static_cast<std::size_t>(width),
                           std::vector<EdgeFunction>(static_cast<std::size_t>(fan_in), EdgeFunction::zero()));
        return layer;
    }
};

/// Layered computation graph with univariate functions on edges and plain
/// summation at nodes. The last layer is the output map; the network is
/// immutable once constructed and evaluation is pure, so concurrent reads
/// are safe.
class KanNetwork {
public:
    KanNetwork(int input_width, std::vector<Layer> layers)
        : input_width_(input_width), layers_(std::move(layers)) {
        if (input_width_ < 1) throw ValidationError("network: input width must be positive");
        if (layers_.empty()) throw ValidationError("network: needs at least the output layer");
        int prev = input_width_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const Layer& layer = layers_[i];
            if (layer.width() < 1)
                throw ValidationError("network: layer " + std::to_string(i) + " has zero width");
            for (const auto& row : layer.edges) {
                if (static_cast<int>(row.size()) != prev)
                    throw ValidationError("network: layer " + std::to_string(i) + " expects fan-in " +
                                          std::to_string(prev) + ", got a row of " +
                                          std::to_string(row.size()));
            }
            prev = layer.width();
        }
    }

    int input_width() const { return input_width_; }
    int output_width() const { return layers_.back().width(); }
    int depth() const { return static_cast<int>(layers_.size()); }
    int hidden_layer_count() const { return depth() - 1; }
    const std::vector<Layer>& layers() const { return layers_; }
    const Layer& layer(int i) const { return layers_[static_cast<std::size_t>(i)]; }

    int max_width() const {
        int w = 0;
        for (const auto& layer : layers_) w = std::max(w, layer.width());
        return w;
    }

    std::size_t edge_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_)
            n += static_cast<std::size_t>(layer.width()) * static_cast<std::size_t>(layer.fan_in());
        return n;
    }

private:
    int input_width_;
    std::vector<Layer> layers_;
};

namespace detail {

inline void forward_layer(const Layer& layer, const std::vector<double>& in, std::vector<double>& out,
                          int layer_index) {
    out.assign(static_cast<std::size_t>(layer.width()), 0.0);
    for (std::size_t k = 0; k < layer.edges.size(); ++k) {
        const auto& row = layer.edges[k];
        double acc = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) acc += row[j](in[j]);
        if (!std::isfinite(acc))
            throw EvalError("network: non-finite value at layer " + std::to_string(layer_index) +
                                ", node " + std::to_string(k),
                            layer_index);
        out[k] = acc;
    }
}

} // namespace detail

/// Forward evaluation following the layer recursion exactly.
inline std::vector<double> eval_kan(const KanNetwork& net, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != net.input_width())
        throw ValidationError("network: input of length " + std::to_string(x.size()) +
                              " fed to input width " + std::to_string(net.input_width()));
    for (double v : x)
        if (!std::isfinite(v)) throw ValidationError("network: non-finite input component");
    std::vector<double> cur = x, next;
    for (int i = 0; i < net.depth(); ++i) {
        detail::forward_layer(net.layer(i), cur, next, i);
        cur.swap(next);
    }
    return cur;
}

/// Node values of every layer (input excluded), for range analysis and tests.
inline std::vector<std::vector<double>> eval_kan_trace(const KanNetwork& net, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != net.input_width())
        throw ValidationError("network: input of length " + std::to_string(x.size()) +
                              " fed to input width " + std::to_string(net.input_width()));
    std::vector<std::vector<double>> trace;
    trace.reserve(static_cast<std::size_t>(net.depth()));
    std::vector<double> cur = x, next;
    for (int i = 0; i < net.depth(); ++i) {
        detail::forward_layer(net.layer(i), cur, next, i);
        cur = next;
        trace.push_back(cur);
    }
    return trace;
}

} // namespace kansynth
