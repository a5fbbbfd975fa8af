#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "kansynth/kansynth.hpp"

namespace testutil {

using namespace kansynth;

inline double rel_err(double got, double want) {
    return std::abs(got - want) / (1.0 + std::abs(want));
}

inline std::vector<double> random_point(Sampler& s, int n, double lo, double hi) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = s.uniform(lo, hi);
    return x;
}

inline MlpNetwork random_mlp(Sampler& s, int n, int units, const EdgeFunction& act,
                             double weight_range = 2.0) {
    MlpNetwork mlp;
    mlp.n = n;
    mlp.activation = act;
    for (int k = 0; k < units; ++k) {
        MlpUnit u;
        for (int j = 0; j < n; ++j) u.w.push_back(s.uniform(-weight_range, weight_range));
        u.b = s.uniform(-1.0, 1.0);
        u.c = s.uniform(-1.5, 1.5);
        mlp.units.push_back(std::move(u));
    }
    return mlp;
}

/// Direct formula evaluation, independent of the network machinery.
inline double mlp_direct(const MlpNetwork& mlp, const std::vector<double>& x) {
    double acc = 0.0;
    for (const auto& u : mlp.units) {
        double z = u.b;
        for (std::size_t j = 0; j < u.w.size(); ++j) z += u.w[j] * x[j];
        acc += u.c * mlp.activation(z);
    }
    return acc;
}

inline KanNetwork random_affine_network(Sampler& s, int input_width, int depth, int max_width = 4) {
    std::vector<Layer> layers;
    int prev = input_width;
    for (int l = 0; l < depth; ++l) {
        int width = (l == depth - 1) ? 1 + static_cast<int>(s.uniform_int(0, 1))
                                     : 1 + static_cast<int>(s.uniform_int(0, max_width - 1));
        Layer layer = Layer::zeros(width, prev);
        for (int k = 0; k < width; ++k)
            for (int j = 0; j < prev; ++j)
                layer.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                    EdgeFunction::affine(s.uniform(-1.5, 1.5), s.uniform(-1.0, 1.0));
        layers.push_back(std::move(layer));
        prev = width;
    }
    return KanNetwork(input_width, std::move(layers));
}

/// Network mixing every edge variant; bounded activations keep values sane.
inline KanNetwork random_mixed_network(Sampler& s, int input_width, int depth, int max_width = 4) {
    auto space = SplineSpace::uniform(3, -6.0, 6.0, 4);
    std::vector<Layer> layers;
    int prev = input_width;
    for (int l = 0; l < depth; ++l) {
        int width = (l == depth - 1) ? 1 : 1 + static_cast<int>(s.uniform_int(0, max_width - 1));
        Layer layer = Layer::zeros(width, prev);
        for (int k = 0; k < width; ++k) {
            for (int j = 0; j < prev; ++j) {
                EdgeFunction edge;
                switch (s.uniform_int(0, 4)) {
                    case 0: edge = EdgeFunction::affine(s.uniform(-1.0, 1.0), s.uniform(-0.5, 0.5)); break;
                    case 1: edge = EdgeFunction::named(s.coin() ? "tanh" : "silu"); break;
                    case 2:
                        edge = EdgeFunction::polynomial({s.uniform(-0.5, 0.5), s.uniform(-0.5, 0.5),
                                                         s.uniform(-0.25, 0.25)});
                        break;
                    case 3: {
                        std::vector<double> c(static_cast<std::size_t>(space->dim()));
                        for (auto& v : c) v = s.uniform(-1.0, 1.0);
                        edge = EdgeFunction::spline(space, std::move(c));
                        break;
                    }
                    default: {
                        std::vector<double> c(static_cast<std::size_t>(space->dim()));
                        for (auto& v : c) v = s.uniform(-0.5, 0.5);
                        edge = EdgeFunction::composite(s.uniform(-1.0, 1.0), "silu", s.uniform(-1.0, 1.0),
                                                       SplineFn{space, std::move(c)});
                        break;
                    }
                }
                layer.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] = edge;
            }
        }
        layers.push_back(std::move(layer));
        prev = width;
    }
    return KanNetwork(input_width, std::move(layers));
}

} // namespace testutil
