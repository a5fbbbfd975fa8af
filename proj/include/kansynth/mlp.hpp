#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kansynth/edge_function.hpp"
#include "kansynth/errors.hpp"

namespace kansynth {

struct MlpUnit {
    std::vector<double> w;
    double b = 0.0;
    double c = 0.0;
};

/// Single-hidden-layer perceptron x -> sum_k c_k * act(w_k . x + b_k).
struct MlpNetwork {
    int n = 0;
    std::vector<MlpUnit> units;
    EdgeFunction activation = EdgeFunction::named("silu");

    void validate() const {
        if (n < 1) throw ValidationError("mlp: input dimension must be positive");
        if (units.empty()) throw ValidationError("mlp: needs at least one unit");
        for (std::size_t k = 0; k < units.size(); ++k)
            if (static_cast<int>(units[k].w.size()) != n)
                throw ValidationError("mlp: unit " + std::to_string(k) + " weight length " +
                                      std::to_string(units[k].w.size()) + " != input dimension " +
                                      std::to_string(n));
        if (activation.kind() != EdgeKind::named && activation.kind() != EdgeKind::polynomial)
            throw ValidationError("mlp: activation must be a named or polynomial function");
    }
};

inline double eval_mlp(const MlpNetwork& mlp, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != mlp.n)
        throw ValidationError("mlp: input of length " + std::to_string(x.size()) +
                              " fed to dimension " + std::to_string(mlp.n));
    double out = 0.0;
    for (const auto& unit : mlp.units) {
        double z = unit.b;
        for (std::size_t j = 0; j < unit.w.size(); ++j) z += unit.w[j] * x[j];
        out += unit.c * mlp.activation(z);
    }
    return out;
}

} // namespace kansynth
