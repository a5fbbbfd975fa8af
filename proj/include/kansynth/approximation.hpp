#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kansynth/compose.hpp"
#include "kansynth/mlp.hpp"
#include "kansynth/network.hpp"
#include "kansynth/rng.hpp"
#include "kansynth/spline.hpp"
#include "kansynth/synthesis.hpp"

namespace kansynth {

/// Target function on an axis-aligned box, with the grid density used for
/// sup-norm estimation. The grid lower-bounds the true sup norm.
struct TargetSpec {
    int dimension = 1;
    std::vector<double> lower;
    std::vector<double> upper;
    std::string name; // registry id or free-form label
    std::function<double(const std::vector<double>&)> function;
    int grid_density = 101;

    void validate() const {
        if (dimension < 1) throw ValidationError("target: dimension must be positive");
        if (static_cast<int>(lower.size()) != dimension || static_cast<int>(upper.size()) != dimension)
            throw ValidationError("target: bound lengths do not match dimension");
        for (int j = 0; j < dimension; ++j)
            if (!(lower[static_cast<std::size_t>(j)] < upper[static_cast<std::size_t>(j)]))
                throw ValidationError("target: empty box on axis " + std::to_string(j));
        if (grid_density < 2) throw ValidationError("target: grid density must be >= 2");
        if (!function) throw ValidationError("target: no function set");
    }
};

/// Builtin targets selectable by name.
inline TargetSpec make_target(const std::string& name, std::vector<double> lower,
                              std::vector<double> upper, int grid_density = 101) {
    TargetSpec spec;
    spec.dimension = static_cast<int>(lower.size());
    spec.lower = std::move(lower);
    spec.upper = std::move(upper);
    spec.name = name;
    spec.grid_density = grid_density;

    constexpr double pi = 3.14159265358979323846;
    if (name == "zero") {
        spec.function = [](const std::vector<double>&) { return 0.0; };
    } else if (name == "square") {
        spec.function = [](const std::vector<double>& x) { return x[0] * x[0]; };
    } else if (name == "sinpi_cospi") {
        spec.function = [pi](const std::vector<double>& x) {
            double v = std::sin(pi * x[0]);
            if (x.size() > 1) v *= std::cos(pi * x[1]);
            return v;
        };
    } else if (name == "gaussian") {
        std::vector<double> center(spec.lower.size());
        for (std::size_t j = 0; j < center.size(); ++j)
            center[j] = 0.5 * (spec.lower[j] + spec.upper[j]);
        spec.function = [center](const std::vector<double>& x) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                double d = x[j] - center[j];
                s += d * d;
            }
            return std::exp(-4.0 * s);
        };
    } else if (name == "max_coord") {
        spec.function = [](const std::vector<double>& x) {
            return *std::max_element(x.begin(), x.end());
        };
    } else {
        throw ValidationError("target registry: unknown target '" + name + "'");
    }
    spec.validate();
    return spec;
}

/// One-dimensional target from tabulated samples (linear interpolation).
inline TargetSpec make_table_target(std::vector<double> xs, std::vector<double> ys, int grid_density = 101) {
    if (xs.size() < 2 || xs.size() != ys.size())
        throw ValidationError("table target: need >= 2 samples with matching lengths");
    TargetSpec spec;
    spec.dimension = 1;
    spec.lower = {xs.front()};
    spec.upper = {xs.back()};
    spec.name = "table";
    spec.grid_density = grid_density;
    TableFunction table{std::move(xs), std::move(ys)};
    spec.function = [table](const std::vector<double>& x) { return table.eval(x[0]); };
    spec.validate();
    return spec;
}

namespace detail {

/// Row-major tensor-grid walk, fixed order for deterministic reductions.
template <typename Fn>
void for_each_grid_point(const std::vector<double>& lower, const std::vector<double>& upper,
                         int density, Fn&& fn) {
    const int n = static_cast<int>(lower.size());
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> x(static_cast<std::size_t>(n));
    const double denom = static_cast<double>(density - 1);
    for (;;) {
        for (int j = 0; j < n; ++j) {
            auto ju = static_cast<std::size_t>(j);
            x[ju] = lower[ju] + (upper[ju] - lower[ju]) * static_cast<double>(idx[ju]) / denom;
        }
        fn(const_cast<const std::vector<double>&>(x));
        int j = n - 1;
        while (j >= 0) {
            auto ju = static_cast<std::size_t>(j);
            if (++idx[ju] < density) break;
            idx[ju] = 0;
            --j;
        }
        if (j < 0) break;
    }
}

} // namespace detail

struct SupError {
    double value = 0.0;
    std::vector<double> argmax;
};

/// Max over the tensor grid of |target - g|, with the argmax point.
inline SupError sup_error_on_grid(const TargetSpec& target,
                                  const std::function<double(const std::vector<double>&)>& g,
                                  int grid_density = 0) {
    target.validate();
    if (grid_density <= 0) grid_density = target.grid_density;
    SupError best;
    best.argmax = target.lower;
    detail::for_each_grid_point(target.lower, target.upper, grid_density,
                                [&](const std::vector<double>& x) {
                                    double d = std::abs(target.function(x) - g(x));
                                    if (d > best.value) {
                                        best.value = d;
                                        best.argmax = x;
                                    }
                                });
    return best;
}

inline SupError sup_error_on_grid(const TargetSpec& target, const KanNetwork& net, int grid_density = 0) {
    if (net.input_width() != target.dimension)
        throw ValidationError("sup_error_on_grid: network input width " +
                              std::to_string(net.input_width()) + " != target dimension " +
                              std::to_string(target.dimension));
    if (net.output_width() != 1)
        throw ValidationError("sup_error_on_grid: scalar target against output width " +
                              std::to_string(net.output_width()));
    return sup_error_on_grid(
        target, [&](const std::vector<double>& x) { return eval_kan(net, x)[0]; }, grid_density);
}

inline SupError sup_error_on_grid(const TargetSpec& target, const MlpNetwork& mlp, int grid_density = 0) {
    if (mlp.n != target.dimension)
        throw ValidationError("sup_error_on_grid: mlp dimension " + std::to_string(mlp.n) +
                              " != target dimension " + std::to_string(target.dimension));
    return sup_error_on_grid(
        target, [&](const std::vector<double>& x) { return eval_mlp(mlp, x); }, grid_density);
}

// ---------------------------------------------------------------------------
// fitting
// ---------------------------------------------------------------------------

namespace detail {

/// Solves (G + lambda I) c = r for symmetric positive definite G, in place.
inline std::vector<double> ridge_solve(std::vector<double> gram, std::vector<double> rhs, int n,
                                       double lambda) {
    for (int i = 0; i < n; ++i) gram[static_cast<std::size_t>(i * n + i)] += lambda;
    // Cholesky factorization
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = gram[static_cast<std::size_t>(i * n + j)];
            for (int k = 0; k < j; ++k)
                s -= gram[static_cast<std::size_t>(i * n + k)] * gram[static_cast<std::size_t>(j * n + k)];
            if (i == j) {
                if (s <= 0.0)
                    throw FitError("ridge fit: normal equations not positive definite after regularization");
                gram[static_cast<std::size_t>(i * n + i)] = std::sqrt(s);
            } else {
                gram[static_cast<std::size_t>(i * n + j)] =
                    s / gram[static_cast<std::size_t>(j * n + j)];
            }
        }
    }
    // forward then backward substitution
    for (int i = 0; i < n; ++i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= gram[static_cast<std::size_t>(i * n + k)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / gram[static_cast<std::size_t>(i * n + i)];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < n; ++k)
            s -= gram[static_cast<std::size_t>(k * n + i)] * rhs[static_cast<std::size_t>(k)];
        rhs[static_cast<std::size_t>(i)] = s / gram[static_cast<std::size_t>(i * n + i)];
    }
    return rhs;
}

} // namespace detail

/// Random-feature ridge fit: samples unit directions with log-uniform scales
/// and biases covering the induced projection range, then solves for the
/// output coefficients on the estimation grid. Deterministic given the seed;
/// no optimality claim beyond the reported sup error.
inline MlpNetwork fit_shallow_mlp(const TargetSpec& target, const EdgeFunction& sigma, int num_units,
                                  std::uint64_t seed, double ridge_lambda = 1e-8) {
    target.validate();
    if (num_units < 1) throw ValidationError("fit: need at least one unit");
    if (sigma.kind() != EdgeKind::named && sigma.kind() != EdgeKind::polynomial)
        throw ValidationError("fit: activation must be named or polynomial");

    const int n = target.dimension;
    Sampler sampler(seed);

    MlpNetwork mlp;
    mlp.n = n;
    mlp.activation = sigma;
    mlp.units.resize(static_cast<std::size_t>(num_units));
    for (auto& unit : mlp.units) {
        std::vector<double> dir(static_cast<std::size_t>(n));
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& d : dir) {
                d = sampler.normal();
                norm += d * d;
            }
            norm = std::sqrt(norm);
        } while (norm < 1e-12);
        double scale = std::exp(sampler.uniform(std::log(0.5), std::log(8.0)));
        unit.w.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) unit.w[static_cast<std::size_t>(j)] = scale * dir[static_cast<std::size_t>(j)] / norm;
        double pmin = 0.0, pmax = 0.0;
        for (int j = 0; j < n; ++j) {
            auto ju = static_cast<std::size_t>(j);
            double a = unit.w[ju] * target.lower[ju];
            double b = unit.w[ju] * target.upper[ju];
            pmin += std::min(a, b);
            pmax += std::max(a, b);
        }
        unit.b = -sampler.uniform(pmin, pmax);
        unit.c = 0.0;
    }

    // design matrix on the estimation grid
    std::vector<std::vector<double>> features;
    std::vector<double> values;
    detail::for_each_grid_point(target.lower, target.upper, target.grid_density,
                                [&](const std::vector<double>& x) {
                                    std::vector<double> row(static_cast<std::size_t>(num_units));
                                    for (int k = 0; k < num_units; ++k) {
                                        const MlpUnit& u = mlp.units[static_cast<std::size_t>(k)];
                                        double z = u.b;
                                        for (int j = 0; j < n; ++j)
                                            z += u.w[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
                                        row[static_cast<std::size_t>(k)] = sigma(z);
                                    }
                                    features.push_back(std::move(row));
                                    values.push_back(target.function(x));
                                });

    std::vector<double> gram(static_cast<std::size_t>(num_units) * static_cast<std::size_t>(num_units), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(num_units), 0.0);
    for (std::size_t g = 0; g < features.size(); ++g) {
        const auto& row = features[g];
        for (int i = 0; i < num_units; ++i) {
            const double fi = row[static_cast<std::size_t>(i)];
            if (fi == 0.0) continue;
            for (int j = 0; j <= i; ++j)
                gram[static_cast<std::size_t>(i * num_units + j)] += fi * row[static_cast<std::size_t>(j)];
            rhs[static_cast<std::size_t>(i)] += fi * values[g];
        }
    }
    for (int i = 0; i < num_units; ++i)
        for (int j = i + 1; j < num_units; ++j)
            gram[static_cast<std::size_t>(i * num_units + j)] =
                gram[static_cast<std::size_t>(j * num_units + i)];

    std::vector<double> coeff = detail::ridge_solve(std::move(gram), std::move(rhs), num_units, ridge_lambda);
    for (int k = 0; k < num_units; ++k) mlp.units[static_cast<std::size_t>(k)].c = coeff[static_cast<std::size_t>(k)];
    return mlp;
}

/// Replaces every parameter by the nearest m/2^r.
inline MlpNetwork round_dyadic(const MlpNetwork& mlp, int r) {
    if (r < 0 || r > 52) throw ValidationError("round_dyadic: scale must lie in [0, 52]");
    auto rd = [r](double x) {
        double scaled = std::round(std::ldexp(x, r));
        if (std::abs(scaled) >= 9.0e18)
            throw ValidationError("round_dyadic: parameter too large at this scale");
        return std::ldexp(scaled, -r);
    };
    MlpNetwork out = mlp;
    for (auto& unit : out.units) {
        for (auto& w : unit.w) w = rd(w);
        unit.b = rd(unit.b);
        unit.c = rd(unit.c);
    }
    return out;
}

// ---------------------------------------------------------------------------
// end-to-end pipeline
// ---------------------------------------------------------------------------

enum class PipelineMode { shallow, two_hidden, dyadic_a0, spline_edges };

inline const char* pipeline_mode_name(PipelineMode m) {
    switch (m) {
        case PipelineMode::shallow: return "shallow";
        case PipelineMode::two_hidden: return "two_hidden";
        case PipelineMode::dyadic_a0: return "dyadic_A0";
        case PipelineMode::spline_edges: return "spline_edges";
    }
    return "?";
}

inline PipelineMode pipeline_mode_from_name(const std::string& s) {
    if (s == "shallow") return PipelineMode::shallow;
    if (s == "two_hidden") return PipelineMode::two_hidden;
    if (s == "dyadic_A0" || s == "dyadic_a0") return PipelineMode::dyadic_a0;
    if (s == "spline_edges") return PipelineMode::spline_edges;
    throw ValidationError("unknown pipeline mode '" + s + "'");
}

struct PipelineConfig {
    TargetSpec target;
    EdgeFunction sigma = EdgeFunction::named("tanh");
    int num_units = 32;
    std::uint64_t seed = 0;
    std::optional<int> dyadic_scale; // rounding exponent r
    PipelineMode mode = PipelineMode::two_hidden;
    double ridge_lambda = 1e-8;
    int spline_degree = 3;
    int spline_interior_knots = 8;
    GadgetOptions gadget;
};

struct FitReport {
    MlpNetwork mlp;
    double sup_error = 0.0;
    std::vector<double> sup_argmax;
    std::optional<MlpNetwork> dyadic_mlp;
    std::optional<double> dyadic_sup_error;
    std::optional<double> rounding_drift; // sup |H - H'| on the grid
    KanNetwork kan;
    double kan_vs_mlp_error = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

/// Rewrites a two-hidden-layer compilation so every edge has the base/spline
/// composite form: affine parts go through exact spline coefficients on
/// per-column knot ranges (empirical input range, padded 10%), sigma edges
/// become pure base terms.
inline KanNetwork splinify_network(const KanNetwork& net, const std::string& base_id, int degree,
                                   int interior_knots, const TargetSpec& target) {
    // per-node value ranges across the estimation grid
    std::vector<std::vector<double>> lo(static_cast<std::size_t>(net.depth()));
    std::vector<std::vector<double>> hi(static_cast<std::size_t>(net.depth()));
    bool first = true;
    detail::for_each_grid_point(target.lower, target.upper, target.grid_density,
                                [&](const std::vector<double>& x) {
                                    auto trace = eval_kan_trace(net, x);
                                    for (std::size_t l = 0; l < trace.size(); ++l) {
                                        if (first) {
                                            lo[l] = trace[l];
                                            hi[l] = trace[l];
                                        } else {
                                            for (std::size_t k = 0; k < trace[l].size(); ++k) {
                                                lo[l][k] = std::min(lo[l][k], trace[l][k]);
                                                hi[l][k] = std::max(hi[l][k], trace[l][k]);
                                            }
                                        }
                                    }
                                    first = false;
                                });

    auto make_space = [&](double a, double b) {
        double span = b - a;
        if (span < 1e-9) {
            a -= 0.5;
            b += 0.5;
        } else {
            a -= 0.1 * span;
            b += 0.1 * span;
        }
        return SplineSpace::uniform(degree, a, b, interior_knots);
    };

    std::vector<Layer> layers;
    for (int l = 0; l < net.depth(); ++l) {
        const Layer& src = net.layer(l);
        // shared space per source column
        std::vector<std::shared_ptr<const SplineSpace>> spaces(static_cast<std::size_t>(src.fan_in()));
        for (int j = 0; j < src.fan_in(); ++j) {
            double a = (l == 0) ? target.lower[static_cast<std::size_t>(j)]
                                : lo[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(j)];
            double b = (l == 0) ? target.upper[static_cast<std::size_t>(j)]
                                : hi[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(j)];
            spaces[static_cast<std::size_t>(j)] = make_space(a, b);
        }
        Layer out = Layer::zeros(src.width(), src.fan_in());
        for (int k = 0; k < src.width(); ++k) {
            for (int j = 0; j < src.fan_in(); ++j) {
                const EdgeFunction& e = src.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
                const auto& space = spaces[static_cast<std::size_t>(j)];
                if (const AffineMap* aff = e.as_affine()) {
                    out.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                        EdgeFunction::composite(0.0, base_id, 1.0,
                                                SplineFn{space, affine_in_space(*space, aff->a, aff->b)});
                } else if (e.as_named()) {
                    out.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] =
                        EdgeFunction::composite(
                            1.0, e.as_named()->id, 0.0,
                            SplineFn{space, std::vector<double>(static_cast<std::size_t>(space->dim()), 0.0)});
                } else {
                    throw ValidationError("spline_edges: unexpected edge kind in compiled network");
                }
            }
        }
        layers.push_back(std::move(out));
    }
    return KanNetwork(net.input_width(), std::move(layers));
}

} // namespace detail

/// Fit, optionally round to dyadic parameters, compile with the selected
/// builder, and certify the compilation against the fitted network.
inline FitReport approximate_pipeline(const PipelineConfig& config) {
    config.target.validate();
    if (config.mode == PipelineMode::spline_edges && config.sigma.kind() != EdgeKind::named)
        throw ValidationError("pipeline: spline_edges mode needs a named base activation");

    std::vector<std::string> warnings;
    int grid_points = 1;
    for (int j = 0; j < config.target.dimension; ++j) grid_points *= config.target.grid_density;
    if (config.num_units > grid_points)
        warnings.push_back("unit count " + std::to_string(config.num_units) +
                           " exceeds estimation grid size " + std::to_string(grid_points));

    MlpNetwork mlp =
        fit_shallow_mlp(config.target, config.sigma, config.num_units, config.seed, config.ridge_lambda);
    SupError fit_err = sup_error_on_grid(config.target, mlp);

    std::optional<MlpNetwork> dyadic_mlp;
    std::optional<double> dyadic_sup;
    std::optional<double> drift;
    if (config.dyadic_scale || config.mode == PipelineMode::dyadic_a0) {
        int r = config.dyadic_scale.value_or(30);
        dyadic_mlp = round_dyadic(mlp, r);
        dyadic_sup = sup_error_on_grid(config.target, *dyadic_mlp).value;
        double worst = 0.0;
        detail::for_each_grid_point(config.target.lower, config.target.upper, config.target.grid_density,
                                    [&](const std::vector<double>& x) {
                                        worst = std::max(worst,
                                                         std::abs(eval_mlp(mlp, x) - eval_mlp(*dyadic_mlp, x)));
                                    });
        drift = worst;
    }

    std::optional<KanNetwork> kan;
    const MlpNetwork* reference = &mlp;
    switch (config.mode) {
        case PipelineMode::shallow:
            kan = mlp_to_kan_shallow(mlp);
            break;
        case PipelineMode::two_hidden:
            kan = mlp_to_kan_two_hidden(mlp);
            break;
        case PipelineMode::dyadic_a0:
            kan = dyadic_mlp_gadget(*dyadic_mlp, config.gadget).network;
            reference = &*dyadic_mlp;
            break;
        case PipelineMode::spline_edges:
            kan = detail::splinify_network(mlp_to_kan_two_hidden(mlp), config.sigma.as_named()->id,
                                           config.spline_degree, config.spline_interior_knots,
                                           config.target);
            break;
    }

    double compile_err = 0.0;
    detail::for_each_grid_point(config.target.lower, config.target.upper, config.target.grid_density,
                                [&](const std::vector<double>& x) {
                                    compile_err = std::max(compile_err,
                                                           std::abs(eval_kan(*kan, x)[0] -
                                                                    eval_mlp(*reference, x)));
                                });

    return FitReport{std::move(mlp),
                     fit_err.value,
                     fit_err.argmax,
                     std::move(dyadic_mlp),
                     dyadic_sup,
                     drift,
                     std::move(*kan),
                     compile_err,
                     std::move(warnings)};
}

} // namespace kansynth
