#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kansynth/compose.hpp"
#include "kansynth/dyadic.hpp"
#include "kansynth/mlp.hpp"
#include "kansynth/network.hpp"

namespace kansynth {

/// The five-map affine family {0, 1, t, -t, t/2} as (a, b) payloads.
inline const AffineDictionary& a0_family() {
    static const AffineDictionary fam = {
        {0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {-1.0, 0.0}, {0.5, 0.0}};
    return fam;
}

/// A synthesized network together with its recorded affine dictionary and
/// structural size.
struct GadgetReport {
    KanNetwork network;
    AffineDictionary dictionary;
    int depth = 0;
    int max_width = 0;
};

inline GadgetReport make_gadget_report(KanNetwork net) {
    AffineDictionary dict = collect_affine_dictionary(net);
    int depth = net.depth();
    int width = net.max_width();
    return GadgetReport{std::move(net), std::move(dict), depth, width};
}

struct GadgetOptions {
    // hard cap on the fan-in of any summing node emitted by a dyadic builder
    int fanout_bound = 4096;
    // numerators above this use halving chains instead of literal fan-out
    // (only where a builder permits the substitution)
    int naive_fanout_limit = 64;
};

// ---------------------------------------------------------------------------
// small structural building blocks
// ---------------------------------------------------------------------------

/// Scalar identity as a one-layer network.
inline KanNetwork identity_network() {
    Layer layer = Layer::zeros(1, 1);
    layer.edges[0][0] = EdgeFunction::identity();
    return KanNetwork(1, {std::move(layer)});
}

/// n -> 1 network selecting coordinate j.
inline KanNetwork projection_network(int n, int j) {
    if (j < 0 || j >= n) throw ValidationError("projection: index out of range");
    Layer layer = Layer::zeros(1, n);
    layer.edges[0][static_cast<std::size_t>(j)] = EdgeFunction::identity();
    return KanNetwork(n, {std::move(layer)});
}

/// n -> 1 network computing the constant 1 (edge t -> 1 on the first input).
inline KanNetwork constant_one_network(int n) {
    Layer layer = Layer::zeros(1, n);
    layer.edges[0][0] = EdgeFunction::constant(1.0);
    return KanNetwork(n, {std::move(layer)});
}

/// Appends one layer built from sparse rows; unset edges are zero.
inline void append_layer(std::vector<Layer>& layers, int width, int fan_in,
                         const std::vector<std::vector<std::pair<int, EdgeFunction>>>& rows) {
    Layer layer = Layer::zeros(width, fan_in);
    for (std::size_t k = 0; k < rows.size(); ++k)
        for (const auto& [src, fn] : rows[k])
            layer.edges[k][static_cast<std::size_t>(src)] = fn;
    layers.push_back(std::move(layer));
}

namespace detail {

using SparseRow = std::vector<std::pair<int, EdgeFunction>>;

// One layer of a branch program. Rows index the branch's own nodes in the
// previous step, except in the first step where they index the enclosing
// frontier directly.
struct BranchStep {
    std::vector<SparseRow> rows;
    int width() const { return static_cast<int>(rows.size()); }
};

using BranchProgram = std::vector<BranchStep>;

inline BranchStep carry_step(int from_local = 0) {
    return BranchStep{{SparseRow{{from_local, EdgeFunction::identity()}}}};
}

/// Emits a group of branch programs side by side. Programs are padded at the
/// back with identity steps to a common length; every branch must end with a
/// single node, and after the stage the frontier holds those outputs in
/// branch order.
inline void emit_stage(std::vector<Layer>& layers, int frontier_width,
                       std::vector<BranchProgram> programs) {
    std::size_t steps = 0;
    for (const auto& p : programs) steps = std::max(steps, p.size());
    for (auto& p : programs) {
        if (p.empty()) throw ValidationError("emit_stage: empty branch program");
        while (p.size() < steps) p.push_back(carry_step());
    }

    std::vector<int> prev_base(programs.size(), 0);
    std::vector<int> prev_width(programs.size(), 0);
    for (std::size_t t = 0; t < steps; ++t) {
        int width = 0;
        for (const auto& p : programs) width += p[t].width();
        int fan_in = frontier_width;
        if (t > 0) {
            fan_in = 0;
            for (std::size_t b = 0; b < programs.size(); ++b) fan_in += prev_width[b];
        }
        Layer layer = Layer::zeros(width, fan_in);
        int base = 0;
        for (std::size_t b = 0; b < programs.size(); ++b) {
            const BranchStep& step = programs[b][t];
            for (int k = 0; k < step.width(); ++k) {
                for (const auto& [src, fn] : step.rows[static_cast<std::size_t>(k)]) {
                    int global_src = (t == 0) ? src : prev_base[b] + src;
                    layer.edges[static_cast<std::size_t>(base + k)][static_cast<std::size_t>(global_src)] = fn;
                }
            }
            prev_base[b] = base;
            base += step.width();
        }
        for (std::size_t b = 0; b < programs.size(); ++b) prev_width[b] = programs[b][t].width();
        layers.push_back(std::move(layer));
    }
    for (std::size_t b = 0; b < programs.size(); ++b)
        if (programs[b].back().width() != 1)
            throw ValidationError("emit_stage: branch must end with a single node");
}

/// Plan computing value * (source wire) for a dyadic value, using only maps
/// from the A0 family. `source` indexes the enclosing frontier.
///
/// The literal layout follows the constant/linear constructions: r halving
/// layers, then |m| identity copies summed at one node, then a sign layer.
/// `fan_at` fixes the step index (1-based) of the copy layer so that the wide
/// layers of sibling branches line up. Above `naive_limit` the copies are
/// replaced by a running sum over the binary digits of m, which keeps the
/// branch two nodes wide at the cost of extra halving steps.
inline BranchProgram scale_plan(Dyadic value, int source, int fan_at, const GadgetOptions& opts,
                                bool allow_digit_sum, const std::string& what) {
    BranchProgram prog;
    if (value.is_zero()) {
        prog.push_back(BranchStep{{SparseRow{{source, EdgeFunction::zero()}}}});
        return prog;
    }
    const bool negative = value.is_negative();
    const std::int64_t magnitude = negative ? -value.m : value.m;
    const int r = value.r;

    if (magnitude <= opts.naive_fanout_limit || !allow_digit_sum) {
        if (magnitude > opts.fanout_bound)
            throw GadgetSizeError(what + ": numerator " + std::to_string(magnitude) +
                                  " exceeds fan-out bound " + std::to_string(opts.fanout_bound));
        if (fan_at < r + 1) throw ValidationError("scale_plan: fan position before halvings finish");
        // halving chain
        for (int i = 0; i < r; ++i) {
            int src = (i == 0) ? source : 0;
            prog.push_back(BranchStep{{SparseRow{{src, EdgeFunction::affine(0.5, 0.0)}}}});
        }
        if (prog.empty() && fan_at > 1) prog.push_back(carry_step(source));
        while (static_cast<int>(prog.size()) < fan_at - 1) prog.push_back(carry_step());
        // |m| identity copies of the carried value
        BranchStep fan;
        int carry_src = prog.empty() ? source : 0;
        for (std::int64_t i = 0; i < magnitude; ++i)
            fan.rows.push_back(SparseRow{{carry_src, EdgeFunction::identity()}});
        prog.push_back(std::move(fan));
        // sum
        BranchStep sum;
        SparseRow row;
        for (std::int64_t i = 0; i < magnitude; ++i)
            row.push_back({static_cast<int>(i), EdgeFunction::identity()});
        sum.rows.push_back(std::move(row));
        prog.push_back(std::move(sum));
    } else {
        // running sum over binary digits: value = I + sum_d bit_d / 2^d
        const std::int64_t integer_part = magnitude >> r;
        if (integer_part > opts.fanout_bound)
            throw GadgetSizeError(what + ": integer part " + std::to_string(integer_part) +
                                  " exceeds fan-out bound " + std::to_string(opts.fanout_bound));
        std::vector<bool> frac_bits(static_cast<std::size_t>(r) + 1, false);
        for (int d = 1; d <= r; ++d)
            frac_bits[static_cast<std::size_t>(d)] = ((magnitude >> (r - d)) & 1) != 0;
        int deepest = 0;
        for (int d = 1; d <= r; ++d)
            if (frac_bits[static_cast<std::size_t>(d)]) deepest = d;

        // step 1: integer-part copies plus the head of the halving chain
        {
            BranchStep s;
            for (std::int64_t i = 0; i < integer_part; ++i)
                s.rows.push_back(SparseRow{{source, EdgeFunction::identity()}});
            if (deepest >= 1) s.rows.push_back(SparseRow{{source, EdgeFunction::affine(0.5, 0.0)}});
            prog.push_back(std::move(s));
        }
        const int copies = static_cast<int>(integer_part);
        const int chain_local = copies; // index of the halving node, when present
        // step 2: accumulator seeded with the copies and, if set, the 1/2 digit
        {
            BranchStep s;
            SparseRow acc;
            for (int i = 0; i < copies; ++i) acc.push_back({i, EdgeFunction::identity()});
            if (deepest >= 1 && frac_bits[1]) acc.push_back({chain_local, EdgeFunction::identity()});
            s.rows.push_back(std::move(acc));
            if (deepest >= 2) s.rows.push_back(SparseRow{{chain_local, EdgeFunction::affine(0.5, 0.0)}});
            prog.push_back(std::move(s));
        }
        // steps 3..deepest+1: carry the accumulator, tapping digits as they appear
        for (int d = 2; d <= deepest; ++d) {
            BranchStep s;
            SparseRow acc{{0, EdgeFunction::identity()}};
            if (frac_bits[static_cast<std::size_t>(d)]) acc.push_back({1, EdgeFunction::identity()});
            s.rows.push_back(std::move(acc));
            if (d < deepest) s.rows.push_back(SparseRow{{1, EdgeFunction::affine(0.5, 0.0)}});
            prog.push_back(std::move(s));
        }
    }
    // sign layer
    prog.push_back(BranchStep{
        {SparseRow{{0, negative ? EdgeFunction::affine(-1.0, 0.0) : EdgeFunction::identity()}}}});
    return prog;
}

/// Plan computing the dyadic constant, ignoring the source value: |m| nodes
/// of constant 1, a summing node, a sign layer, then r halvings.
inline BranchProgram constant_plan(Dyadic value, int source, const GadgetOptions& opts,
                                   bool allow_digit_sum, const std::string& what) {
    BranchProgram prog;
    if (value.is_zero()) {
        prog.push_back(BranchStep{{SparseRow{{source, EdgeFunction::zero()}}}});
        return prog;
    }
    const bool negative = value.is_negative();
    const std::int64_t magnitude = negative ? -value.m : value.m;

    if (magnitude <= opts.naive_fanout_limit || !allow_digit_sum) {
        if (magnitude > opts.fanout_bound)
            throw GadgetSizeError(what + ": numerator " + std::to_string(magnitude) +
                                  " exceeds fan-out bound " + std::to_string(opts.fanout_bound));
        BranchStep ones;
        for (std::int64_t i = 0; i < magnitude; ++i)
            ones.rows.push_back(SparseRow{{source, EdgeFunction::constant(1.0)}});
        prog.push_back(std::move(ones));
        BranchStep sum;
        SparseRow row;
        for (std::int64_t i = 0; i < magnitude; ++i)
            row.push_back({static_cast<int>(i), EdgeFunction::identity()});
        sum.rows.push_back(std::move(row));
        prog.push_back(std::move(sum));
        prog.push_back(BranchStep{
            {SparseRow{{0, negative ? EdgeFunction::affine(-1.0, 0.0) : EdgeFunction::identity()}}}});
        for (int i = 0; i < value.r; ++i)
            prog.push_back(BranchStep{{SparseRow{{0, EdgeFunction::affine(0.5, 0.0)}}}});
    } else {
        // constant 1, then scale it like a wire
        prog.push_back(BranchStep{{SparseRow{{source, EdgeFunction::constant(1.0)}}}});
        BranchProgram scaled = scale_plan(value, 0, value.r + 1, opts, true, what);
        // re-root: the scaled program's first step reads local node 0
        for (auto& step : scaled) prog.push_back(std::move(step));
    }
    return prog;
}

inline EdgeFunction activation_edge(const EdgeFunction& act) {
    if (auto aff = as_affine_function(act)) return EdgeFunction::affine(aff->a, aff->b);
    return act;
}

} // namespace detail

// ---------------------------------------------------------------------------
// MLP -> KAN compilers
// ---------------------------------------------------------------------------

enum class OutputScaling {
    affine_layer, // sigma edge followed by an affine c_k scaling layer
    scaled_edge   // literal c_k * sigma(t) output edges
};

namespace detail {

/// First hidden layer of both compilers: psi_kj(t) = w_kj t + beta_kj with
/// the whole bias on j = 0.
inline Layer mlp_inner_layer(const MlpNetwork& mlp) {
    Layer layer = Layer::zeros(static_cast<int>(mlp.units.size()), mlp.n);
    for (std::size_t k = 0; k < mlp.units.size(); ++k) {
        const MlpUnit& u = mlp.units[k];
        layer.edges[k][0] = EdgeFunction::affine(u.w[0], u.b);
        for (std::size_t j = 1; j < u.w.size(); ++j)
            layer.edges[k][j] = EdgeFunction::affine(u.w[j], 0.0);
    }
    return layer;
}

} // namespace detail

/// One-hidden-layer realization of an MLP. By default the output edges
/// c_k * sigma(t) are split into a sigma edge plus an affine scaling layer so
/// that every edge is affine or sigma; `scaled_edge` emits the literal form
/// instead (a composite edge for named bases, folded coefficients for
/// polynomial ones).
inline KanNetwork mlp_to_kan_shallow(const MlpNetwork& mlp,
                                     OutputScaling scaling = OutputScaling::affine_layer) {
    mlp.validate();
    const int N = static_cast<int>(mlp.units.size());
    std::vector<Layer> layers;
    layers.push_back(detail::mlp_inner_layer(mlp));

    if (scaling == OutputScaling::scaled_edge) {
        Layer out = Layer::zeros(1, N);
        for (int k = 0; k < N; ++k) {
            const double c = mlp.units[static_cast<std::size_t>(k)].c;
            EdgeFunction edge;
            if (auto aff = as_affine_function(mlp.activation)) {
                edge = EdgeFunction::affine(c * aff->a, c * aff->b);
            } else if (const PolynomialFn* p = mlp.activation.as_polynomial()) {
                std::vector<double> scaled = p->coeffs;
                for (double& v : scaled) v *= c;
                edge = EdgeFunction::polynomial(std::move(scaled));
            } else {
                edge = EdgeFunction::scaled_named(c, mlp.activation.as_named()->id);
            }
            out.edges[0][static_cast<std::size_t>(k)] = edge;
        }
        layers.push_back(std::move(out));
        return KanNetwork(mlp.n, std::move(layers));
    }

    const EdgeFunction act = detail::activation_edge(mlp.activation);
    Layer sig = Layer::zeros(N, N);
    for (int k = 0; k < N; ++k)
        sig.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = act;
    layers.push_back(std::move(sig));

    Layer out = Layer::zeros(1, N);
    for (int k = 0; k < N; ++k)
        out.edges[0][static_cast<std::size_t>(k)] =
            EdgeFunction::affine(mlp.units[static_cast<std::size_t>(k)].c, 0.0);
    layers.push_back(std::move(out));
    return KanNetwork(mlp.n, std::move(layers));
}

/// The three-layer construction with two hidden layers: affine inner edges,
/// a diagonal sigma layer, and affine output scalings. Every edge is affine
/// or equal to sigma.
inline KanNetwork mlp_to_kan_two_hidden(const MlpNetwork& mlp) {
    return mlp_to_kan_shallow(mlp, OutputScaling::affine_layer);
}

// ---------------------------------------------------------------------------
// dyadic gadgets
// ---------------------------------------------------------------------------

/// Scalar network computing t -> q*t + b from the A0 family alone. Exact at
/// dyadic inputs while results stay below 2^53.
inline GadgetReport dyadic_affine_gadget(Dyadic q, Dyadic b, const GadgetOptions& opts = {}) {
    std::vector<Layer> layers;
    int fan_at = q.r + 1;
    // keep the copy layer off the constant branch's wide first layer
    if (fan_at == 2) fan_at = 3;
    std::vector<detail::BranchProgram> branches;
    branches.push_back(detail::scale_plan(q, 0, fan_at, opts, false, "dyadic_affine_gadget"));
    branches.push_back(detail::constant_plan(b, 0, opts, false, "dyadic_affine_gadget"));
    detail::emit_stage(layers, 1, std::move(branches));

    append_layer(layers, 1, 2,
                 {{{0, EdgeFunction::identity()}, {1, EdgeFunction::identity()}}});
    return make_gadget_report(KanNetwork(1, std::move(layers)));
}

/// Deep network over A0 plus the activation realizing an MLP whose weights,
/// biases and output coefficients are all dyadic. Parameters whose numerator
/// exceeds the naive fan-out limit are realized with digit-sum chains.
inline GadgetReport dyadic_mlp_gadget(const MlpNetwork& mlp, const GadgetOptions& opts = {}) {
    mlp.validate();
    const int N = static_cast<int>(mlp.units.size());
    const int n = mlp.n;

    struct DyadicUnit {
        std::vector<Dyadic> w;
        Dyadic b, c;
    };
    std::vector<DyadicUnit> dy(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        const MlpUnit& u = mlp.units[static_cast<std::size_t>(k)];
        DyadicUnit& d = dy[static_cast<std::size_t>(k)];
        for (double wj : u.w) {
            auto v = Dyadic::from_double_exact(wj);
            if (!v) throw ValidationError("dyadic_mlp_gadget: weight " + std::to_string(wj) +
                                          " is not a representable dyadic");
            d.w.push_back(*v);
        }
        auto vb = Dyadic::from_double_exact(u.b);
        auto vc = Dyadic::from_double_exact(u.c);
        if (!vb || !vc)
            throw ValidationError("dyadic_mlp_gadget: bias or coefficient is not a representable dyadic");
        d.b = *vb;
        d.c = *vc;
    }

    std::vector<Layer> layers;

    // stage A: per unit, one branch per weight plus a constant branch
    int fan_at = 1;
    for (const auto& d : dy)
        for (const auto& w : d.w)
            if ((w.m < 0 ? -w.m : w.m) <= opts.naive_fanout_limit)
                fan_at = std::max(fan_at, w.r + 1);
    if (fan_at == 2) fan_at = 3;
    bool any_const = false;
    for (const auto& d : dy) any_const |= !d.b.is_zero();
    if (any_const && fan_at < 3) fan_at = 3;

    std::vector<detail::BranchProgram> stage_a;
    for (int k = 0; k < N; ++k) {
        const DyadicUnit& d = dy[static_cast<std::size_t>(k)];
        for (int j = 0; j < n; ++j)
            stage_a.push_back(detail::scale_plan(d.w[static_cast<std::size_t>(j)], j,
                                                 std::max(fan_at, d.w[static_cast<std::size_t>(j)].r + 1),
                                                 opts, true, "dyadic_mlp_gadget"));
        stage_a.push_back(detail::constant_plan(d.b, 0, opts, true, "dyadic_mlp_gadget"));
    }
    detail::emit_stage(layers, n, std::move(stage_a));

    // per-unit summing nodes: w_k . x + b_k
    {
        std::vector<std::vector<std::pair<int, EdgeFunction>>> rows(static_cast<std::size_t>(N));
        for (int k = 0; k < N; ++k)
            for (int j = 0; j <= n; ++j)
                rows[static_cast<std::size_t>(k)].push_back(
                    {k * (n + 1) + j, EdgeFunction::identity()});
        append_layer(layers, N, N * (n + 1), rows);
    }

    // diagonal activation layer
    {
        const EdgeFunction act = detail::activation_edge(mlp.activation);
        Layer sig = Layer::zeros(N, N);
        for (int k = 0; k < N; ++k)
            sig.edges[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] = act;
        layers.push_back(std::move(sig));
    }

    // stage B: c_k scalings
    int fan_b = 1;
    for (const auto& d : dy)
        if ((d.c.m < 0 ? -d.c.m : d.c.m) <= opts.naive_fanout_limit)
            fan_b = std::max(fan_b, d.c.r + 1);
    if (fan_b == 2) fan_b = 3;
    std::vector<detail::BranchProgram> stage_b;
    for (int k = 0; k < N; ++k)
        stage_b.push_back(detail::scale_plan(dy[static_cast<std::size_t>(k)].c, k,
                                             std::max(fan_b, dy[static_cast<std::size_t>(k)].c.r + 1),
                                             opts, true, "dyadic_mlp_gadget"));
    detail::emit_stage(layers, N, std::move(stage_b));

    // final summation
    {
        std::vector<std::vector<std::pair<int, EdgeFunction>>> rows(1);
        for (int k = 0; k < N; ++k) rows[0].push_back({k, EdgeFunction::identity()});
        append_layer(layers, 1, N, rows);
    }
    return make_gadget_report(KanNetwork(n, std::move(layers)));
}

// ---------------------------------------------------------------------------
// finite-difference machinery for a fixed polynomial sigma
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> binomial_row(int n) {
    std::vector<double> row{1.0};
    for (int i = 1; i <= n; ++i) {
        std::vector<double> next(static_cast<std::size_t>(i) + 1, 0.0);
        next[0] = 1.0;
        next[static_cast<std::size_t>(i)] = 1.0;
        for (int j = 1; j < i; ++j)
            next[static_cast<std::size_t>(j)] =
                row[static_cast<std::size_t>(j - 1)] + row[static_cast<std::size_t>(j)];
        row = std::move(next);
    }
    return row;
}

/// Coefficients of p(t + s) for p given in ascending order.
inline std::vector<double> poly_shift(const std::vector<double>& coeffs, double s) {
    const int d = static_cast<int>(coeffs.size()) - 1;
    std::vector<double> out(coeffs.size(), 0.0);
    for (int i = 0; i <= d; ++i) {
        double binom = 1.0;
        double power = 1.0;
        for (int p = i; p >= 0; --p) {
            out[static_cast<std::size_t>(p)] += coeffs[static_cast<std::size_t>(i)] * binom * power;
            if (p > 0) {
                binom = binom * static_cast<double>(p) / static_cast<double>(i - p + 1);
                power *= s;
            }
        }
    }
    return out;
}

} // namespace detail

/// Iterated difference of a polynomial sigma reduced to a quadratic:
/// q(t) = sum_r c_r sigma(t + r h) with alternating binomial weights.
struct FdQuadratic {
    GadgetReport gadget;
    double A = 0.0; // leading coefficient a_d * (d!/2) * h^(d-2)
    double B = 0.0;
    double C = 0.0;
    std::vector<double> weights; // c_r, r = 0..d-2
    double h = 0.0;
};

inline FdQuadratic fd_quadratic_gadget(const EdgeFunction& sigma, double h) {
    const PolynomialFn* poly = sigma.as_polynomial();
    if (!poly) throw ValidationError("fd_quadratic_gadget: sigma must be a polynomial edge");
    const int d = poly->degree();
    if (d < 2) throw ValidationError("fd_quadratic_gadget: polynomial degree must be >= 2, got " +
                                     std::to_string(d));
    if (h == 0.0) throw ValidationError("fd_quadratic_gadget: step h must be nonzero");

    const int m = d - 2;
    std::vector<double> binom = detail::binomial_row(m);
    std::vector<double> weights(static_cast<std::size_t>(m) + 1);
    for (int r = 0; r <= m; ++r)
        weights[static_cast<std::size_t>(r)] =
            ((m - r) % 2 == 0 ? 1.0 : -1.0) * binom[static_cast<std::size_t>(r)];

    // two-hidden-layer network: shifts, diagonal sigma, weighted sum
    const int width = m + 1;
    std::vector<Layer> layers;
    {
        Layer shifts = Layer::zeros(width, 1);
        for (int r = 0; r <= m; ++r)
            shifts.edges[static_cast<std::size_t>(r)][0] =
                EdgeFunction::affine(1.0, static_cast<double>(r) * h);
        layers.push_back(std::move(shifts));
    }
    {
        Layer sig = Layer::zeros(width, width);
        for (int r = 0; r <= m; ++r)
            sig.edges[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] = sigma;
        layers.push_back(std::move(sig));
    }
    {
        Layer out = Layer::zeros(1, width);
        for (int r = 0; r <= m; ++r)
            out.edges[0][static_cast<std::size_t>(r)] =
                EdgeFunction::affine(weights[static_cast<std::size_t>(r)], 0.0);
        layers.push_back(std::move(out));
    }

    // A from the leading-coefficient law; B, C from the expanded sum
    double half_factorial = 0.5;
    for (int i = 2; i <= d; ++i) half_factorial *= static_cast<double>(i);
    double a_lead = poly->coeffs.back() * half_factorial;
    for (int i = 0; i < m; ++i) a_lead *= h;

    std::vector<double> expanded(poly->coeffs.size(), 0.0);
    for (int r = 0; r <= m; ++r) {
        std::vector<double> shifted = detail::poly_shift(poly->coeffs, static_cast<double>(r) * h);
        for (std::size_t p = 0; p < shifted.size(); ++p)
            expanded[p] += weights[static_cast<std::size_t>(r)] * shifted[p];
    }

    FdQuadratic result{make_gadget_report(KanNetwork(1, std::move(layers))),
                       a_lead,
                       expanded.size() > 1 ? expanded[1] : 0.0,
                       expanded[0],
                       std::move(weights),
                       h};
    return result;
}

/// Expanded quadratic coefficient of the difference sum, for cross-checks
/// against the reported A.
inline double fd_quadratic_expanded_lead(const EdgeFunction& sigma, double h) {
    const PolynomialFn* poly = sigma.as_polynomial();
    if (!poly || poly->degree() < 2)
        throw ValidationError("fd_quadratic_expanded_lead: need a polynomial of degree >= 2");
    const int m = poly->degree() - 2;
    std::vector<double> binom = detail::binomial_row(m);
    double acc = 0.0;
    for (int r = 0; r <= m; ++r) {
        double w = ((m - r) % 2 == 0 ? 1.0 : -1.0) * binom[static_cast<std::size_t>(r)];
        std::vector<double> shifted = detail::poly_shift(poly->coeffs, static_cast<double>(r) * h);
        if (shifted.size() > 2) acc += w * shifted[2];
    }
    return acc;
}

/// Scalar network computing t -> t^2 exactly (up to roundoff) from sigma and
/// affine edges: t^2 = (q(t) - B t - C) / A. Retries a short list of steps
/// when the requested h leaves A below the conditioning floor.
inline GadgetReport square_gadget(const EdgeFunction& sigma, double h = 1.0) {
    const PolynomialFn* poly = sigma.as_polynomial();
    if (!poly) throw ValidationError("square_gadget: sigma must be a polynomial edge");
    const int d = poly->degree();
    if (d < 2) throw ValidationError("square_gadget: polynomial degree must be >= 2");

    const double floor_a = 1e-12;
    double half_factorial = 0.5;
    for (int i = 2; i <= d; ++i) half_factorial *= static_cast<double>(i);
    double chosen = 0.0;
    bool found = false;
    for (double cand : {h, 1.0, 0.5, 2.0, 0.25}) {
        if (cand == 0.0) continue;
        double a = poly->coeffs.back() * half_factorial;
        for (int i = 0; i < d - 2; ++i) a *= cand;
        if (std::abs(a) >= floor_a) {
            chosen = cand;
            found = true;
            break;
        }
    }
    if (!found)
        throw ConditioningError("square_gadget: |A| below 1e-12 for every candidate step size");

    FdQuadratic fdq = fd_quadratic_gadget(sigma, chosen);
    KanNetwork par = parallel_compose(fdq.gadget.network, identity_network());
    std::vector<Layer> layers = par.layers();
    const double inv_a = 1.0 / fdq.A;
    append_layer(layers, 1, 2,
                 {{{0, EdgeFunction::affine(inv_a, 0.0)},
                   {1, EdgeFunction::affine(-inv_a * fdq.B, -inv_a * fdq.C)}}});
    return make_gadget_report(KanNetwork(1, std::move(layers)));
}

/// (u, v) -> u*v through the polarization identity over three squaring
/// branches. With `a0_scaffold` the final halving and signs are drawn from
/// the A0 family instead of generic affine coefficients.
inline KanNetwork multiply_gadget(const GadgetReport& sq, bool a0_scaffold = false) {
    if (sq.network.input_width() != 1 || sq.network.output_width() != 1)
        throw ValidationError("multiply_gadget: squaring network must be scalar");

    auto scalar_row = [](const EdgeFunction& e0, const EdgeFunction& e1) {
        Layer layer = Layer::zeros(1, 2);
        layer.edges[0][0] = e0;
        layer.edges[0][1] = e1;
        return KanNetwork(2, {std::move(layer)});
    };
    KanNetwork sum_uv = scalar_row(EdgeFunction::identity(), EdgeFunction::identity());
    KanNetwork pick_u = scalar_row(EdgeFunction::identity(), EdgeFunction::zero());
    KanNetwork pick_v = scalar_row(EdgeFunction::zero(), EdgeFunction::identity());

    KanNetwork b_sum = serial_compose(sq.network, sum_uv);
    KanNetwork b_u = serial_compose(sq.network, pick_u);
    KanNetwork b_v = serial_compose(sq.network, pick_v);
    KanNetwork par = parallel_compose(parallel_compose(b_sum, b_u), b_v);

    std::vector<Layer> layers = par.layers();
    if (a0_scaffold) {
        Layer halve = Layer::zeros(3, 3);
        for (int i = 0; i < 3; ++i)
            halve.edges[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] =
                EdgeFunction::affine(0.5, 0.0);
        layers.push_back(std::move(halve));
        append_layer(layers, 1, 3,
                     {{{0, EdgeFunction::identity()},
                       {1, EdgeFunction::affine(-1.0, 0.0)},
                       {2, EdgeFunction::affine(-1.0, 0.0)}}});
    } else {
        append_layer(layers, 1, 3,
                     {{{0, EdgeFunction::affine(0.5, 0.0)},
                       {1, EdgeFunction::affine(-0.5, 0.0)},
                       {2, EdgeFunction::affine(-0.5, 0.0)}}});
    }
    return KanNetwork(2, std::move(layers));
}

// ---------------------------------------------------------------------------
// multivariate polynomials
// ---------------------------------------------------------------------------

struct Monomial {
    std::vector<int> exponents;
    double coeff = 0.0;
};

struct SparsePolynomial {
    int n = 0;
    std::vector<Monomial> terms;
};

inline double eval_sparse_polynomial(const SparsePolynomial& p, const std::vector<double>& x) {
    double acc = 0.0;
    for (const auto& term : p.terms) {
        double v = term.coeff;
        for (int j = 0; j < p.n; ++j)
            for (int e = 0; e < term.exponents[static_cast<std::size_t>(j)]; ++e)
                v *= x[static_cast<std::size_t>(j)];
        acc += v;
    }
    return acc;
}

struct PolynomialGadgetOptions {
    bool dyadic = false; // restrict scaffolding to A0 and require dyadic coefficients
    GadgetOptions gadget;
};

/// Network computing a multivariate polynomial: monomials are built by
/// left-folded multiplications (exponents expanded unary) and combined
/// affinely. With the dyadic flag, coefficient scalings go through A0
/// gadgets so all affine edges come from A0 plus the squaring dictionary.
inline GadgetReport polynomial_gadget(const SparsePolynomial& p, const EdgeFunction& sigma, double h,
                                      const PolynomialGadgetOptions& opts = {}) {
    if (p.n < 1) throw ValidationError("polynomial_gadget: dimension must be positive");
    for (const auto& term : p.terms) {
        if (static_cast<int>(term.exponents.size()) != p.n)
            throw ValidationError("polynomial_gadget: exponent vector length mismatch");
        for (int e : term.exponents)
            if (e < 0) throw ValidationError("polynomial_gadget: negative exponent");
    }
    if (p.terms.empty())
        return make_gadget_report(KanNetwork(p.n, {Layer::zeros(1, p.n)}));

    GadgetReport sq = square_gadget(sigma, h);

    std::optional<KanNetwork> combined;
    std::vector<double> coeffs;
    for (const auto& term : p.terms) {
        std::vector<int> factors;
        for (int j = 0; j < p.n; ++j)
            factors.insert(factors.end(), static_cast<std::size_t>(term.exponents[static_cast<std::size_t>(j)]),
                           j);
        KanNetwork monomial = factors.empty()
                                  ? constant_one_network(p.n)
                                  : projection_network(p.n, factors[0]);
        for (std::size_t i = 1; i < factors.size(); ++i) {
            KanNetwork pair = parallel_compose(monomial, projection_network(p.n, factors[i]));
            monomial = serial_compose(multiply_gadget(sq, opts.dyadic), pair);
        }
        if (opts.dyadic) {
            auto c = Dyadic::from_double_exact(term.coeff);
            if (!c)
                throw ValidationError("polynomial_gadget: coefficient " + std::to_string(term.coeff) +
                                      " is not dyadic");
            std::vector<Layer> scale_layers;
            std::vector<detail::BranchProgram> one{
                detail::scale_plan(*c, 0, std::max(3, c->r + 1), opts.gadget, true, "polynomial_gadget")};
            detail::emit_stage(scale_layers, 1, std::move(one));
            monomial = serial_compose(KanNetwork(1, std::move(scale_layers)), monomial);
            coeffs.push_back(1.0);
        } else {
            coeffs.push_back(term.coeff);
        }
        combined = combined ? parallel_compose(*combined, monomial) : std::move(monomial);
    }

    std::vector<Layer> layers = combined->layers();
    std::vector<std::vector<std::pair<int, EdgeFunction>>> row(1);
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        row[0].push_back({static_cast<int>(i), opts.dyadic
                                                   ? EdgeFunction::identity()
                                                   : EdgeFunction::affine(coeffs[i], 0.0)});
    append_layer(layers, 1, static_cast<int>(coeffs.size()), row);
    return make_gadget_report(KanNetwork(p.n, std::move(layers)));
}

} // namespace kansynth
