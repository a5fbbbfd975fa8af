#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "kansynth/errors.hpp"
#include "kansynth/spline.hpp"

namespace kansynth {

inline double silu(double t) {
    if (t >= 0.0) return t / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return t * e / (1.0 + e);
}

inline double relu(double t) { return t > 0.0 ? t : 0.0; }

/// Sampled univariate function with linear interpolation between samples and
/// linear extrapolation from the boundary segments.
struct TableFunction {
    std::vector<double> xs;
    std::vector<double> ys;

    double eval(double t) const {
        const std::size_t n = xs.size();
        std::size_t hi = 1;
        if (t >= xs[n - 2]) {
            hi = n - 1;
        } else if (t > xs[0]) {
            std::size_t lo = 0, up = n - 1;
            while (up - lo > 1) {
                std::size_t mid = (lo + up) / 2;
                if (xs[mid] <= t)
                    lo = mid;
                else
                    up = mid;
            }
            hi = lo + 1;
        }
        double x0 = xs[hi - 1], x1 = xs[hi];
        double y0 = ys[hi - 1], y1 = ys[hi];
        return y0 + (t - x0) * (y1 - y0) / (x1 - x0);
    }
};

/// Registry of base functions usable as Named edges. Ships silu, tanh and
/// relu; user tables can be added under fresh ids.
class BaseRegistry {
public:
    static BaseRegistry& instance() {
        static BaseRegistry reg;
        return reg;
    }

    static bool is_builtin(const std::string& id) {
        return id == "silu" || id == "tanh" || id == "relu";
    }

    void register_table(const std::string& id, std::vector<double> xs, std::vector<double> ys) {
        if (is_builtin(id)) throw ValidationError("base registry: cannot replace builtin '" + id + "'");
        if (xs.size() < 2 || xs.size() != ys.size())
            throw ValidationError("base registry: table needs >= 2 samples with matching lengths");
        for (std::size_t i = 0; i + 1 < xs.size(); ++i)
            if (!(xs[i] < xs[i + 1]))
                throw ValidationError("base registry: table abscissae must be strictly increasing");
        std::unique_lock lock(mutex_);
        tables_[id] = TableFunction{std::move(xs), std::move(ys)};
    }

    bool contains(const std::string& id) const {
        if (is_builtin(id)) return true;
        std::shared_lock lock(mutex_);
        return tables_.count(id) > 0;
    }

    double eval(const std::string& id, double t) const {
        if (id == "silu") return silu(t);
        if (id == "tanh") return std::tanh(t);
        if (id == "relu") return relu(t);
        std::shared_lock lock(mutex_);
        auto it = tables_.find(id);
        if (it == tables_.end()) throw ValidationError("base registry: unknown function id '" + id + "'");
        return it->second.eval(t);
    }

private:
    BaseRegistry() = default;
    mutable std::shared_mutex mutex_;
    std::map<std::string, TableFunction> tables_;
};

struct AffineMap {
    double a = 0.0;
    double b = 0.0;
    bool operator==(const AffineMap&) const = default;
};

struct NamedBase {
    std::string id;
    bool operator==(const NamedBase&) const = default;
};

struct PolynomialFn {
    std::vector<double> coeffs; // ascending degree; never empty; {0} is the zero polynomial
    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    bool operator==(const PolynomialFn&) const = default;
};

struct SplineFn {
    std::shared_ptr<const SplineSpace> space;
    std::vector<double> coeffs; // over the B-spline basis, length == space->dim()
};

inline bool operator==(const SplineFn& x, const SplineFn& y) {
    if (x.coeffs != y.coeffs) return false;
    if (x.space == y.space) return true;
    return x.space->degree() == y.space->degree() && x.space->knots() == y.space->knots();
}

// w_b * base(t) + w_s * spline(t); boxed to keep EdgeFunction small.
struct CompositeFn {
    double wb = 0.0;
    NamedBase base;
    double ws = 0.0;
    SplineFn spline;
};

inline bool operator==(const CompositeFn& x, const CompositeFn& y) {
    return x.wb == y.wb && x.base == y.base && x.ws == y.ws && x.spline == y.spline;
}

enum class EdgeKind { affine, named, polynomial, spline, composite };

inline const char* edge_kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::affine: return "affine";
        case EdgeKind::named: return "named";
        case EdgeKind::polynomial: return "poly";
        case EdgeKind::spline: return "spline";
        case EdgeKind::composite: return "composite";
    }
    return "?";
}

/// Univariate function attached to a network edge. Immutable value type.
class EdgeFunction {
public:
    EdgeFunction() : v_(AffineMap{0.0, 0.0}) {}

    static EdgeFunction affine(double a, double b) { return EdgeFunction(AffineMap{a, b}); }
    static EdgeFunction zero() { return affine(0.0, 0.0); }
    static EdgeFunction identity() { return affine(1.0, 0.0); }
    static EdgeFunction constant(double c) { return affine(0.0, c); }

    static EdgeFunction named(std::string id) { return EdgeFunction(NamedBase{std::move(id)}); }

    /// Trailing zero coefficients are stripped; the zero polynomial is {0}.
    static EdgeFunction polynomial(std::vector<double> coeffs) {
        while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
        if (coeffs.empty()) coeffs.push_back(0.0);
        return EdgeFunction(PolynomialFn{std::move(coeffs)});
    }

    static EdgeFunction spline(std::shared_ptr<const SplineSpace> space, std::vector<double> coeffs) {
        if (!space) throw ValidationError("spline edge: null space");
        if (static_cast<int>(coeffs.size()) != space->dim())
            throw ValidationError("spline edge: " + std::to_string(coeffs.size()) +
                                  " coefficients for basis dimension " + std::to_string(space->dim()));
        return EdgeFunction(SplineFn{std::move(space), std::move(coeffs)});
    }

    static EdgeFunction composite(double wb, std::string base_id, double ws, SplineFn spline_part) {
        if (!spline_part.space) throw ValidationError("composite edge: null spline space");
        if (static_cast<int>(spline_part.coeffs.size()) != spline_part.space->dim())
            throw ValidationError("composite edge: spline coefficient count mismatch");
        auto body = std::make_shared<const CompositeFn>(
            CompositeFn{wb, NamedBase{std::move(base_id)}, ws, std::move(spline_part)});
        return EdgeFunction(std::move(body));
    }

    /// c * base(t) expressed as a Composite with vanishing spline part.
    static EdgeFunction scaled_named(double c, std::string base_id) {
        auto space = SplineSpace::make(1, {0.0, 1.0});
        SplineFn s{space, std::vector<double>(static_cast<std::size_t>(space->dim()), 0.0)};
        return composite(c, std::move(base_id), 0.0, std::move(s));
    }

    EdgeKind kind() const { return static_cast<EdgeKind>(v_.index()); }

    const AffineMap* as_affine() const { return std::get_if<AffineMap>(&v_); }
    const NamedBase* as_named() const { return std::get_if<NamedBase>(&v_); }
    const PolynomialFn* as_polynomial() const { return std::get_if<PolynomialFn>(&v_); }
    const SplineFn* as_spline() const { return std::get_if<SplineFn>(&v_); }
    const CompositeFn* as_composite() const {
        auto p = std::get_if<std::shared_ptr<const CompositeFn>>(&v_);
        return p ? p->get() : nullptr;
    }

    double operator()(double t) const {
        switch (v_.index()) {
            case 0: {
                const auto& f = std::get<0>(v_);
                return f.a * t + f.b;
            }
            case 1:
                return BaseRegistry::instance().eval(std::get<1>(v_).id, t);
            case 2: {
                const auto& c = std::get<2>(v_).coeffs;
                double acc = c.back();
                for (std::size_t i = c.size() - 1; i-- > 0;) acc = acc * t + c[i];
                return acc;
            }
            case 3: {
                const auto& s = std::get<3>(v_);
                return s.space->eval(s.coeffs, t);
            }
            default: {
                const auto& c = *std::get<4>(v_);
                double acc = 0.0;
                if (c.wb != 0.0) acc += c.wb * BaseRegistry::instance().eval(c.base.id, t);
                if (c.ws != 0.0) acc += c.ws * c.spline.space->eval(c.spline.coeffs, t);
                return acc;
            }
        }
    }

    bool operator==(const EdgeFunction& other) const {
        if (v_.index() != other.v_.index()) return false;
        switch (v_.index()) {
            case 0: return std::get<0>(v_) == std::get<0>(other.v_);
            case 1: return std::get<1>(v_) == std::get<1>(other.v_);
            case 2: return std::get<2>(v_) == std::get<2>(other.v_);
            case 3: return std::get<3>(v_) == std::get<3>(other.v_);
            default: return *std::get<4>(v_) == *std::get<4>(other.v_);
        }
    }
    bool operator!=(const EdgeFunction& other) const { return !(*this == other); }

private:
    using Variant =
        std::variant<AffineMap, NamedBase, PolynomialFn, SplineFn, std::shared_ptr<const CompositeFn>>;
    explicit EdgeFunction(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

inline double eval_edge(const EdgeFunction& f, double t) { return f(t); }

/// Affine payload of an edge that is affine *as a function*: the Affine
/// variant itself, or a Polynomial of degree <= 1. Builders use this to
/// canonicalize degenerate activations into the Affine variant.
inline std::optional<AffineMap> as_affine_function(const EdgeFunction& f) {
    if (auto a = f.as_affine()) return *a;
    if (auto p = f.as_polynomial()) {
        if (p->degree() == 0) return AffineMap{0.0, p->coeffs[0]};
        if (p->degree() == 1) return AffineMap{p->coeffs[1], p->coeffs[0]};
    }
    return std::nullopt;
}

} // namespace kansynth
