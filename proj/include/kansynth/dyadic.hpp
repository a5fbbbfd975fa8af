#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "kansynth/errors.hpp"

namespace kansynth {

/// Exact rational of the form m / 2^r. Canonical form keeps m odd (or r == 0),
/// so equal values compare equal. Values with |m| < 2^53 convert to double
/// without rounding.
struct Dyadic {
    std::int64_t m = 0; // numerator
    int r = 0;          // nonnegative exponent of the power-of-two denominator

    Dyadic() = default;

    Dyadic(std::int64_t num, int exp) : m(num), r(exp) {
        if (exp < 0) throw ValidationError("Dyadic: negative exponent " + std::to_string(exp));
        canonicalize();
    }

    static Dyadic from_integer(std::int64_t n) { return Dyadic(n, 0); }

    /// Exact dyadic representation of a double, when one exists with
    /// exponent at most max_r and an int64 numerator.
    static std::optional<Dyadic> from_double_exact(double x, int max_r = 62) {
        if (!std::isfinite(x)) return std::nullopt;
        double scaled = x;
        int r = 0;
        while (scaled != std::floor(scaled)) {
            if (r >= max_r) return std::nullopt;
            scaled *= 2.0;
            ++r;
        }
        if (std::abs(scaled) >= 9.2e18) return std::nullopt;
        return Dyadic(static_cast<std::int64_t>(scaled), r);
    }

    /// Nearest m/2^r to x at fixed scale r (ties away from zero).
    static Dyadic round_to_scale(double x, int scale) {
        if (scale < 0 || scale > 62) throw ValidationError("Dyadic: scale out of range");
        if (!std::isfinite(x)) throw ValidationError("Dyadic: non-finite input");
        double scaled = std::round(std::ldexp(x, scale));
        if (std::abs(scaled) >= 9.2e18) throw ValidationError("Dyadic: value too large at this scale");
        return Dyadic(static_cast<std::int64_t>(scaled), scale);
    }

    double value() const { return std::ldexp(static_cast<double>(m), -r); }

    bool is_zero() const { return m == 0; }
    bool is_negative() const { return m < 0; }

    bool operator==(const Dyadic& other) const { return m == other.m && r == other.r; }
    bool operator!=(const Dyadic& other) const { return !(*this == other); }

    std::string str() const {
        if (r == 0) return std::to_string(m);
        return std::to_string(m) + "/2^" + std::to_string(r);
    }

private:
    void canonicalize() {
        if (m == 0) {
            r = 0;
            return;
        }
        while (r > 0 && m % 2 == 0) {
            m /= 2;
            --r;
        }
    }
};

} // namespace kansynth
