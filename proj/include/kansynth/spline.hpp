#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "kansynth/errors.hpp"

namespace kansynth {

/// Piecewise-polynomial space of degree k over a strictly increasing knot
/// sequence, spanned by the B-spline basis on the clamped (open) extension of
/// the knots. The clamped extension repeats each end knot k+1 times so the
/// basis spans all polynomials of degree <= k on [front, back]; in particular
/// every affine map lies in the space.
///
/// Outside [front, back] the basis is extended by its boundary polynomial
/// pieces rather than cut to zero, so splines built on it are defined on all
/// of R.
class SplineSpace {
public:
    SplineSpace(int degree, std::vector<double> knots)
        : degree_(degree), knots_(std::move(knots)) {
        if (degree_ < 1) throw ValidationError("SplineSpace: degree must be >= 1");
        if (knots_.size() < 2) throw ValidationError("SplineSpace: need at least 2 knots");
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
            if (!(knots_[i] < knots_[i + 1]))
                throw ValidationError("SplineSpace: knots must be strictly increasing at index " +
                                      std::to_string(i));
        }
        // clamped extension: front and back repeated degree+1 times
        extended_.reserve(knots_.size() + 2 * static_cast<std::size_t>(degree_));
        extended_.insert(extended_.end(), static_cast<std::size_t>(degree_ + 1), knots_.front());
        extended_.insert(extended_.end(), knots_.begin() + 1, knots_.end() - 1);
        extended_.insert(extended_.end(), static_cast<std::size_t>(degree_ + 1), knots_.back());
    }

    static std::shared_ptr<const SplineSpace> make(int degree, std::vector<double> knots) {
        return std::make_shared<const SplineSpace>(degree, std::move(knots));
    }

    /// Uniform knots over [lo, hi] with `interior` interior knots.
    static std::shared_ptr<const SplineSpace> uniform(int degree, double lo, double hi, int interior) {
        if (!(lo < hi)) throw ValidationError("SplineSpace: empty knot interval");
        if (interior < 0) throw ValidationError("SplineSpace: negative interior knot count");
        std::vector<double> knots;
        knots.reserve(static_cast<std::size_t>(interior) + 2);
        for (int i = 0; i <= interior + 1; ++i)
            knots.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(interior + 1));
        return make(degree, std::move(knots));
    }

    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& extended_knots() const { return extended_; }
    double front() const { return knots_.front(); }
    double back() const { return knots_.back(); }

    // basis dimension: (#interior knots) + degree + 1
    int dim() const { return static_cast<int>(knots_.size()) - 1 + degree_; }

    /// Index s of the polynomial piece used at t. Arguments left of the first
    /// knot use the first piece, right of the last use the last piece, which
    /// is what extends the spline polynomially beyond the knot interval.
    int find_span(double t) const {
        const int k = degree_;
        const int last = dim() - 1; // last valid span index
        if (t >= knots_.back()) return last;
        if (t <= knots_.front()) return k;
        int lo = k, hi = last;
        while (lo < hi) {
            int mid = (lo + hi + 1) / 2;
            if (extended_[static_cast<std::size_t>(mid)] <= t)
                lo = mid;
            else
                hi = mid - 1;
        }
        return lo;
    }

    /// The k+1 basis values N_{s-k}(t), ..., N_s(t) for span s, via the
    /// Cox-de Boor recursion written over a single span. The recursion is a
    /// polynomial identity in t, so it also yields the polynomial extension
    /// when t lies outside [front, back]. 0/0 := 0 at degenerate denominators.
    void basis_on_span(int span, double t, double* out) const {
        const int k = degree_;
        const auto& u = extended_;
        out[0] = 1.0;
        double left_buf[33], right_buf[33];
        std::vector<double> heap;
        double* left = left_buf;
        double* right = right_buf;
        if (k + 1 > 33) {
            heap.resize(2 * static_cast<std::size_t>(k + 1));
            left = heap.data();
            right = heap.data() + (k + 1);
        }
        for (int j = 1; j <= k; ++j) {
            left[j] = t - u[static_cast<std::size_t>(span + 1 - j)];
            right[j] = u[static_cast<std::size_t>(span + j)] - t;
            double saved = 0.0;
            for (int i = 0; i < j; ++i) {
                double denom = right[i + 1] + left[j - i];
                double temp = denom == 0.0 ? 0.0 : out[i] / denom;
                out[i] = saved + right[i + 1] * temp;
                saved = left[j - i] * temp;
            }
            out[j] = saved;
        }
    }

    /// Full basis vector (B_1(t), ..., B_dim(t)); entries outside the active
    /// span's k+1 window are exactly zero.
    std::vector<double> basis(double t) const {
        std::vector<double> values(static_cast<std::size_t>(dim()), 0.0);
        int span = find_span(t);
        std::vector<double> local(static_cast<std::size_t>(degree_) + 1);
        basis_on_span(span, t, local.data());
        for (int i = 0; i <= degree_; ++i)
            values[static_cast<std::size_t>(span - degree_ + i)] = local[static_cast<std::size_t>(i)];
        return values;
    }

    /// Sum c_i B_i(t) using only the active span.
    double eval(const std::vector<double>& coeffs, double t) const {
        if (static_cast<int>(coeffs.size()) != dim())
            throw ValidationError("SplineSpace: coefficient count " + std::to_string(coeffs.size()) +
                                  " does not match basis dimension " + std::to_string(dim()));
        int span = find_span(t);
        double local[64];
        std::vector<double> heap;
        double* n = local;
        if (degree_ + 1 > 64) {
            heap.resize(static_cast<std::size_t>(degree_) + 1);
            n = heap.data();
        }
        basis_on_span(span, t, n);
        double acc = 0.0;
        for (int i = 0; i <= degree_; ++i)
            acc += coeffs[static_cast<std::size_t>(span - degree_ + i)] * n[i];
        return acc;
    }

    /// Greville abscissa of the i-th basis function.
    double greville(int i) const {
        double s = 0.0;
        for (int j = 1; j <= degree_; ++j)
            s += extended_[static_cast<std::size_t>(i + j)];
        return s / static_cast<double>(degree_);
    }

private:
    int degree_;
    std::vector<double> knots_;
    std::vector<double> extended_;
};

inline std::vector<double> spline_basis(const SplineSpace& space, double t) {
    return space.basis(t);
}

/// Coefficients representing t -> a*t + b exactly: c_i = a * greville_i + b.
inline std::vector<double> affine_in_space(const SplineSpace& space, double a, double b) {
    std::vector<double> coeffs(static_cast<std::size_t>(space.dim()));
    for (int i = 0; i < space.dim(); ++i)
        coeffs[static_cast<std::size_t>(i)] = a * space.greville(i) + b;
    return coeffs;
}

} // namespace kansynth
