#pragma once

#include <cmath>
#include <string>

#include "phibvp/errors.hpp"

namespace phibvp {

enum class PhiKind { Identity, PLaplacian, Sinh, Cubic };

/// Strictly increasing odd homeomorphism of R with an evaluable inverse.
/// The catalogue covers the identity, the p-Laplace map |y|^{p-2} y,
/// sinh and the cube.
class PhiOperator {
public:
    static PhiOperator identity() { return PhiOperator(PhiKind::Identity, 2.0); }
    static PhiOperator p_laplacian(double p) {
        if (!(p > 1.0)) throw ConfigError("p-Laplacian requires p > 1, got p = " + std::to_string(p));
        return PhiOperator(PhiKind::PLaplacian, p);
    }
    static PhiOperator sinh_map() { return PhiOperator(PhiKind::Sinh, 2.0); }
    static PhiOperator cubic() { return PhiOperator(PhiKind::Cubic, 2.0); }

    PhiKind kind() const { return kind_; }
    double exponent() const { return p_; }

    double apply(double y) const {
        switch (kind_) {
            case PhiKind::Identity: return y;
            case PhiKind::PLaplacian:
                if (y == 0.0) return 0.0;
                return std::pow(std::abs(y), p_ - 2.0) * y;
            case PhiKind::Sinh: return std::sinh(y);
            case PhiKind::Cubic: return y * y * y;
        }
        throw ConfigError("unknown phi kind");
    }

    double invert(double v) const {
        switch (kind_) {
            case PhiKind::Identity: return v;
            case PhiKind::PLaplacian: {
                if (v == 0.0) return 0.0;
                const double mag = std::pow(std::abs(v), 1.0 / (p_ - 1.0));
                return v < 0.0 ? -mag : mag;
            }
            case PhiKind::Sinh: return std::asinh(v);
            case PhiKind::Cubic: return std::cbrt(v);
        }
        throw ConfigError("unknown phi kind");
    }

    std::string name() const {
        switch (kind_) {
            case PhiKind::Identity: return "identity";
            case PhiKind::PLaplacian: return "p_laplacian";
            case PhiKind::Sinh: return "sinh";
            case PhiKind::Cubic: return "cubic";
        }
        return "?";
    }

private:
    PhiOperator(PhiKind kind, double p) : kind_(kind), p_(p) {}
    PhiKind kind_;
    double p_;
};

/// Inverse of an arbitrary strictly increasing map by bracket doubling from
/// [-1, 1] and bisection. Fallback path for operators without a closed-form
/// inverse; capped at 200 bisection steps.
template <typename F>
double invert_monotone(F&& apply, double v) {
    double lo = -1.0, hi = 1.0;
    int expand = 0;
    while (apply(lo) > v) {
        lo *= 2.0;
        if (++expand > 1100 || !std::isfinite(lo))
            throw NumericError("invert_monotone: lower bracket not found");
    }
    while (apply(hi) < v) {
        hi *= 2.0;
        if (++expand > 1100 || !std::isfinite(hi))
            throw NumericError("invert_monotone: upper bracket not found");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (apply(mid) < v)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace phibvp
