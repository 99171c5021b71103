#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "phibvp/errors.hpp"
#include "phibvp/mesh.hpp"

namespace phibvp {

/// The functional term of the differential equation: maps a candidate
/// solution to a bounded function, nodewise representable. Every shipped
/// variant is monotone (x <= y nodewise implies G_x <= G_y nodewise) and
/// carries an explicit sup-norm bound eta(r).
class FunctionalTerm {
public:
    enum class Kind { Identity, IntegralOfPower, Delay, RunningMax };

    static FunctionalTerm identity() { return FunctionalTerm(Kind::Identity); }

    static FunctionalTerm integral_of_power(int exponent) {
        if (exponent < 1 || exponent % 2 == 0)
            throw ConfigError("integral_of_power requires an odd positive exponent, got " +
                              std::to_string(exponent));
        FunctionalTerm g(Kind::IntegralOfPower);
        g.exponent_ = exponent;
        return g;
    }

    static FunctionalTerm delay(double tau) {
        FunctionalTerm g(Kind::Delay);
        g.tau_ = tau;
        return g;
    }

    static FunctionalTerm running_max() { return FunctionalTerm(Kind::RunningMax); }

    Kind kind() const { return kind_; }
    int exponent() const { return exponent_; }
    double tau() const { return tau_; }

    GridFunction apply(const GridFunction& x) const {
        const Mesh& m = x.mesh();
        switch (kind_) {
            case Kind::Identity: return x;
            case Kind::RunningMax: {
                // Prefix max over nodes; exact for piecewise-linear input,
                // whose local maxima sit at nodes.
                std::vector<double> values(x.values());
                for (std::size_t i = 1; i < values.size(); ++i)
                    values[i] = std::max(values[i - 1], values[i]);
                return GridFunction::from_values(m, std::move(values));
            }
            case Kind::Delay: {
                if (!(tau_ > 0.0) || !(tau_ < m.length()))
                    throw ConfigError("delay requires 0 < tau < b - a, got tau = " +
                                      std::to_string(tau_));
                std::vector<double> values(m.n_nodes());
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double t = m.nodes()[i];
                    values[i] = (t >= m.a() + tau_) ? x.eval(t - tau_) : x.value(0);
                }
                return GridFunction::from_values(m, std::move(values));
            }
            case Kind::IntegralOfPower: {
                // Exact cellwise integral of the e-th power of a linear
                // function, accumulated from a.
                std::vector<double> values(m.n_nodes());
                values[0] = 0.0;
                const double e = static_cast<double>(exponent_);
                for (std::size_t i = 0; i < m.n_cells(); ++i) {
                    const double v0 = x.value(i), v1 = x.value(i + 1);
                    const double s = x.slope(i), h = m.width(i);
                    double cell;
                    if (s == 0.0) {
                        cell = std::pow(v0, e) * h;
                    } else {
                        cell = (std::pow(v1, e + 1.0) - std::pow(v0, e + 1.0)) / (s * (e + 1.0));
                    }
                    values[i + 1] = values[i] + cell;
                }
                return GridFunction::from_values(m, std::move(values));
            }
        }
        throw ConfigError("unknown functional term");
    }

    /// Bound eta(r) with ||G_x||_inf <= eta(r) whenever ||x||_inf <= r.
    double eta_bound(double r, double interval_length) const {
        if (r < 0.0) throw ConfigError("eta_bound requires r >= 0");
        switch (kind_) {
            case Kind::Identity:
            case Kind::Delay:
            case Kind::RunningMax: return r;
            case Kind::IntegralOfPower:
                return interval_length * std::pow(r, static_cast<double>(exponent_));
        }
        throw ConfigError("unknown functional term");
    }

    std::string name() const {
        switch (kind_) {
            case Kind::Identity: return "identity";
            case Kind::IntegralOfPower: return "integral_of_power";
            case Kind::Delay: return "delay";
            case Kind::RunningMax: return "running_max";
        }
        return "?";
    }

private:
    explicit FunctionalTerm(Kind kind) : kind_(kind) {}
    Kind kind_;
    int exponent_ = 1;
    double tau_ = 0.0;
};

/// A boundary functional: a continuous, monotone increasing map from
/// candidate solutions to the boundary value.
class BoundaryFunctional {
public:
    enum class Kind { Constant, PointEval, MeanShift };
    enum class Post { Identity, Cbrt, MaxWith };

    static BoundaryFunctional constant(double c) {
        BoundaryFunctional h(Kind::Constant);
        h.c_ = c;
        return h;
    }

    /// x(t*) run through an increasing post map.
    static BoundaryFunctional point_eval(double t_star, Post post = Post::Identity,
                                         double c = 0.0) {
        BoundaryFunctional h(Kind::PointEval);
        h.t_star_ = t_star;
        h.post_ = post;
        h.c_ = c;
        return h;
    }

    /// H[x] = scale * ( mean(x) + shift ). Monotone needs scale >= 0.
    static BoundaryFunctional mean_shift(double scale, double shift) {
        if (scale < 0.0) throw ConfigError("mean_shift requires scale >= 0");
        BoundaryFunctional h(Kind::MeanShift);
        h.scale_ = scale;
        h.shift_ = shift;
        return h;
    }

    Kind kind() const { return kind_; }
    Post post() const { return post_; }
    double constant_value() const { return c_; }
    double t_star() const { return t_star_; }
    double scale() const { return scale_; }
    double shift() const { return shift_; }

    double apply(const GridFunction& x) const {
        const Mesh& m = x.mesh();
        switch (kind_) {
            case Kind::Constant: return c_;
            case Kind::PointEval: {
                if (t_star_ < m.a() || t_star_ > m.b())
                    throw DomainError("point evaluation abscissa outside [a, b]");
                const double v = x.eval(t_star_);
                switch (post_) {
                    case Post::Identity: return v;
                    case Post::Cbrt: return std::cbrt(v);
                    case Post::MaxWith: return std::max(v, c_);
                }
                throw ConfigError("unknown post map");
            }
            case Kind::MeanShift: {
                double acc = 0.0;
                for (std::size_t i = 0; i < m.n_cells(); ++i)
                    acc += 0.5 * (x.value(i) + x.value(i + 1)) * m.width(i);
                return scale_ * (acc / m.length() + shift_);
            }
        }
        throw ConfigError("unknown boundary functional");
    }

    std::string name() const {
        switch (kind_) {
            case Kind::Constant: return "constant";
            case Kind::PointEval: return "point_eval";
            case Kind::MeanShift: return "mean_shift";
        }
        return "?";
    }

private:
    explicit BoundaryFunctional(Kind kind) : kind_(kind) {}
    Kind kind_;
    double c_ = 0.0;
    double t_star_ = 0.0;
    Post post_ = Post::Identity;
    double scale_ = 1.0;
    double shift_ = 0.0;
};

} // namespace phibvp
