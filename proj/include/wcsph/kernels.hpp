#pragma once

#include <cmath>
#include <numbers>

#include "wcsph/error.hpp"
#include "wcsph/vec3.hpp"

namespace wcsph {

/// Smoothing length such that a sphere of that radius holds `target_neighbors`
/// particles when `particle_count` particles fill `fluid_volume` uniformly.
inline double smoothing_length_from_count(double fluid_volume, double target_neighbors,
                                          double particle_count) {
    if (!(fluid_volume > 0.0) || !(target_neighbors > 0.0) || !(particle_count > 0.0))
        throw InvalidInput("smoothing_length_from_count: inputs must be > 0");
    if (target_neighbors > particle_count)
        throw InvalidInput("smoothing_length_from_count: target_neighbors exceeds particle_count");
    return std::cbrt(3.0 * fluid_volume * target_neighbors / (4.0 * std::numbers::pi * particle_count));
}

/// Monaghan M4 cubic spline in three dimensions with support radius 2h.
///
///   W(q) = s * (1 - 1.5 q^2 + 0.75 q^3)   0 <= q <= 1
///   W(q) = s/4 * (2 - q)^3                1 <= q <= 2
///
/// with q = r/h and s = 1/(pi h^3).
class CubicSplineKernel {
public:
    explicit CubicSplineKernel(double smoothing_length) : h_(smoothing_length) {
        if (!(h_ > 0.0) || !std::isfinite(h_))
            throw InvalidInput("smoothing length must be finite and > 0");
        inv_h_ = 1.0 / h_;
        sigma_ = 1.0 / (std::numbers::pi * h_ * h_ * h_);
        grad_scale_ = sigma_ * inv_h_ * inv_h_;
    }

    double smoothing_length() const noexcept { return h_; }
    double support_radius() const noexcept { return 2.0 * h_; }
    double normalization() const noexcept { return sigma_; }

    /// W(r). Throws on negative or non-finite distance.
    double evaluate(double distance) const {
        if (!(distance >= 0.0) || !std::isfinite(distance))
            throw InvalidInput("kernel distance must be finite and >= 0");
        return value(distance);
    }

    /// Grad W at displacement r_i - r_j. Throws on non-finite input.
    Vec3 gradient(const Vec3& displacement) const {
        if (!is_finite(displacement)) throw InvalidInput("kernel displacement must be finite");
        const double r = norm(displacement);
        return gradient_factor(r) * displacement;
    }

    /// Unchecked W(r) for the inner loops.
    double value(double r) const noexcept {
        if (r >= 2.0 * h_) return 0.0;  // r * inv_h_ can round below 2
        const double q = r * inv_h_;
        if (q < 1.0) return sigma_ * (1.0 - 1.5 * q * q + 0.75 * q * q * q);
        if (q < 2.0) {
            const double t = 2.0 - q;
            return 0.25 * sigma_ * t * t * t;
        }
        return 0.0;
    }

    /// (dW/dr) / r, so that grad W = factor * displacement. Zero outside the
    /// support; finite at r = 0 where the displacement itself is zero.
    double gradient_factor(double r) const noexcept {
        if (r >= 2.0 * h_) return 0.0;
        const double q = r * inv_h_;
        if (q < 1.0) return grad_scale_ * (-3.0 + 2.25 * q);
        if (q < 2.0) {
            const double t = 2.0 - q;
            return -0.75 * grad_scale_ * t * t / q;
        }
        return 0.0;
    }

private:
    double h_;
    double inv_h_;
    double sigma_;
    double grad_scale_;
};

}  // namespace wcsph
