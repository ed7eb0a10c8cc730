#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "wcsph/core.hpp"
#include "wcsph/error.hpp"
#include "wcsph/kernels.hpp"
#include "wcsph/neighbors.hpp"
#include "wcsph/parallel.hpp"
#include "wcsph/vec3.hpp"

namespace wcsph {

/// Tait equation of state: P = B((rho/rho0)^gamma - 1), B = c0^2 rho0 / gamma.
inline double tait_stiffness(const FluidProperties& fluid) {
    return fluid.speed_of_sound * fluid.speed_of_sound * fluid.rest_density / fluid.gamma;
}

inline double equation_of_state(double density, const FluidProperties& fluid) {
    if (!(density > 0.0)) throw InvalidInput("equation_of_state: density must be > 0");
    const double ratio = density / fluid.rest_density;
    double powered = 0.0;
    if (fluid.gamma == 7.0) {
        const double r2 = ratio * ratio;
        powered = r2 * r2 * r2 * ratio;
    } else {
        powered = std::pow(ratio, fluid.gamma);
    }
    return tait_stiffness(fluid) * (powered - 1.0);
}

/// Inverse of the Tait relation, used to seed hydrostatic initial states.
inline double density_for_pressure(double pressure, const FluidProperties& fluid) {
    const double base = 1.0 + pressure / tait_stiffness(fluid);
    if (!(base > 0.0)) throw InvalidInput("density_for_pressure: pressure below EOS cavitation limit");
    return fluid.rest_density * std::pow(base, 1.0 / fluid.gamma);
}

/// Parameters of the interaction phase that do not change during a run.
struct InteractionParams {
    FluidProperties fluid;
    ViscosityModel viscosity = ViscosityModel::Artificial;
    double artificial_viscosity = 0.02;
    bool clamp_negative_pressure = false;
    DensityMode density_mode = DensityMode::Summation;
    // ContinuityRate only: whether the interaction sweep also fills
    // density_rate. The run loop turns this off and evaluates the rate after
    // the velocity kick instead (see compute_density_rate's lookahead).
    bool fill_density_rate = true;

    static InteractionParams from(const SimulationConfig& c) {
        return {c.fluid, c.viscosity_model, c.artificial_viscosity, c.clamp_negative_pressure, c.density_mode};
    }
};

/// Per-call work counters.
struct InteractionCounters {
    std::size_t pair_visits = 0;  // neighbor entries evaluated in the force sweep
};

namespace detail {

// Pairwise momentum contribution for the pair (i, j) with displacement
// r_i - r_j and kernel gradient grad. Returns the vector C_ij such that
// a_i -= m_j * C_ij and a_j += m_i * C_ij. C_ij is symmetric in (i, j) up to
// the sign carried by grad and u_ij, which gives exact pairwise antisymmetry.
template <class Kernel>
inline Vec3 pair_force(const ParticleSystem& sys, std::size_t i, std::size_t j, const Vec3& rij, double r2,
                       const Vec3& grad, const Kernel& kernel, const InteractionParams& p) {
    const double rho_i = sys.density[i];
    const double rho_j = sys.density[j];
    double scalar = sys.pressure[i] / (rho_i * rho_i) + sys.pressure[j] / (rho_j * rho_j);
    const Vec3 uij = sys.velocity[i] - sys.velocity[j];
    const double h = kernel.smoothing_length();
    const double eta2 = 0.01 * h * h;
    if (p.viscosity == ViscosityModel::Artificial) {
        const double vr = dot(uij, rij);
        if (vr < 0.0) {
            const double mu = vr / (r2 + eta2);
            const double rho_bar = 0.5 * (rho_i + rho_j);
            scalar += -p.artificial_viscosity * p.fluid.speed_of_sound * h * mu / rho_bar;
        }
        return scalar * grad;
    }
    // Morris laminar viscosity, written so that C_ij carries the sign of grad.
    const double nu = p.fluid.kinematic_viscosity;
    const double visc = nu * (rho_i + rho_j) / (rho_i * rho_j) * dot(rij, grad) / (r2 + eta2);
    return scalar * grad - visc * uij;
}

}  // namespace detail

/// rho_i = m_i W(0) + sum_j m_j W(|r_i - r_j|) for every particle.
template <class Kernel>
void compute_density_summation(ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                               const Executor& exec = Executor{}) {
    const auto mass = sys.mass();
    const double w0 = kernel.value(0.0);
    const double support2 = kernel.support_radius() * kernel.support_radius();
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        const Vec3 pi = sys.position[i];
        double rho = mass[i] * w0;
        for (ParticleIndex j : nbrs.of(i)) {
            const double r2 = norm2(pi - sys.position[j]);
            if (r2 < support2) rho += mass[j] * kernel.value(std::sqrt(r2));
        }
        sys.density[i] = rho;
    });
}

/// drho_i/dt = sum_j m_j (u_i - u_j) . grad W_ij for every particle.
/// With a nonzero lookahead the velocities are taken as u + lookahead * a,
/// i.e. the rate seen after a velocity kick of that length.
template <class Kernel>
void compute_density_rate(ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                          const Executor& exec = Executor{}, double lookahead = 0.0) {
    const auto mass = sys.mass();
    const double support2 = kernel.support_radius() * kernel.support_radius();
    auto velocity = [&](std::size_t k) { return sys.velocity[k] + lookahead * sys.acceleration[k]; };
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        const Vec3 pi = sys.position[i];
        const Vec3 ui = velocity(i);
        double rate = 0.0;
        for (ParticleIndex j : nbrs.of(i)) {
            const Vec3 rij = pi - sys.position[j];
            const double r2 = norm2(rij);
            if (r2 < support2) {
                const Vec3 grad = kernel.gradient_factor(std::sqrt(r2)) * rij;
                rate += mass[j] * dot(ui - velocity(j), grad);
            }
        }
        sys.density_rate[i] = rate;
    });
}

/// Half-pair form of compute_density_rate. Serial only.
template <class Kernel>
void compute_density_rate_symmetric(ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                                    const Executor& exec = Executor{}, double lookahead = 0.0) {
    if (!exec.is_serial()) throw InvalidInput("symmetric half-pair density rate requires serial execution");
    const auto mass = sys.mass();
    const double support2 = kernel.support_radius() * kernel.support_radius();
    auto velocity = [&](std::size_t k) { return sys.velocity[k] + lookahead * sys.acceleration[k]; };
    const std::size_t n = sys.count();
    for (std::size_t i = 0; i < n; ++i) sys.density_rate[i] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 pi = sys.position[i];
        const Vec3 ui = velocity(i);
        for (ParticleIndex j : nbrs.of(i)) {
            if (j <= i) continue;
            const Vec3 rij = pi - sys.position[j];
            const double r2 = norm2(rij);
            if (!(r2 < support2)) continue;
            const double rate = dot(ui - velocity(j), kernel.gradient_factor(std::sqrt(r2)) * rij);
            sys.density_rate[i] += mass[j] * rate;
            sys.density_rate[j] += mass[i] * rate;
        }
    }
}

/// Applies the equation of state to every particle.
inline void update_pressures(ParticleSystem& sys, const InteractionParams& p, const Executor& exec = Executor{}) {
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        double pressure = equation_of_state(sys.density[i], p.fluid);
        if (p.clamp_negative_pressure && pressure < 0.0) pressure = 0.0;
        sys.pressure[i] = pressure;
    });
}

/// Momentum right-hand side (gather form). Fluid particles receive
/// a_i = -sum_j m_j (P_i/rho_i^2 + P_j/rho_j^2 + Pi_ij) grad W_ij + viscous + g;
/// boundary particles receive zero. When `with_density_rate` is set the same
/// sweep also fills density_rate for every particle.
template <class Kernel>
InteractionCounters compute_accelerations(ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                                          const InteractionParams& p, const Executor& exec = Executor{},
                                          bool with_density_rate = false) {
    const auto mass = sys.mass();
    const double support2 = kernel.support_radius() * kernel.support_radius();
    const Vec3 g = p.fluid.gravity;
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        const bool fluid = sys.is_fluid(i);
        if (!fluid && !with_density_rate) {
            sys.acceleration[i] = Vec3{};
            return;
        }
        const Vec3 pi = sys.position[i];
        const Vec3 ui = sys.velocity[i];
        Vec3 acc;
        double rate = 0.0;
        for (ParticleIndex j : nbrs.of(i)) {
            const Vec3 rij = pi - sys.position[j];
            const double r2 = norm2(rij);
            if (!(r2 < support2)) continue;
            const Vec3 grad = kernel.gradient_factor(std::sqrt(r2)) * rij;
            if (with_density_rate) rate += mass[j] * dot(ui - sys.velocity[j], grad);
            if (fluid) acc -= mass[j] * detail::pair_force(sys, i, j, rij, r2, grad, kernel, p);
        }
        sys.acceleration[i] = fluid ? acc + g : Vec3{};
        if (with_density_rate) sys.density_rate[i] = rate;
    });
    InteractionCounters c;
    for (std::size_t i = 0; i < sys.count(); ++i) {
        if (with_density_rate || sys.is_fluid(i)) c.pair_visits += nbrs.of(i).size();
    }
    return c;
}

/// Full interaction phase in gather form: density (summation or rate),
/// pressure, accelerations. Race-free under any executor.
template <class Kernel>
InteractionCounters compute_interactions_gather(ParticleSystem& sys, const NeighborLists& nbrs,
                                                const Kernel& kernel, const InteractionParams& p,
                                                const Executor& exec = Executor{}) {
    if (p.density_mode == DensityMode::Summation) {
        compute_density_summation(sys, nbrs, kernel, exec);
        update_pressures(sys, p, exec);
        return compute_accelerations(sys, nbrs, kernel, p, exec, false);
    }
    update_pressures(sys, p, exec);
    return compute_accelerations(sys, nbrs, kernel, p, exec, p.fill_density_rate);
}

/// Same results as compute_interactions_gather, visiting each unordered pair
/// once and scattering equal and opposite contributions to both particles.
/// Only legal under a serial executor.
template <class Kernel>
InteractionCounters compute_interactions_symmetric(ParticleSystem& sys, const NeighborLists& nbrs,
                                                   const Kernel& kernel, const InteractionParams& p,
                                                   const Executor& exec = Executor{}) {
    if (!exec.is_serial())
        throw InvalidInput("symmetric half-pair interactions require serial execution (scatter writes race)");
    const std::size_t n = sys.count();
    const auto mass = sys.mass();
    const double support2 = kernel.support_radius() * kernel.support_radius();
    const bool summation = p.density_mode == DensityMode::Summation;
    const bool with_rate = !summation && p.fill_density_rate;

    if (summation) {
        const double w0 = kernel.value(0.0);
        for (std::size_t i = 0; i < n; ++i) sys.density[i] = mass[i] * w0;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 pi = sys.position[i];
            for (ParticleIndex j : nbrs.of(i)) {
                if (j <= i) continue;
                const double r2 = norm2(pi - sys.position[j]);
                if (!(r2 < support2)) continue;
                const double w = kernel.value(std::sqrt(r2));
                sys.density[i] += mass[j] * w;
                sys.density[j] += mass[i] * w;
            }
        }
    } else if (with_rate) {
        for (std::size_t i = 0; i < n; ++i) sys.density_rate[i] = 0.0;
    }
    update_pressures(sys, p, exec);

    for (std::size_t i = 0; i < n; ++i) sys.acceleration[i] = Vec3{};
    InteractionCounters c;
    for (std::size_t i = 0; i < n; ++i) {
        const bool fluid_i = sys.is_fluid(i);
        const Vec3 pi = sys.position[i];
        const Vec3 ui = sys.velocity[i];
        for (ParticleIndex j : nbrs.of(i)) {
            if (j <= i) continue;
            const bool fluid_j = sys.is_fluid(j);
            if (!with_rate && !fluid_i && !fluid_j) continue;
            ++c.pair_visits;
            const Vec3 rij = pi - sys.position[j];
            const double r2 = norm2(rij);
            if (!(r2 < support2)) continue;
            const Vec3 grad = kernel.gradient_factor(std::sqrt(r2)) * rij;
            if (with_rate) {
                const double rate = dot(ui - sys.velocity[j], grad);
                sys.density_rate[i] += mass[j] * rate;
                sys.density_rate[j] += mass[i] * rate;
            }
            if (!fluid_i && !fluid_j) continue;
            const Vec3 force = detail::pair_force(sys, i, j, rij, r2, grad, kernel, p);
            if (fluid_i) sys.acceleration[i] -= mass[j] * force;
            if (fluid_j) sys.acceleration[j] += mass[i] * force;
        }
    }
    const Vec3 g = p.fluid.gravity;
    for (std::size_t i = 0; i < n; ++i) {
        if (sys.is_fluid(i)) sys.acceleration[i] += g;
    }
    return c;
}

/// Dispatches on pair mode.
template <class Kernel>
InteractionCounters compute_interactions(ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                                         const InteractionParams& p, PairMode mode,
                                         const Executor& exec = Executor{}) {
    if (mode == PairMode::SymmetricHalfPairs) return compute_interactions_symmetric(sys, nbrs, kernel, p, exec);
    return compute_interactions_gather(sys, nbrs, kernel, p, exec);
}

}  // namespace wcsph
