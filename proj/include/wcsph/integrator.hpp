#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "wcsph/core.hpp"
#include "wcsph/dynamics.hpp"
#include "wcsph/error.hpp"
#include "wcsph/kernels.hpp"
#include "wcsph/neighbors.hpp"
#include "wcsph/parallel.hpp"

namespace wcsph {

struct StepStats {
    long step = 0;
    double time = 0.0;
    double dt = 0.0;
    double neighbor_s = 0.0;
    double interact_s = 0.0;
    double update_s = 0.0;
    double max_velocity = 0.0;
    double max_density_deviation = 0.0;
    std::size_t clamped = 0;        // particles pulled back into the domain this step
    bool neighbors_rebuilt = false;  // false only for Verlet steps served from the cache

    double phase_total() const noexcept { return neighbor_s + interact_s + update_s; }
};

/// Receives the stats of the step just finished (step 0 for the initial
/// state) and a read-only view of the particles.
using OutputSink = std::function<void(const StepStats&, const ParticleSystem&)>;

/// dt = cfl * min(h / (c0 + max|u|), sqrt(h / max|a|)), maxima over fluid particles.
inline double compute_dt(const ParticleSystem& sys, const FluidProperties& fluid, double h, double cfl) {
    double umax2 = 0.0;
    double amax2 = 0.0;
    for (std::size_t i = 0; i < sys.count(); ++i) {
        if (!sys.is_fluid(i)) continue;
        umax2 = std::max(umax2, norm2(sys.velocity[i]));
        amax2 = std::max(amax2, norm2(sys.acceleration[i]));
    }
    const double acoustic = h / (fluid.speed_of_sound + std::sqrt(umax2));
    const double force =
        amax2 > 0.0 ? std::sqrt(h / std::sqrt(amax2)) : std::numeric_limits<double>::infinity();
    return cfl * std::min(acoustic, force);
}

namespace detail {

inline std::size_t clamp_to_domain(ParticleSystem& sys, std::size_t i, const Vec3& lo, const Vec3& hi) {
    std::size_t hit = 0;
    for (int a = 0; a < 3; ++a) {
        if (sys.position[i][a] < lo[a]) {
            sys.position[i][a] = lo[a];
            sys.velocity[i][a] = 0.0;
            hit = 1;
        } else if (sys.position[i][a] > hi[a]) {
            sys.position[i][a] = hi[a];
            sys.velocity[i][a] = 0.0;
            hit = 1;
        }
    }
    return hit;
}

inline std::size_t count_clamped(const std::vector<std::uint8_t>& flags) {
    std::size_t n = 0;
    for (auto f : flags) n += f;
    return n;
}

}  // namespace detail

/// Semi-implicit Euler: u += a dt, then r += u dt for fluid particles. In
/// ContinuityRate mode densities of all particles advance by rho_dot dt.
/// Returns the number of particles clamped back into [lo, hi].
inline std::size_t step_symplectic_euler(ParticleSystem& sys, double dt, DensityMode density_mode, const Vec3& lo,
                                         const Vec3& hi, const Executor& exec = Executor{}) {
    if (dt == 0.0) return 0;
    std::vector<std::uint8_t> clamped(sys.count(), 0);
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        if (density_mode == DensityMode::ContinuityRate) sys.density[i] += sys.density_rate[i] * dt;
        if (!sys.is_fluid(i)) return;
        sys.velocity[i] += sys.acceleration[i] * dt;
        sys.position[i] += sys.velocity[i] * dt;
        clamped[i] = static_cast<std::uint8_t>(detail::clamp_to_domain(sys, i, lo, hi));
    });
    return detail::count_clamped(clamped);
}

/// Overload without domain guard, for unbounded unit use.
inline void step_symplectic_euler(ParticleSystem& sys, double dt, DensityMode density_mode = DensityMode::Summation) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    step_symplectic_euler(sys, dt, density_mode, Vec3{-inf, -inf, -inf}, Vec3{inf, inf, inf});
}

/// Leapfrog half kick: u += a dt/2 for fluid particles.
inline void leapfrog_kick(ParticleSystem& sys, double half_dt, const Executor& exec = Executor{}) {
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        if (sys.is_fluid(i)) sys.velocity[i] += sys.acceleration[i] * half_dt;
    });
}

/// Leapfrog drift: r += u dt (and rho += rho_dot dt in ContinuityRate mode).
inline std::size_t leapfrog_drift(ParticleSystem& sys, double dt, DensityMode density_mode, const Vec3& lo,
                                  const Vec3& hi, const Executor& exec = Executor{}) {
    std::vector<std::uint8_t> clamped(sys.count(), 0);
    parallel_for_particles(sys.count(), exec, [&](std::size_t i) {
        if (density_mode == DensityMode::ContinuityRate) sys.density[i] += sys.density_rate[i] * dt;
        if (!sys.is_fluid(i)) return;
        sys.position[i] += sys.velocity[i] * dt;
        clamped[i] = static_cast<std::uint8_t>(detail::clamp_to_domain(sys, i, lo, hi));
    });
    return detail::count_clamped(clamped);
}

/// Phase 1 driver: produces neighbor lists at the kernel support radius using
/// the configured strategy. In VerletCached mode the expanded lists are
/// rebuilt only once a particle has moved half the skin.
class NeighborSearch {
public:
    NeighborSearch(const SimulationConfig& config, double support_radius, const Executor& exec)
        : mode_(config.neighbor_mode),
          support_(support_radius),
          skin_(config.verlet_skin_factor * config.smoothing_length),
          subdivision_(config.cell_subdivision),
          lo_(config.domain_min),
          hi_(config.domain_max),
          exec_(exec) {}

    const NeighborLists& update(std::span<const Vec3> positions) {
        rebuilt_ = true;
        switch (mode_) {
            case NeighborMode::BruteForce:
                lists_ = brute_force_neighbors(positions, support_, exec_);
                break;
            case NeighborMode::CellList: {
                const UniformGrid grid =
                    build_grid(positions, cell_size_for(support_, subdivision_), lo_, hi_, subdivision_, exec_);
                lists_ = grid_neighbors(grid, positions, support_, exec_);
                break;
            }
            case NeighborMode::VerletCached: {
                if (!verlet_ || !is_valid(*verlet_, positions)) {
                    const double radius = support_ + skin_;
                    const UniformGrid grid =
                        build_grid(positions, cell_size_for(radius, subdivision_), lo_, hi_, subdivision_, exec_);
                    verlet_ = build_verlet(positions, support_, skin_, grid, exec_);
                    ++verlet_builds_;
                } else {
                    rebuilt_ = false;
                }
                lists_ = filter_verlet(*verlet_, positions, exec_);
                break;
            }
        }
        return lists_;
    }

    const NeighborLists& lists() const noexcept { return lists_; }
    bool last_rebuilt() const noexcept { return rebuilt_; }
    std::size_t verlet_builds() const noexcept { return verlet_builds_; }

private:
    NeighborMode mode_;
    double support_;
    double skin_;
    int subdivision_;
    Vec3 lo_;
    Vec3 hi_;
    const Executor& exec_;
    NeighborLists lists_;
    std::optional<VerletList> verlet_;
    bool rebuilt_ = false;
    std::size_t verlet_builds_ = 0;
};

/// Throws NumericalBlowup if any state entry is non-finite or a density is
/// not positive.
inline void check_finite(const ParticleSystem& sys, long step) {
    for (std::size_t i = 0; i < sys.count(); ++i) {
        if (!is_finite(sys.position[i])) throw NumericalBlowup(step, "position", i);
        if (!is_finite(sys.velocity[i])) throw NumericalBlowup(step, "velocity", i);
        if (!is_finite(sys.acceleration[i])) throw NumericalBlowup(step, "acceleration", i);
        if (!std::isfinite(sys.density[i]) || !(sys.density[i] > 0.0)) throw NumericalBlowup(step, "density", i);
        if (!std::isfinite(sys.pressure[i])) throw NumericalBlowup(step, "pressure", i);
    }
}

inline void fill_state_stats(StepStats& s, const ParticleSystem& sys, double rest_density) {
    double umax2 = 0.0;
    double dev = 0.0;
    for (std::size_t i = 0; i < sys.count(); ++i) {
        if (!sys.is_fluid(i)) continue;
        umax2 = std::max(umax2, norm2(sys.velocity[i]));
        dev = std::max(dev, std::abs(sys.density[i] / rest_density - 1.0));
    }
    s.max_velocity = std::sqrt(umax2);
    s.max_density_deviation = dev;
}

struct RunResult {
    ParticleSystem system;
    std::vector<StepStats> steps;
    std::size_t snapshots = 0;
    std::size_t verlet_builds = 0;
    double wall_s = 0.0;
};

/// Three-phase loop (neighbor search, interactions, update) until the
/// simulated time reaches config.end_time or config.max_steps steps ran.
/// Sinks fire for the initial state, whenever another output_interval of
/// simulated time has elapsed, and for the final state.
inline RunResult run(const SimulationConfig& config, ParticleSystem sys, std::span<const OutputSink> sinks = {},
                     const Executor& exec = Executor{}) {
    using clock = std::chrono::steady_clock;
    const auto seconds = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };
    const auto run_start = clock::now();

    config.validate();
    if (config.pair_mode == PairMode::SymmetricHalfPairs && !exec.is_serial())
        throw InvalidInput("pair_mode symmetric requires serial execution");
    if (!sys.arrays_consistent()) throw InvalidInput("particle arrays have inconsistent lengths");

    const CubicSplineKernel kernel(config.smoothing_length);
    InteractionParams params = InteractionParams::from(config);
    const bool continuity = config.density_mode == DensityMode::ContinuityRate;
    params.fill_density_rate = false;
    NeighborSearch search(config, kernel.support_radius(), exec);

    RunResult result;
    auto emit = [&](const StepStats& s) {
        for (const auto& sink : sinks) sink(s, sys);
        ++result.snapshots;
    };

    StepStats initial;
    fill_state_stats(initial, sys, config.fluid.rest_density);
    emit(initial);

    const double end = config.end_time;
    const double interval = config.output_interval;
    double t = 0.0;
    double next_output = interval;
    long step = 0;
    bool forces_current = false;  // leapfrog keeps forces from the previous step
    bool last_emitted = true;

    auto neighbor_and_interact = [&](StepStats& s) {
        const auto t0 = clock::now();
        const NeighborLists& lists = search.update(sys.position);
        s.neighbors_rebuilt = search.last_rebuilt();
        const auto t1 = clock::now();
        compute_interactions(sys, lists, kernel, params, config.pair_mode, exec);
        const auto t2 = clock::now();
        s.neighbor_s += seconds(t0, t1);
        s.interact_s += seconds(t1, t2);
    };

    // The density rate is taken with the kicked velocities, so density and
    // velocity advance semi-implicitly like position and velocity do.
    // Advancing both from the same old state is unstable for sound waves.
    auto density_rate = [&](StepStats& s, double lookahead) {
        if (!continuity) return;
        const auto t0 = clock::now();
        if (config.pair_mode == PairMode::SymmetricHalfPairs)
            compute_density_rate_symmetric(sys, search.lists(), kernel, exec, lookahead);
        else
            compute_density_rate(sys, search.lists(), kernel, exec, lookahead);
        s.interact_s += seconds(t0, clock::now());
    };

    while (t < end && (config.max_steps == 0 || step < config.max_steps)) {
        StepStats s;
        s.step = ++step;
        if (config.integrator == IntegratorKind::SymplecticEuler) {
            neighbor_and_interact(s);
            double dt = compute_dt(sys, config.fluid, config.smoothing_length, config.cfl);
            const bool final_step = dt >= end - t;
            if (final_step) dt = end - t;
            density_rate(s, dt);
            const auto u0 = clock::now();
            s.clamped = step_symplectic_euler(sys, dt, config.density_mode, config.domain_min, config.domain_max, exec);
            t = final_step ? end : t + dt;
            s.dt = dt;
            s.update_s = seconds(u0, clock::now());
        } else {
            if (!forces_current) neighbor_and_interact(s);
            const auto u0 = clock::now();
            double dt = compute_dt(sys, config.fluid, config.smoothing_length, config.cfl);
            const bool final_step = dt >= end - t;
            if (final_step) dt = end - t;
            leapfrog_kick(sys, 0.5 * dt, exec);
            s.update_s = seconds(u0, clock::now());
            density_rate(s, 0.0);
            const auto u1 = clock::now();
            s.clamped = leapfrog_drift(sys, dt, config.density_mode, config.domain_min, config.domain_max, exec);
            s.update_s += seconds(u1, clock::now());
            neighbor_and_interact(s);
            const auto u2 = clock::now();
            leapfrog_kick(sys, 0.5 * dt, exec);
            s.update_s += seconds(u2, clock::now());
            forces_current = true;
            t = final_step ? end : t + dt;
            s.dt = dt;
        }
        s.time = t;
        check_finite(sys, step);
        fill_state_stats(s, sys, config.fluid.rest_density);
        result.steps.push_back(s);

        last_emitted = false;
        if (t >= next_output - 1e-9 * interval || t >= end) {
            emit(s);
            last_emitted = true;
            while (next_output <= t + 1e-9 * interval) next_output += interval;
        }
    }
    if (!last_emitted) emit(result.steps.back());

    result.verlet_builds = search.verlet_builds();
    result.wall_s = seconds(run_start, clock::now());
    result.system = std::move(sys);
    return result;
}

}  // namespace wcsph
