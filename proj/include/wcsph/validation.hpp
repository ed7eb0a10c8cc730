#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wcsph/config_io.hpp"
#include "wcsph/core.hpp"
#include "wcsph/dam_break.hpp"
#include "wcsph/dynamics.hpp"
#include "wcsph/integrator.hpp"
#include "wcsph/kernels.hpp"
#include "wcsph/neighbors.hpp"
#include "wcsph/parallel.hpp"

// Self-checks shared by `wcsph validate` and the acceptance tests. Each
// returns a CheckResult instead of throwing so a suite can report them all.

namespace wcsph {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

template <class F>
CheckResult timed_check(std::string name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.name = std::move(name);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (;;) {
        const Vec3 p{u(rng), u(rng), u(rng)};
        if (norm2(p) <= 1.0) return radius * p;
    }
}

inline Vec3 random_direction(std::mt19937_64& rng) {
    for (;;) {
        const Vec3 p = random_in_ball(rng, 1.0);
        const double n = norm(p);
        if (n > 1e-3) return (1.0 / n) * p;
    }
}

}  // namespace detail

/// Midpoint-rule integral of W over a cubic lattice covering the support.
template <class Kernel>
CheckResult check_kernel_normalization(const Kernel& kernel, double spacing_fraction = 1.0 / 50.0,
                                       double tolerance = 1e-3) {
    return detail::timed_check("kernel normalization", [&] {
        const double h = kernel.smoothing_length();
        const double step = spacing_fraction * h;
        const double support = kernel.support_radius();
        const long cells = static_cast<long>(std::ceil(support / step));
        double sum = 0.0;
        for (long k = -cells; k < cells; ++k) {
            const double z = (k + 0.5) * step;
            for (long j = -cells; j < cells; ++j) {
                const double y = (j + 0.5) * step;
                for (long i = -cells; i < cells; ++i) {
                    const double x = (i + 0.5) * step;
                    sum += kernel.evaluate(std::sqrt(x * x + y * y + z * z));
                }
            }
        }
        const double integral = sum * step * step * step;
        CheckResult r;
        r.passed = std::abs(integral - 1.0) <= tolerance;
        r.detail = "integral " + detail::sci(integral) + " at lattice spacing h/" + std::to_string(std::lround(1.0 / spacing_fraction));
        return r;
    });
}

/// W and grad W vanish exactly at and beyond the support radius.
template <class Kernel>
CheckResult check_kernel_support(const Kernel& kernel) {
    return detail::timed_check("kernel compact support", [&] {
        const double s = kernel.support_radius();
        std::size_t failures = 0;
        for (double f : {1.0, 1.0 + 1e-12, 1.001, 1.5, 2.5, 10.0}) {
            const double r = f * s;
            if (kernel.evaluate(r) != 0.0) ++failures;
            for (const Vec3& dir : {Vec3{1, 0, 0}, Vec3{0, -1, 0}, Vec3{0.6, 0.0, 0.8}}) {
                if (kernel.gradient(r * dir) != Vec3{}) ++failures;
            }
        }
        CheckResult res;
        res.passed = failures == 0;
        res.detail = std::to_string(failures) + " nonzero values at r >= 2h";
        return res;
    });
}

/// Analytic gradient against central differences of evaluate() at random
/// displacements with |r| in [0.05h, 1.95h].
template <class Kernel>
CheckResult check_kernel_gradient(const Kernel& kernel, int samples = 1000, std::uint64_t seed = 1,
                                  double tolerance = 1e-5) {
    return detail::timed_check("kernel gradient vs finite differences", [&] {
        const double h = kernel.smoothing_length();
        const double step = 1e-6 * h;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> radius(0.05 * h, 1.95 * h);
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const Vec3 r = radius(rng) * detail::random_direction(rng);
            const Vec3 g = kernel.gradient(r);
            Vec3 fd;
            for (int a = 0; a < 3; ++a) {
                Vec3 plus = r, minus = r;
                plus[a] += step;
                minus[a] -= step;
                fd[a] = (kernel.evaluate(norm(plus)) - kernel.evaluate(norm(minus))) / (2.0 * step);
            }
            worst = std::max(worst, norm(fd - g) / norm(g));
        }
        CheckResult res;
        res.passed = worst < tolerance;
        res.detail = "max relative error " + detail::sci(worst) + " over " + std::to_string(samples) + " points";
        return res;
    });
}

/// grad W(r) = -grad W(-r) for random displacements, and the pairwise
/// pressure forces it induces on a random cloud sum to zero.
template <class Kernel>
CheckResult check_gradient_antisymmetry(const Kernel& kernel, int samples = 1000, std::uint64_t seed = 2) {
    return detail::timed_check("kernel gradient antisymmetry", [&] {
        const double support = kernel.support_radius();
        std::mt19937_64 rng(seed);
        double worst = 0.0;
        for (int s = 0; s < samples; ++s) {
            const Vec3 r = detail::random_in_ball(rng, support);
            const Vec3 g = kernel.gradient(r);
            const double scale = norm(g);
            if (scale > 0.0) worst = std::max(worst, norm(g + kernel.gradient(-1.0 * r)) / scale);
        }

        // Net pressure force of a random cloud, relative to the sum of the
        // force magnitudes.
        const std::size_t n = 100;
        std::vector<Vec3> pos(n);
        std::vector<double> q(n);
        std::uniform_real_distribution<double> u(0.5, 1.5);
        for (std::size_t i = 0; i < n; ++i) {
            pos[i] = detail::random_in_ball(rng, 2.0 * support);
            q[i] = u(rng);
        }
        Vec3 net;
        double magnitude = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            Vec3 fi;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i) fi -= (q[i] + q[j]) * kernel.gradient(pos[i] - pos[j]);
            }
            net += fi;
            magnitude += norm(fi);
        }
        const double net_rel = magnitude > 0.0 ? norm(net) / magnitude : 0.0;

        CheckResult res;
        res.passed = worst <= 1e-14 && net_rel <= 1e-12;
        res.detail = "max |grad(r) + grad(-r)|/|grad| " + detail::sci(worst) + ", net pair force " + detail::sci(net_rel);
        return res;
    });
}

/// Random systems: grid lists equal brute-force lists exactly, and filtered
/// Verlet lists equal grid lists while the Verlet list is valid.
inline CheckResult check_neighbor_equivalence(int systems = 100, std::size_t max_particles = 2000,
                                              std::uint64_t seed = 3, const Executor& exec = Executor{}) {
    return detail::timed_check("neighbor search oracle equivalence", [&] {
        std::mt19937_64 rng(seed);
        std::size_t mismatches = 0;
        std::size_t verlet_checks = 0;
        for (int s = 0; s < systems; ++s) {
            const std::size_t n = std::uniform_int_distribution<std::size_t>(1, max_particles)(rng);
            const Vec3 extent{std::uniform_real_distribution<double>(0.5, 2.0)(rng),
                              std::uniform_real_distribution<double>(0.5, 2.0)(rng),
                              std::uniform_real_distribution<double>(0.5, 2.0)(rng)};
            const double longest = std::max({extent.x, extent.y, extent.z});
            const double radius = std::uniform_real_distribution<double>(0.05, 0.5)(rng) * longest;
            const int reach = std::uniform_int_distribution<int>(1, 3)(rng);
            std::vector<Vec3> pos(n);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (Vec3& p : pos) p = Vec3{u(rng) * extent.x, u(rng) * extent.y, u(rng) * extent.z};

            const NeighborLists brute = brute_force_neighbors(pos, radius, exec);
            const UniformGrid grid = build_grid(pos, cell_size_for(radius, reach), Vec3{}, extent, reach, exec);
            if (grid_neighbors(grid, pos, radius, exec) != brute) ++mismatches;

            // Verlet: build with a skin, jitter every particle by less than
            // skin/2 and compare against a fresh grid search.
            const double skin = 0.2 * radius;
            const Vec3 lo{-skin, -skin, -skin};
            const Vec3 hi = extent + Vec3{skin, skin, skin};
            const UniformGrid wide = build_grid(pos, cell_size_for(radius + skin, reach), lo, hi, reach, exec);
            const VerletList verlet = build_verlet(pos, radius, skin, wide, exec);
            std::vector<Vec3> moved = pos;
            for (Vec3& p : moved) p += detail::random_in_ball(rng, 0.49 * skin);
            if (!is_valid(verlet, moved)) {
                ++mismatches;
                continue;
            }
            const UniformGrid fresh = build_grid(moved, cell_size_for(radius, reach), lo, hi, reach, exec);
            if (filter_verlet(verlet, moved, exec) != grid_neighbors(fresh, moved, radius, exec)) ++mismatches;
            ++verlet_checks;
        }
        CheckResult res;
        res.passed = mismatches == 0;
        res.detail = std::to_string(mismatches) + " mismatches over " + std::to_string(systems) + " systems (" +
                     std::to_string(verlet_checks) + " Verlet comparisons)";
        return res;
    });
}

/// Interior particles of a cubic lattice recover the rest density by
/// summation with h chosen for `neighbors` neighbors.
inline CheckResult check_density_consistency(double neighbors = 20.0, double tolerance = 0.02) {
    return detail::timed_check("lattice density consistency", [&] {
        const double d = 0.01;
        const long side = 24;
        const double rho0 = 1000.0;
        const double volume = std::pow(side * d, 3);
        const double h = smoothing_length_from_count(volume, neighbors, static_cast<double>(side * side * side));
        const CubicSplineKernel kernel(h);

        std::vector<Vec3> fluid;
        for (long k = 0; k < side; ++k)
            for (long j = 0; j < side; ++j)
                for (long i = 0; i < side; ++i) fluid.push_back(Vec3{(i + 0.5) * d, (j + 0.5) * d, (k + 0.5) * d});
        SimulationConfig c;
        c.particle_spacing = d;
        c.smoothing_length = h;
        c.fluid.rest_density = rho0;
        c.domain_min = Vec3{};
        c.domain_max = Vec3{side * d, side * d, side * d};
        ParticleSystem sys = new_particle_system(fluid, {}, c);
        const NeighborLists nbrs = brute_force_neighbors(sys, kernel.support_radius());
        compute_density_summation(sys, nbrs, kernel);

        const double margin = kernel.support_radius();
        double worst = 0.0;
        double mean_neighbors = 0.0;
        std::size_t interior = 0;
        for (std::size_t i = 0; i < sys.count(); ++i) {
            const Vec3& p = sys.position[i];
            bool inside = true;
            for (int a = 0; a < 3; ++a) inside = inside && p[a] > margin && p[a] < side * d - margin;
            if (!inside) continue;
            ++interior;
            mean_neighbors += static_cast<double>(nbrs.of(i).size());
            worst = std::max(worst, std::abs(sys.density[i] / rho0 - 1.0));
        }
        mean_neighbors /= static_cast<double>(std::max<std::size_t>(interior, 1));
        CheckResult res;
        res.passed = interior > 0 && worst < tolerance;
        res.detail = "max |rho/rho0 - 1| " + detail::sci(worst) + " over " + std::to_string(interior) +
                     " interior particles, h/d " + std::to_string(h / d) + ", mean neighbors within 2h " +
                     std::to_string(mean_neighbors);
        return res;
    });
}

/// Spherical lattice droplet with a random velocity field, no gravity and no
/// boundary particles.
inline ParticleSystem make_droplet(SimulationConfig& config, double radius, double spacing, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> fluid;
    const long m = static_cast<long>(std::ceil(radius / spacing));
    for (long k = -m; k <= m; ++k)
        for (long j = -m; j <= m; ++j)
            for (long i = -m; i <= m; ++i) {
                const Vec3 p{i * spacing, j * spacing, k * spacing};
                if (norm(p) <= radius) fluid.push_back(p);
            }
    config.particle_spacing = spacing;
    config.fluid.gravity = Vec3{};
    const double box = 4.0 * radius + 0.2;
    config.domain_min = Vec3{-box, -box, -box};
    config.domain_max = Vec3{box, box, box};
    ParticleSystem sys = new_particle_system(fluid, {}, config);
    const Vec3 drift{0.3, -0.2, 0.1};
    for (Vec3& v : sys.velocity) v = drift + 0.5 * Vec3{u(rng), u(rng), u(rng)};
    return sys;
}

/// Zero-gravity free droplet: |sum m u(t) - sum m u(0)| / (sum m * c0) after
/// `steps` steps.
inline CheckResult check_momentum_conservation(int steps = 1000, PairMode mode = PairMode::Gather,
                                               const Executor& exec = Executor{}, double tolerance = 1e-9) {
    return detail::timed_check("momentum conservation", [&] {
        SimulationConfig c;
        c.fluid.speed_of_sound = 20.0;
        c.density_mode = DensityMode::ContinuityRate;
        c.pair_mode = mode;
        c.neighbor_mode = NeighborMode::CellList;
        c.cfl = 0.2;
        c.smoothing_length = 1.3 * 0.01;
        c.end_time = 1e6;
        c.output_interval = 1e6;
        c.max_steps = steps;
        ParticleSystem sys = make_droplet(c, 0.06, 0.01, 7);
        const Vec3 p0 = total_momentum(sys);
        const double scale = total_mass(sys) * c.fluid.speed_of_sound;
        const RunResult r = run(c, std::move(sys), {}, exec);
        const double drift = norm(total_momentum(r.system) - p0) / scale;
        CheckResult res;
        res.passed = drift < tolerance && static_cast<int>(r.steps.size()) == steps;
        res.detail = "relative momentum drift " + detail::sci(drift) + " after " + std::to_string(r.steps.size()) +
                     " steps, " + std::to_string(r.system.count()) + " particles";
        return res;
    });
}

struct ModeComparison {
    double max_relative_difference = 0.0;  // max |a_sym - a_gather| / max |a_gather|
    double density_difference = 0.0;       // same, for densities (summation) or rates (continuity)
    std::size_t gather_visits = 0;
    std::size_t symmetric_visits = 0;
    double gather_s = 0.0;
    double symmetric_s = 0.0;
};

/// Runs one interaction pass in both pair modes on copies of `sys` and
/// compares the results. Timings are the best of `repeats` serial passes.
template <class Kernel>
ModeComparison compare_pair_modes(const ParticleSystem& sys, const NeighborLists& nbrs, const Kernel& kernel,
                                  const InteractionParams& params, int repeats = 1) {
    using clock = std::chrono::steady_clock;
    const Executor serial;
    ModeComparison out;
    ParticleSystem g = sys, s = sys;
    out.gather_s = out.symmetric_s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < repeats; ++k) {
        g = sys;
        auto t0 = clock::now();
        out.gather_visits = compute_interactions_gather(g, nbrs, kernel, params, serial).pair_visits;
        auto t1 = clock::now();
        s = sys;
        out.symmetric_visits = compute_interactions_symmetric(s, nbrs, kernel, params, serial).pair_visits;
        auto t2 = clock::now();
        out.gather_s = std::min(out.gather_s, std::chrono::duration<double>(t1 - t0).count());
        out.symmetric_s = std::min(out.symmetric_s, std::chrono::duration<double>(t2 - t1).count());
    }
    double amax = 0.0, adiff = 0.0, dmax = 0.0, ddiff = 0.0;
    const bool summation = params.density_mode == DensityMode::Summation;
    for (std::size_t i = 0; i < sys.count(); ++i) {
        amax = std::max(amax, norm(g.acceleration[i]));
        adiff = std::max(adiff, norm(g.acceleration[i] - s.acceleration[i]));
        const double dg = summation ? g.density[i] : g.density_rate[i];
        const double ds = summation ? s.density[i] : s.density_rate[i];
        dmax = std::max(dmax, std::abs(dg));
        ddiff = std::max(ddiff, std::abs(dg - ds));
    }
    out.max_relative_difference = amax > 0.0 ? adiff / amax : adiff;
    out.density_difference = dmax > 0.0 ? ddiff / dmax : ddiff;
    return out;
}

/// Symmetric half-pair pass agrees with the gather pass and visits exactly
/// half the directed pairs (all-fluid droplet).
inline CheckResult check_symmetric_matches_gather(double radius = 0.06, double spacing = 0.01) {
    return detail::timed_check("symmetric half-pair vs gather", [&] {
        SimulationConfig c;
        c.smoothing_length = 1.3 * spacing;
        ParticleSystem sys = make_droplet(c, radius, spacing, 11);
        std::mt19937_64 rng(12);
        for (Vec3& p : sys.position) p += detail::random_in_ball(rng, 0.1 * spacing);
        const CubicSplineKernel kernel(c.smoothing_length);
        const NeighborLists nbrs = brute_force_neighbors(sys, kernel.support_radius());
        InteractionParams params = InteractionParams::from(c);
        params.fluid.gravity = Vec3{};
        CheckResult res;
        res.passed = true;
        for (DensityMode mode : {DensityMode::Summation, DensityMode::ContinuityRate}) {
            params.density_mode = mode;
            // Continuity mode needs non-rest densities for nonzero pressures.
            ParticleSystem start = sys;
            for (std::size_t i = 0; i < start.count(); ++i)
                start.density[i] = c.fluid.rest_density * (1.0 + 0.01 * std::sin(static_cast<double>(i)));
            const ModeComparison m = compare_pair_modes(start, nbrs, kernel, params);
            const bool ok = m.max_relative_difference <= 1e-12 && m.density_difference <= 1e-12 &&
                            2 * m.symmetric_visits == m.gather_visits;
            res.passed = res.passed && ok;
            res.detail += std::string(mode == DensityMode::Summation ? "summation" : "continuity") +
                          ": accel diff " + detail::sci(m.max_relative_difference) + ", density diff " +
                          detail::sci(m.density_difference) + ", visits " + std::to_string(m.symmetric_visits) + "/" +
                          std::to_string(m.gather_visits) + "; ";
        }
        return res;
    });
}

struct HydrostaticReport {
    double max_speed = 0.0;
    double speed_limit = 0.0;  // 0.01 sqrt(g H)
    double max_pressure_error = 0.0;  // max |P - rho0 g z| / (rho0 g z) over interior fluid
    std::size_t interior = 0;
    std::size_t steps = 0;
};

/// Settles the scenario's water column (which should fill the tank
/// footprint) and measures residual motion and the pressure profile.
/// Interior particles lie at least one support radius from the walls, the
/// floor and the initial free surface.
inline HydrostaticReport measure_hydrostatic(const Scenario& scenario, const Executor& exec = Executor{}) {
    const SimulationConfig& c = scenario.sim;
    ParticleSystem sys = build_dam_break(scenario.geometry, c);
    const RunResult r = run(c, std::move(sys), {}, exec);
    const double g = -c.fluid.gravity.z;
    const double d = scenario.geometry.particle_spacing;
    const double surface = lattice_count(scenario.geometry.water_column.z, d) * d;
    const double margin = 2.0 * c.smoothing_length;
    const Vec3& w = scenario.geometry.water_column;

    HydrostaticReport out;
    out.steps = r.steps.size();
    out.speed_limit = 0.01 * std::sqrt(g * surface);
    const ParticleSystem& s = r.system;
    for (std::size_t i = 0; i < s.count(); ++i) {
        if (!s.is_fluid(i)) continue;
        out.max_speed = std::max(out.max_speed, norm(s.velocity[i]));
        const Vec3& p = s.position[i];
        if (p.x < margin || p.x > w.x - margin || p.y < margin || p.y > w.y - margin || p.z < margin ||
            p.z > surface - margin)
            continue;
        const double expected = c.fluid.rest_density * g * (surface - p.z);
        out.max_pressure_error = std::max(out.max_pressure_error, std::abs(s.pressure[i] - expected) / expected);
        ++out.interior;
    }
    return out;
}

inline CheckResult check_hydrostatic(const Scenario& scenario, const Executor& exec = Executor{},
                                     double pressure_tolerance = 0.15) {
    return detail::timed_check("hydrostatic settling", [&] {
        const HydrostaticReport h = measure_hydrostatic(scenario, exec);
        CheckResult res;
        res.passed = h.interior > 0 && h.max_speed < h.speed_limit && h.max_pressure_error < pressure_tolerance;
        res.detail = "max speed " + detail::sci(h.max_speed) + " (limit " + detail::sci(h.speed_limit) +
                     "), max interior pressure error " + detail::sci(h.max_pressure_error) + " over " +
                     std::to_string(h.interior) + " particles after " + std::to_string(h.steps) + " steps";
        return res;
    });
}

/// A small settling tank used by the fast suite.
inline Scenario small_settling_tank() {
    Scenario s;
    s.sim.fluid.speed_of_sound = 20.0;
    s.sim.cfl = 0.3;
    s.sim.end_time = 2.0;
    s.sim.output_interval = 2.0;
    s.sim.density_mode = DensityMode::ContinuityRate;
    s.sim.target_neighbor_count = 9;
    s.geometry.tank = Vec3{0.2, 0.2, 0.3};
    s.geometry.water_column = Vec3{0.2, 0.2, 0.2};
    s.geometry.particle_spacing = 0.02;
    return with_spacing(s, s.geometry.particle_spacing);
}

/// The fast suite run by `wcsph validate`.
inline std::vector<CheckResult> run_validation_suite(const Executor& exec = Executor{}) {
    const CubicSplineKernel kernel(1.0);
    std::vector<CheckResult> out;
    out.push_back(check_kernel_normalization(kernel));
    out.push_back(check_kernel_support(kernel));
    out.push_back(check_kernel_gradient(kernel));
    out.push_back(check_gradient_antisymmetry(kernel));
    out.push_back(check_neighbor_equivalence(20, 1000, 3, exec));
    out.push_back(check_density_consistency());
    out.push_back(check_momentum_conservation(1000, PairMode::Gather, exec));
    out.push_back(check_symmetric_matches_gather());
    out.push_back(check_hydrostatic(small_settling_tank(), exec));
    return out;
}

}  // namespace wcsph
