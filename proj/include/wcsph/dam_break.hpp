#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <array>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wcsph/core.hpp"
#include "wcsph/dynamics.hpp"
#include "wcsph/error.hpp"
#include "wcsph/vec3.hpp"

namespace wcsph {

struct Box {
    Vec3 min;
    Vec3 max;

    friend bool operator==(const Box&, const Box&) = default;
};

/// Tank spanning [0, tank] with an open top, a water column filling
/// [0, water_column] in the origin corner, and an optional fixed obstacle.
struct DamBreakSpec {
    Vec3 tank{1.6, 0.6, 0.6};
    Vec3 water_column{0.4, 0.6, 0.3};
    std::optional<Box> obstacle;
    double particle_spacing = 0.02;
    int boundary_layers = 2;       // layers d apart, alternate ones shifted by d/2
    bool hydrostatic_init = true;  // seed densities with the hydrostatic profile

    friend bool operator==(const DamBreakSpec&, const DamBreakSpec&) = default;

    void validate() const {
        const double d = particle_spacing;
        if (!(d > 0.0) || !std::isfinite(d)) throw InvalidInput("particle_spacing must be > 0");
        if (boundary_layers < 2) throw InvalidInput("boundary_layers must be >= 2");
        for (int a = 0; a < 3; ++a) {
            if (!(tank[a] > 0.0)) throw InvalidInput("tank extents must be > 0");
            if (!(water_column[a] > 0.0)) throw InvalidInput("water_column extents must be > 0");
            if (water_column[a] > tank[a]) throw InvalidInput("water_column must fit inside the tank");
            if (water_column[a] < d)
                throw InvalidInput("particle_spacing exceeds the water column extent along axis " +
                                   std::to_string(a));
        }
        if (obstacle) {
            const Box& b = *obstacle;
            bool overlaps_column = true;
            for (int a = 0; a < 3; ++a) {
                if (!(b.min[a] < b.max[a])) throw InvalidInput("obstacle min must be < max");
                if (b.min[a] < 0.0 || b.max[a] > tank[a]) throw InvalidInput("obstacle must lie inside the tank");
                if (b.min[a] >= water_column[a]) overlaps_column = false;
            }
            if (overlaps_column) throw InvalidInput("obstacle intersects the water column");
        }
    }

    double boundary_thickness() const noexcept { return particle_spacing * boundary_layers; }
};

/// Lattice points per axis for an extent: extent/d when d divides it,
/// otherwise floor(extent/d) + 1. Points sit at (i + 1/2) d.
inline long lattice_count(double extent, double d) {
    const double q = extent / d;
    const double r = std::round(q);
    if (std::abs(q - r) <= 1e-9 * std::max(1.0, q)) return static_cast<long>(r);
    return static_cast<long>(std::floor(q)) + 1;
}

/// Domain that contains the tank, its boundary layers and one spacing of margin.
inline void fit_domain(SimulationConfig& config, const DamBreakSpec& spec) {
    const double pad = spec.boundary_thickness() + spec.particle_spacing;
    config.domain_min = Vec3{-pad, -pad, -pad};
    config.domain_max = Vec3{spec.tank.x + pad, spec.tank.y + pad, spec.tank.z + pad};
}

namespace detail {

// Visits every particle of the scenario: fluid first, then boundary.
template <class Visit>
void visit_dam_break(const DamBreakSpec& spec, Visit&& visit) {
    const double d = spec.particle_spacing;
    const long nx = lattice_count(spec.water_column.x, d);
    const long ny = lattice_count(spec.water_column.y, d);
    const long nz = lattice_count(spec.water_column.z, d);
    for (long k = 0; k < nz; ++k)
        for (long j = 0; j < ny; ++j)
            for (long i = 0; i < nx; ++i)
                visit(ParticleKind::Fluid, Vec3{(i + 0.5) * d, (j + 0.5) * d, (k + 0.5) * d});

    const double eps = 1e-9 * d;
    std::set<std::array<long long, 3>> seen;
    auto emit = [&](const Vec3& p) {
        const double q = 0.25 * d;
        const std::array<long long, 3> key{std::llround(p.x / q), std::llround(p.y / q), std::llround(p.z / q)};
        if (seen.insert(key).second) visit(ParticleKind::Boundary, p);
    };

    // Layer l of a box shell: faces on the planes of [lo, hi], points on a
    // square lattice of spacing d anchored at lo and shifted by d/2 on odd
    // layers. `top` and `bottom` select the z faces.
    auto shell = [&](const Vec3& lo, const Vec3& hi, int layer, bool bottom, bool top) {
        const double shift = (layer % 2) * 0.5 * d;
        for (int a = 0; a < 3; ++a) {
            if (hi[a] < lo[a] - eps) return;
        }
        for (int normal = 0; normal < 3; ++normal) {
            for (int side = 0; side < 2; ++side) {
                if (normal == 2 && side == 0 && !bottom) continue;
                if (normal == 2 && side == 1 && !top) continue;
                const int t1 = (normal + 1) % 3, t2 = (normal + 2) % 3;
                Vec3 p;
                p[normal] = side == 0 ? lo[normal] : hi[normal];
                for (double u = lo[t1] + shift; u <= hi[t1] + eps; u += d) {
                    for (double v = lo[t2] + shift; v <= hi[t2] + eps; v += d) {
                        p[t1] = u;
                        p[t2] = v;
                        emit(p);
                    }
                }
            }
        }
    };

    // Tank: layers at (l + 1/2) d outside the walls and floor, open top.
    const Vec3& T = spec.tank;
    for (int layer = 0; layer < spec.boundary_layers; ++layer) {
        const double e = (layer + 0.5) * d;
        shell(Vec3{-e, -e, -e}, Vec3{T.x + e, T.y + e, T.z}, layer, true, false);
    }

    // Obstacle: layers at (l + 1/2) d inside its faces; a face resting on the
    // floor is left open.
    if (spec.obstacle) {
        const Box& b = *spec.obstacle;
        const bool on_floor = b.min.z <= eps;
        for (int layer = 0; layer < spec.boundary_layers; ++layer) {
            const double e = (layer + 0.5) * d;
            const Vec3 lo{b.min.x + e, b.min.y + e, on_floor ? b.min.z + 0.5 * d : b.min.z + e};
            const Vec3 hi{b.max.x - e, b.max.y - e, b.max.z - e};
            shell(lo, hi, layer, !on_floor, true);
        }
    }
}

}  // namespace detail

/// Rough upper estimate of the particle count, cheap for any spacing.
inline double estimate_dam_break_count(const DamBreakSpec& spec) {
    const double d = spec.particle_spacing;
    double fluid = 1.0;
    for (int a = 0; a < 3; ++a) fluid *= std::ceil(spec.water_column[a] / d) + 1.0;
    const Vec3& T = spec.tank;
    double area = T.x * T.y + 2.0 * T.z * (T.x + T.y);
    if (spec.obstacle) {
        const Vec3 e = spec.obstacle->max - spec.obstacle->min;
        area += 2.0 * (e.x * e.y + e.y * e.z + e.x * e.z);
    }
    const double per_layer = (std::sqrt(area) / d + 4.0) * (std::sqrt(area) / d + 4.0);
    return fluid + spec.boundary_layers * per_layer * 1.5;
}

struct DamBreakCounts {
    std::size_t fluid = 0;
    std::size_t boundary = 0;
    std::size_t total() const noexcept { return fluid + boundary; }
};

inline DamBreakCounts count_dam_break(const DamBreakSpec& spec) {
    spec.validate();
    DamBreakCounts c;
    detail::visit_dam_break(spec, [&](ParticleKind k, const Vec3&) {
        (k == ParticleKind::Fluid ? c.fluid : c.boundary) += 1;
    });
    return c;
}

/// Sets hydrostatic pressure and matching Tait density below the free
/// surface at height surface_z (gravity taken along z).
inline void apply_hydrostatic_profile(ParticleSystem& sys, const FluidProperties& fluid, double surface_z) {
    const double g = -fluid.gravity.z;
    for (std::size_t i = 0; i < sys.count(); ++i) {
        const double depth = surface_z - sys.position[i].z;
        const double p = depth > 0.0 ? fluid.rest_density * g * depth : 0.0;
        sys.density[i] = density_for_pressure(p, fluid);
        sys.pressure[i] = p;
    }
}

/// Fluid lattice in the water column plus boundary layers lining the tank
/// walls, floor and obstacle.
inline ParticleSystem build_dam_break(const DamBreakSpec& spec, const SimulationConfig& config) {
    spec.validate();
    std::vector<Vec3> fluid, boundary;
    detail::visit_dam_break(spec, [&](ParticleKind k, const Vec3& p) {
        (k == ParticleKind::Fluid ? fluid : boundary).push_back(p);
    });
    SimulationConfig c = config;
    c.particle_spacing = spec.particle_spacing;
    ParticleSystem sys = new_particle_system(fluid, boundary, c);
    if (spec.hydrostatic_init) {
        const double surface = lattice_count(spec.water_column.z, spec.particle_spacing) * spec.particle_spacing;
        apply_hydrostatic_profile(sys, config.fluid, surface);
    }
    return sys;
}

}  // namespace wcsph
