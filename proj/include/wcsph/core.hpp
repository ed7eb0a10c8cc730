#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wcsph/error.hpp"
#include "wcsph/vec3.hpp"

namespace wcsph {

enum class ParticleKind : std::uint8_t { Fluid = 0, Boundary = 1 };

enum class DensityMode { Summation, ContinuityRate };
enum class PairMode { Gather, SymmetricHalfPairs };
enum class NeighborMode { BruteForce, CellList, VerletCached };
enum class ViscosityModel { Artificial, Laminar };
enum class IntegratorKind { SymplecticEuler, Leapfrog };

/// Physical constants of the (single) fluid.
struct FluidProperties {
    double rest_density = 1000.0;         // kg/m^3
    double kinematic_viscosity = 1.0e-6;  // m^2/s, used by the laminar model
    double speed_of_sound = 20.0;         // m/s, EOS stiffness
    double gamma = 7.0;                   // Tait exponent
    Vec3 gravity{0.0, 0.0, -9.81};        // m/s^2

    void validate() const {
        if (!(rest_density > 0.0)) throw InvalidInput("rest_density must be > 0");
        if (!(speed_of_sound > 0.0)) throw InvalidInput("speed_of_sound must be > 0");
        if (!(gamma >= 1.0)) throw InvalidInput("gamma must be >= 1");
        if (!(kinematic_viscosity >= 0.0)) throw InvalidInput("kinematic_viscosity must be >= 0");
        if (!is_finite(gravity)) throw InvalidInput("gravity must be finite");
    }
};

struct SimulationConfig {
    FluidProperties fluid;
    double particle_spacing = 0.02;
    int target_neighbor_count = 20;
    double smoothing_length = 0.0;  // 0 = not yet derived
    double cfl = 0.3;
    double end_time = 1.5;
    double output_interval = 0.05;
    DensityMode density_mode = DensityMode::ContinuityRate;
    PairMode pair_mode = PairMode::Gather;
    NeighborMode neighbor_mode = NeighborMode::CellList;
    double verlet_skin_factor = 0.2;
    Vec3 domain_min{0.0, 0.0, 0.0};
    Vec3 domain_max{1.0, 1.0, 1.0};
    std::uint64_t seed = 0;

    ViscosityModel viscosity_model = ViscosityModel::Artificial;
    double artificial_viscosity = 0.02;  // Monaghan alpha
    bool clamp_negative_pressure = false;
    IntegratorKind integrator = IntegratorKind::SymplecticEuler;
    int cell_subdivision = 1;  // cell_size = support / s, stencil (2s+1)^3
    long max_steps = 0;        // 0 = unlimited

    void validate() const {
        fluid.validate();
        if (!(particle_spacing > 0.0)) throw InvalidInput("particle_spacing must be > 0");
        if (target_neighbor_count <= 0) throw InvalidInput("target_neighbor_count must be > 0");
        if (!(smoothing_length > 0.0)) throw InvalidInput("smoothing_length must be > 0");
        if (!(cfl > 0.0 && cfl <= 1.0)) throw InvalidInput("cfl must be in (0, 1]");
        if (!(end_time >= 0.0)) throw InvalidInput("end_time must be >= 0");
        if (!(output_interval > 0.0)) throw InvalidInput("output_interval must be > 0");
        if (!(verlet_skin_factor >= 0.0)) throw InvalidInput("verlet_skin_factor must be >= 0");
        if (!(artificial_viscosity >= 0.0)) throw InvalidInput("artificial_viscosity must be >= 0");
        if (cell_subdivision < 1) throw InvalidInput("cell_subdivision must be >= 1");
        if (max_steps < 0) throw InvalidInput("max_steps must be >= 0");
        for (int a = 0; a < 3; ++a) {
            if (!(domain_min[a] < domain_max[a]))
                throw InvalidInput("domain_min must be < domain_max componentwise");
        }
    }
};

/// Structure-of-arrays particle state. Masses and kinds are fixed at
/// construction; every other array is mutated by the solver phases.
class ParticleSystem {
public:
    ParticleSystem() = default;

    ParticleSystem(std::vector<Vec3> positions, std::vector<double> masses,
                   std::vector<ParticleKind> kinds, double initial_density)
        : position(std::move(positions)), mass_(std::move(masses)), kind_(std::move(kinds)) {
        const std::size_t n = position.size();
        if (mass_.size() != n || kind_.size() != n)
            throw InvalidInput("particle array lengths disagree");
        velocity.assign(n, Vec3{});
        density.assign(n, initial_density);
        pressure.assign(n, 0.0);
        acceleration.assign(n, Vec3{});
        density_rate.assign(n, 0.0);
    }

    std::size_t count() const noexcept { return position.size(); }
    std::span<const double> mass() const noexcept { return mass_; }
    std::span<const ParticleKind> kind() const noexcept { return kind_; }
    bool is_fluid(std::size_t i) const noexcept { return kind_[i] == ParticleKind::Fluid; }

    std::size_t fluid_count() const noexcept {
        std::size_t n = 0;
        for (auto k : kind_) n += (k == ParticleKind::Fluid);
        return n;
    }

    bool arrays_consistent() const noexcept {
        const std::size_t n = count();
        return velocity.size() == n && density.size() == n && pressure.size() == n &&
               mass_.size() == n && acceleration.size() == n && density_rate.size() == n &&
               kind_.size() == n;
    }

    std::vector<Vec3> position;
    std::vector<Vec3> velocity;
    std::vector<double> density;
    std::vector<double> pressure;
    std::vector<Vec3> acceleration;
    std::vector<double> density_rate;

private:
    std::vector<double> mass_;
    std::vector<ParticleKind> kind_;
};

inline bool inside_domain(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
}

/// Builds a particle system from fluid and boundary positions. Fluid
/// particles come first, then boundary particles, in input order.
inline ParticleSystem new_particle_system(std::span<const Vec3> fluid_positions,
                                          std::span<const Vec3> boundary_positions,
                                          const SimulationConfig& config) {
    if (fluid_positions.empty() && boundary_positions.empty())
        throw InvalidInput("particle system needs at least one particle");
    const double rho0 = config.fluid.rest_density;
    const double d = config.particle_spacing;
    if (!(rho0 > 0.0) || !(d > 0.0))
        throw InvalidInput("rest_density and particle_spacing must be > 0");

    const std::size_t n = fluid_positions.size() + boundary_positions.size();
    std::vector<Vec3> positions;
    std::vector<ParticleKind> kinds;
    positions.reserve(n);
    kinds.reserve(n);
    auto append = [&](std::span<const Vec3> src, ParticleKind kind) {
        for (const Vec3& p : src) {
            const std::size_t index = positions.size();
            if (!is_finite(p))
                throw InvalidInput("particle " + std::to_string(index) + " has a non-finite coordinate");
            if (!inside_domain(p, config.domain_min, config.domain_max))
                throw InvalidInput("particle " + std::to_string(index) + " lies outside the domain");
            positions.push_back(p);
            kinds.push_back(kind);
        }
    };
    append(fluid_positions, ParticleKind::Fluid);
    append(boundary_positions, ParticleKind::Boundary);

    std::vector<double> masses(n, rho0 * d * d * d);
    return ParticleSystem(std::move(positions), std::move(masses), std::move(kinds), rho0);
}

/// Linear momentum of the fluid particles.
inline Vec3 total_momentum(const ParticleSystem& sys) {
    Vec3 p;
    const auto m = sys.mass();
    for (std::size_t i = 0; i < sys.count(); ++i) {
        if (sys.is_fluid(i)) p += m[i] * sys.velocity[i];
    }
    return p;
}

inline double total_mass(const ParticleSystem& sys) {
    double s = 0.0;
    for (double m : sys.mass()) s += m;
    return s;
}

}  // namespace wcsph
