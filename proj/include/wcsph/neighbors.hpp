#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wcsph/core.hpp"
#include "wcsph/error.hpp"
#include "wcsph/parallel.hpp"
#include "wcsph/vec3.hpp"

namespace wcsph {

using ParticleIndex = std::uint32_t;

/// Per-particle neighbor lists in compressed (CSR) form. Each list is sorted
/// ascending and never contains the particle itself.
struct NeighborLists {
    std::vector<std::size_t> offsets{0};
    std::vector<ParticleIndex> indices;

    std::size_t size() const noexcept { return offsets.size() - 1; }
    std::span<const ParticleIndex> of(std::size_t i) const noexcept {
        return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    /// Number of directed (i, j) entries.
    std::size_t directed_pairs() const noexcept { return indices.size(); }
    double mean_size() const noexcept {
        return size() == 0 ? 0.0 : static_cast<double>(indices.size()) / static_cast<double>(size());
    }

    friend bool operator==(const NeighborLists&, const NeighborLists&) = default;
};

namespace detail {

// Assembles CSR lists from a per-particle gather executed in parallel blocks.
// gather(i, out) appends the (unsorted) neighbors of i to out.
template <class Gather>
NeighborLists assemble_lists(std::size_t n, const Executor& exec, Gather&& gather) {
    const auto bounds = exec.block_offsets(n);
    const std::size_t blocks = bounds.size() - 1;
    std::vector<std::vector<ParticleIndex>> local(blocks);
    NeighborLists out;
    out.offsets.assign(n + 1, 0);
    exec.for_each_block(n, [&](std::size_t begin, std::size_t end, int b) {
        auto& buf = local[b];
        buf.clear();
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t first = buf.size();
            gather(i, buf);
            std::sort(buf.begin() + static_cast<std::ptrdiff_t>(first), buf.end());
            out.offsets[i + 1] = buf.size() - first;
        }
    });
    for (std::size_t i = 0; i < n; ++i) out.offsets[i + 1] += out.offsets[i];
    out.indices.resize(out.offsets[n]);
    exec.for_each_block(blocks, [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t b = begin; b < end; ++b) {
            std::copy(local[b].begin(), local[b].end(),
                      out.indices.begin() + static_cast<std::ptrdiff_t>(out.offsets[bounds[b]]));
        }
    });
    return out;
}

inline void check_index_range(std::size_t n) {
    if (n > std::numeric_limits<ParticleIndex>::max())
        throw InvalidInput("too many particles for 32-bit neighbor indices");
}

}  // namespace detail

/// O(n^2) reference search: all j != i with |r_i - r_j| < radius.
inline NeighborLists brute_force_neighbors(std::span<const Vec3> positions, double radius,
                                           const Executor& exec = Executor{}) {
    if (!(radius > 0.0)) throw InvalidInput("neighbor radius must be > 0");
    detail::check_index_range(positions.size());
    const double r2 = radius * radius;
    const std::size_t n = positions.size();
    return detail::assemble_lists(n, exec, [&](std::size_t i, std::vector<ParticleIndex>& out) {
        const Vec3 pi = positions[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i && norm2(pi - positions[j]) < r2) out.push_back(static_cast<ParticleIndex>(j));
        }
    });
}

inline NeighborLists brute_force_neighbors(const ParticleSystem& sys, double radius,
                                           const Executor& exec = Executor{}) {
    return brute_force_neighbors(std::span<const Vec3>(sys.position), radius, exec);
}

/// Smallest cell size c with c * subdivision >= radius in floating point.
inline double cell_size_for(double radius, int subdivision) {
    double c = radius / subdivision;
    while (c * subdivision < radius) c = std::nextafter(c, std::numeric_limits<double>::infinity());
    return c;
}

/// Cell-linked list over an axis-aligned domain, built by counting sort.
/// Queries scan a (2*reach+1)^3 cell stencil, so they are exact for any
/// radius up to reach * cell_size.
struct UniformGrid {
    Vec3 origin;
    double cell_size = 0.0;
    std::array<int, 3> dims{0, 0, 0};
    int reach = 1;
    std::vector<std::size_t> cell_start;
    std::vector<std::size_t> cell_count;
    std::vector<ParticleIndex> sorted_indices;
    std::vector<Vec3> sorted_positions;  // positions in sorted_indices order

    std::size_t cell_total() const noexcept {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }

    std::array<int, 3> cell_of(const Vec3& p) const noexcept {
        std::array<int, 3> c{};
        for (int a = 0; a < 3; ++a) {
            const int k = static_cast<int>(std::floor((p[a] - origin[a]) / cell_size));
            c[a] = std::clamp(k, 0, dims[a] - 1);
        }
        return c;
    }

    std::size_t linear(const std::array<int, 3>& c) const noexcept {
        return (static_cast<std::size_t>(c[2]) * dims[1] + c[1]) * dims[0] + c[0];
    }

    std::span<const ParticleIndex> cell(std::size_t id) const noexcept {
        return {sorted_indices.data() + cell_start[id], cell_count[id]};
    }

    double max_query_radius() const noexcept { return reach * cell_size; }
};

inline UniformGrid build_grid(std::span<const Vec3> positions, double cell_size, const Vec3& domain_min,
                              const Vec3& domain_max, int reach = 1, const Executor& exec = Executor{}) {
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw InvalidInput("cell_size must be > 0");
    if (reach < 1) throw InvalidInput("grid reach must be >= 1");
    detail::check_index_range(positions.size());
    UniformGrid g;
    g.origin = domain_min;
    g.cell_size = cell_size;
    g.reach = reach;
    for (int a = 0; a < 3; ++a) {
        const double extent = domain_max[a] - domain_min[a];
        if (!(extent > 0.0)) throw InvalidInput("domain must have positive extent");
        const double cells = std::ceil(extent / cell_size);
        if (cells > 1.0e6) throw InvalidInput("grid too fine for domain");
        g.dims[a] = std::max(1, static_cast<int>(cells));
    }
    if (static_cast<double>(g.dims[0]) * g.dims[1] * g.dims[2] > 2.0e8)
        throw InvalidInput("grid has too many cells");

    const std::size_t n = positions.size();
    std::vector<std::uint32_t> cell_id(n);
    std::atomic<std::size_t> bad{n};
    parallel_for_particles(n, exec, [&](std::size_t i) {
        const Vec3& p = positions[i];
        if (!inside_domain(p, domain_min, domain_max)) {
            std::size_t expected = n;
            while (i < expected && !bad.compare_exchange_weak(expected, i)) {
            }
            return;
        }
        cell_id[i] = static_cast<std::uint32_t>(g.linear(g.cell_of(p)));
    });
    if (bad.load() != n)
        throw InvalidInput("particle " + std::to_string(bad.load()) + " lies outside the grid domain");

    // Counting sort: histogram, exclusive scan, stable scatter.
    const std::size_t cells = g.cell_total();
    g.cell_count.assign(cells, 0);
    for (std::size_t i = 0; i < n; ++i) ++g.cell_count[cell_id[i]];
    g.cell_start.assign(cells, 0);
    std::size_t running = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        g.cell_start[c] = running;
        running += g.cell_count[c];
    }
    g.sorted_indices.resize(n);
    std::vector<std::size_t> cursor = g.cell_start;
    for (std::size_t i = 0; i < n; ++i) g.sorted_indices[cursor[cell_id[i]]++] = static_cast<ParticleIndex>(i);
    g.sorted_positions.resize(n);
    for (std::size_t s = 0; s < n; ++s) g.sorted_positions[s] = positions[g.sorted_indices[s]];
    return g;
}

inline UniformGrid build_grid(const ParticleSystem& sys, double cell_size, const Vec3& domain_min,
                              const Vec3& domain_max, int reach = 1, const Executor& exec = Executor{}) {
    return build_grid(std::span<const Vec3>(sys.position), cell_size, domain_min, domain_max, reach, exec);
}

/// Fixed-radius search through the grid stencil. Produces the same lists as
/// brute_force_neighbors at the same radius.
inline NeighborLists grid_neighbors(const UniformGrid& grid, std::span<const Vec3> positions, double radius,
                                    const Executor& exec = Executor{}) {
    if (!(radius > 0.0)) throw InvalidInput("neighbor radius must be > 0");
    if (radius > grid.max_query_radius())
        throw InvalidInput("neighbor radius " + std::to_string(radius) + " exceeds grid stencil reach " +
                           std::to_string(grid.max_query_radius()));
    if (positions.size() != grid.sorted_indices.size())
        throw InvalidInput("grid was built for a different particle count");
    const double r2 = radius * radius;
    const int reach = grid.reach;
    return detail::assemble_lists(positions.size(), exec, [&](std::size_t i, std::vector<ParticleIndex>& out) {
        const Vec3 pi = positions[i];
        const auto home = grid.cell_of(pi);
        const int z0 = std::max(home[2] - reach, 0), z1 = std::min(home[2] + reach, grid.dims[2] - 1);
        const int y0 = std::max(home[1] - reach, 0), y1 = std::min(home[1] + reach, grid.dims[1] - 1);
        const int x0 = std::max(home[0] - reach, 0), x1 = std::min(home[0] + reach, grid.dims[0] - 1);
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                // Cells x0..x1 on this row are contiguous in sorted_indices.
                const std::size_t first = grid.linear({x0, y, z});
                const std::size_t last = grid.linear({x1, y, z});
                const std::size_t begin = grid.cell_start[first];
                const std::size_t end = grid.cell_start[last] + grid.cell_count[last];
                std::size_t k = out.size();
                out.resize(k + (end - begin));
                for (std::size_t s = begin; s < end; ++s) {
                    const ParticleIndex j = grid.sorted_indices[s];
                    out[k] = j;
                    k += (norm2(pi - grid.sorted_positions[s]) < r2) & (j != i);
                }
                out.resize(k);
            }
        }
    });
}

inline NeighborLists grid_neighbors(const UniformGrid& grid, const ParticleSystem& sys, double radius,
                                    const Executor& exec = Executor{}) {
    return grid_neighbors(grid, std::span<const Vec3>(sys.position), radius, exec);
}

/// Neighbor lists gathered at cutoff + skin, reusable while no particle has
/// moved skin/2 or more from where it was at build time.
struct VerletList {
    double cutoff = 0.0;
    double skin = 0.0;
    NeighborLists lists;
    std::vector<Vec3> reference_positions;
};

inline VerletList build_verlet(std::span<const Vec3> positions, double cutoff, double skin, const UniformGrid& grid,
                               const Executor& exec = Executor{}) {
    if (!(cutoff > 0.0) || !(skin >= 0.0)) throw InvalidInput("verlet cutoff must be > 0 and skin >= 0");
    if (cutoff + skin > grid.max_query_radius())
        throw InvalidInput("grid cell size too small for verlet radius cutoff + skin");
    VerletList v;
    v.cutoff = cutoff;
    v.skin = skin;
    v.lists = grid_neighbors(grid, positions, cutoff + skin, exec);
    v.reference_positions.assign(positions.begin(), positions.end());
    return v;
}

inline VerletList build_verlet(const ParticleSystem& sys, double cutoff, double skin, const UniformGrid& grid,
                               const Executor& exec = Executor{}) {
    return build_verlet(std::span<const Vec3>(sys.position), cutoff, skin, grid, exec);
}

inline double max_displacement(const VerletList& verlet, std::span<const Vec3> positions) {
    if (positions.size() != verlet.reference_positions.size())
        throw InvalidInput("verlet list was built for a different particle count");
    double worst2 = 0.0;
    for (std::size_t i = 0; i < positions.size(); ++i)
        worst2 = std::max(worst2, norm2(positions[i] - verlet.reference_positions[i]));
    return std::sqrt(worst2);
}

inline bool is_valid(const VerletList& verlet, std::span<const Vec3> positions) {
    return max_displacement(verlet, positions) < 0.5 * verlet.skin;
}

inline bool is_valid(const VerletList& verlet, const ParticleSystem& sys) {
    return is_valid(verlet, std::span<const Vec3>(sys.position));
}

/// Cached entries whose current distance is below the cutoff; order preserved.
inline NeighborLists filter_verlet(const VerletList& verlet, std::span<const Vec3> positions,
                                   const Executor& exec = Executor{}) {
    if (positions.size() != verlet.lists.size())
        throw InvalidInput("verlet list was built for a different particle count");
    const double r2 = verlet.cutoff * verlet.cutoff;
    return detail::assemble_lists(positions.size(), exec, [&](std::size_t i, std::vector<ParticleIndex>& out) {
        const Vec3 pi = positions[i];
        for (ParticleIndex j : verlet.lists.of(i)) {
            if (norm2(pi - positions[j]) < r2) out.push_back(j);
        }
    });
}

}  // namespace wcsph
