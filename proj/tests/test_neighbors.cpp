#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "wcsph/neighbors.hpp"
#include "wcsph/validation.hpp"

using namespace wcsph;

namespace {

std::vector<Vec3> random_cloud(std::size_t n, std::uint64_t seed, const Vec3& extent = {1, 1, 1}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec3> p(n);
    for (Vec3& x : p) x = Vec3{u(rng) * extent.x, u(rng) * extent.y, u(rng) * extent.z};
    return p;
}

std::vector<ParticleIndex> as_vector(std::span<const ParticleIndex> s) { return {s.begin(), s.end()}; }

// Pairs (i, j), i != j, closer than radius, by direct double loop.
std::set<std::pair<std::size_t, std::size_t>> pair_set(const std::vector<Vec3>& p, double radius) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j)
            if (i != j && norm(p[i] - p[j]) < radius) out.insert({i, j});
    return out;
}

std::set<std::pair<std::size_t, std::size_t>> pair_set(const NeighborLists& l) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < l.size(); ++i)
        for (ParticleIndex j : l.of(i)) out.insert({i, j});
    return out;
}

bool symmetric(const NeighborLists& l) {
    for (std::size_t i = 0; i < l.size(); ++i) {
        for (ParticleIndex j : l.of(i)) {
            const auto o = l.of(j);
            if (!std::binary_search(o.begin(), o.end(), static_cast<ParticleIndex>(i))) return false;
        }
    }
    return true;
}

bool sorted_without_self(const NeighborLists& l) {
    for (std::size_t i = 0; i < l.size(); ++i) {
        const auto s = l.of(i);
        if (!std::is_sorted(s.begin(), s.end())) return false;
        if (std::adjacent_find(s.begin(), s.end()) != s.end()) return false;
        if (std::find(s.begin(), s.end(), static_cast<ParticleIndex>(i)) != s.end()) return false;
    }
    return true;
}

// Probability that two uniform points of the unit cube lie closer than r:
// integral over the ball of the overlap volume prod(1 - |v_a|), by midpoint
// quadrature on a fine lattice.
double pair_probability_unit_cube(double r) {
    const int m = 160;
    const double step = 2.0 * r / m;
    double sum = 0.0;
    for (int k = 0; k < m; ++k) {
        const double z = -r + (k + 0.5) * step;
        for (int j = 0; j < m; ++j) {
            const double y = -r + (j + 0.5) * step;
            for (int i = 0; i < m; ++i) {
                const double x = -r + (i + 0.5) * step;
                if (x * x + y * y + z * z < r * r)
                    sum += (1.0 - std::abs(x)) * (1.0 - std::abs(y)) * (1.0 - std::abs(z));
            }
        }
    }
    return sum * step * step * step;
}

}  // namespace

TEST(BruteForce, CollinearExample) {
    const std::vector<Vec3> p{{0, 0, 0}, {0.5, 0, 0}, {2.0, 0, 0}};
    const NeighborLists l = brute_force_neighbors(p, 1.0);
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(as_vector(l.of(0)), (std::vector<ParticleIndex>{1}));
    EXPECT_EQ(as_vector(l.of(1)), (std::vector<ParticleIndex>{0}));
    EXPECT_TRUE(l.of(2).empty());
}

TEST(BruteForce, SingleParticle) {
    const std::vector<Vec3> p{{0.3, 0.3, 0.3}};
    const NeighborLists l = brute_force_neighbors(p, 1.0);
    ASSERT_EQ(l.size(), 1u);
    EXPECT_TRUE(l.of(0).empty());
}

TEST(BruteForce, ExclusiveRadius) {
    const std::vector<Vec3> p{{0, 0, 0}, {0.5, 0, 0}};
    EXPECT_TRUE(brute_force_neighbors(p, 0.5).of(0).empty());
    EXPECT_EQ(brute_force_neighbors(p, std::nextafter(0.5, 1.0)).of(0).size(), 1u);
}

TEST(BruteForce, MatchesPairOracle) {
    const auto p = random_cloud(300, 17);
    const NeighborLists l = brute_force_neighbors(p, 0.15);
    EXPECT_EQ(pair_set(l), pair_set(p, 0.15));
    EXPECT_TRUE(sorted_without_self(l));
    EXPECT_TRUE(symmetric(l));
}

TEST(BruteForce, RandomCloudMeanCount) {
    const double r = 0.2;
    const std::size_t n = 500;
    const double naive = n * 4.0 / 3.0 * std::numbers::pi * r * r * r;
    const double edge_corrected = (n - 1) * pair_probability_unit_cube(r);
    double mean = 0.0;
    const int seeds = 10;
    for (int s = 0; s < seeds; ++s) mean += brute_force_neighbors(random_cloud(n, 100 + s), r).mean_size();
    mean /= seeds;
    EXPECT_NEAR(naive, 16.8, 0.1);
    EXPECT_NEAR(mean, naive, 0.2 * naive);
    // Particles near the faces see fewer neighbors; the corrected oracle
    // accounts for that.
    EXPECT_NEAR(mean, edge_corrected, 0.03 * edge_corrected);
}

TEST(BruteForce, RejectsNonPositiveRadius) {
    const std::vector<Vec3> p{{0, 0, 0}};
    EXPECT_THROW(brute_force_neighbors(p, 0.0), InvalidInput);
}

TEST(Grid, SingleCellDomain) {
    const auto p = random_cloud(50, 3);
    const UniformGrid g = build_grid(p, 1.0, Vec3{0, 0, 0}, Vec3{1, 1, 1});
    EXPECT_EQ(g.dims, (std::array<int, 3>{1, 1, 1}));
    EXPECT_EQ(g.cell_count[0], 50u);
    for (const Vec3& x : p) EXPECT_EQ(g.linear(g.cell_of(x)), 0u);
}

TEST(Grid, FloorDivisionCell) {
    const std::vector<Vec3> p{{2.5, 0.1, 3.9}};
    const UniformGrid g = build_grid(p, 1.0, Vec3{0, 0, 0}, Vec3{5, 5, 5});
    EXPECT_EQ(g.cell_of(p[0]), (std::array<int, 3>{2, 0, 3}));
}

TEST(Grid, CellRangesArePermutation) {
    const auto p = random_cloud(2000, 9, Vec3{1.3, 0.7, 2.1});
    const UniformGrid g = build_grid(p, 0.11, Vec3{}, Vec3{1.3, 0.7, 2.1});
    std::vector<int> seen(p.size(), 0);
    for (std::size_t c = 0; c < g.cell_total(); ++c) {
        for (ParticleIndex i : g.cell(c)) {
            ++seen[i];
            EXPECT_EQ(g.linear(g.cell_of(p[i])), c);
        }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int k) { return k == 1; }));
    // Stable scatter: indices ascend within each cell.
    for (std::size_t c = 0; c < g.cell_total(); ++c) {
        const auto s = g.cell(c);
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    }
}

TEST(Grid, OutOfDomainNamesParticle) {
    std::vector<Vec3> p = random_cloud(10, 4);
    p[7] = Vec3{0.5, 1.5, 0.5};
    try {
        build_grid(p, 0.25, Vec3{}, Vec3{1, 1, 1});
        FAIL() << "expected InvalidInput";
    } catch (const InvalidInput& e) {
        EXPECT_NE(std::string(e.what()).find("particle 7"), std::string::npos) << e.what();
    }
}

TEST(Grid, DiagonalNeighborCells) {
    // Cells of size 1; the particles sit in cells (0,0,0) and (1,1,1).
    const double radius = 1.0;
    const double off = 0.9 * radius / std::sqrt(3.0) / 2.0;
    const std::vector<Vec3> p{{1.0 - off, 1.0 - off, 1.0 - off}, {1.0 + off, 1.0 + off, 1.0 + off}};
    const UniformGrid g = build_grid(p, 1.0, Vec3{}, Vec3{3, 3, 3});
    ASSERT_NE(g.cell_of(p[0]), g.cell_of(p[1]));
    const NeighborLists l = grid_neighbors(g, p, radius);
    EXPECT_EQ(as_vector(l.of(0)), (std::vector<ParticleIndex>{1}));
    EXPECT_EQ(as_vector(l.of(1)), (std::vector<ParticleIndex>{0}));
}

TEST(Grid, EmptySystem) {
    const std::vector<Vec3> p;
    const UniformGrid g = build_grid(p, 0.5, Vec3{}, Vec3{1, 1, 1});
    const NeighborLists l = grid_neighbors(g, p, 0.5);
    EXPECT_EQ(l.size(), 0u);
    EXPECT_EQ(l.directed_pairs(), 0u);
}

TEST(Grid, RadiusBeyondReachRejected) {
    const auto p = random_cloud(10, 5);
    const UniformGrid g = build_grid(p, 0.2, Vec3{}, Vec3{1, 1, 1});
    EXPECT_THROW(grid_neighbors(g, p, 0.21), InvalidInput);
    EXPECT_NO_THROW(grid_neighbors(g, p, 0.2));
}

TEST(Grid, MatchesBruteForceForEverySubdivision) {
    const Vec3 extent{1.0, 0.6, 0.8};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto p = random_cloud(1500, seed, extent);
        const double radius = 0.13;
        const NeighborLists brute = brute_force_neighbors(p, radius);
        for (int s = 1; s <= 3; ++s) {
            const UniformGrid g = build_grid(p, cell_size_for(radius, s), Vec3{}, extent, s);
            const NeighborLists l = grid_neighbors(g, p, radius);
            EXPECT_EQ(l, brute) << "seed " << seed << " subdivision " << s;
            EXPECT_TRUE(symmetric(l));
            EXPECT_TRUE(sorted_without_self(l));
        }
    }
}

TEST(Grid, ParticlesOnDomainFaces) {
    std::vector<Vec3> p{{0, 0, 0}, {1, 1, 1}, {1, 0, 1}, {0.95, 1, 1}, {0, 0.05, 0}};
    const UniformGrid g = build_grid(p, 0.25, Vec3{}, Vec3{1, 1, 1});
    EXPECT_EQ(grid_neighbors(g, p, 0.25), brute_force_neighbors(p, 0.25));
}

TEST(Grid, CellSizeCoversRadius) {
    for (double r : {0.1, 0.3, 1.0 / 3.0, 0.026, 2.6e-2}) {
        for (int s = 1; s <= 4; ++s) EXPECT_GE(cell_size_for(r, s) * s, r);
    }
}

TEST(Verlet, ZeroSkinEqualsGrid) {
    const auto p = random_cloud(800, 21);
    const UniformGrid g = build_grid(p, 0.1, Vec3{}, Vec3{1, 1, 1});
    const VerletList v = build_verlet(p, 0.1, 0.0, g);
    EXPECT_EQ(v.lists, grid_neighbors(g, p, 0.1));
    EXPECT_EQ(filter_verlet(v, p), grid_neighbors(g, p, 0.1));
}

TEST(Verlet, ExpandedRadiusMatchesBruteForce) {
    const auto p = random_cloud(1000, 22);
    const UniformGrid g = build_grid(p, cell_size_for(0.1 + 0.02, 1), Vec3{}, Vec3{1, 1, 1});
    const VerletList v = build_verlet(p, 0.1, 0.02, g);
    EXPECT_EQ(pair_set(v.lists), pair_set(p, 0.12));
    EXPECT_EQ(filter_verlet(v, p), brute_force_neighbors(p, 0.1));
}

TEST(Verlet, ValidityRule) {
    std::vector<Vec3> p{{0.25, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.75, 0.5, 0.5}};
    const UniformGrid g = build_grid(p, 0.5, Vec3{}, Vec3{1, 1, 1});
    const VerletList v = build_verlet(p, 0.25, 0.25, g);
    EXPECT_TRUE(is_valid(v, p));

    std::vector<Vec3> q = p;
    q[1].x += 0.125;  // exactly skin / 2
    EXPECT_EQ(max_displacement(v, q), 0.125);
    EXPECT_FALSE(is_valid(v, q));

    q = p;
    q[1].x = std::nextafter(0.625, 0.0);  // just under skin / 2, exactly representable
    EXPECT_TRUE(is_valid(v, q));

    q = p;
    for (Vec3& x : q) x.y += 0.0625;  // skin / 4
    EXPECT_TRUE(is_valid(v, q));
}

TEST(Verlet, FilteredListsExactWhileValid) {
    std::mt19937_64 rng(23);
    auto p = random_cloud(1200, 24);
    const double cutoff = 0.1, skin = 0.03;
    const Vec3 lo{-0.1, -0.1, -0.1}, hi{1.1, 1.1, 1.1};
    const UniformGrid g = build_grid(p, cell_size_for(cutoff + skin, 1), lo, hi);
    const VerletList v = build_verlet(p, cutoff, skin, g);
    for (int round = 0; round < 5; ++round) {
        for (Vec3& x : p) x += detail::random_in_ball(rng, 0.095 * skin);
        ASSERT_TRUE(is_valid(v, p));
        EXPECT_EQ(filter_verlet(v, p), brute_force_neighbors(p, cutoff));
    }
}

TEST(Verlet, RejectsMismatchedCount) {
    const auto p = random_cloud(20, 25);
    const UniformGrid g = build_grid(p, 0.2, Vec3{}, Vec3{1, 1, 1});
    const VerletList v = build_verlet(p, 0.15, 0.05, g);
    const auto q = random_cloud(21, 26);
    EXPECT_THROW(is_valid(v, q), InvalidInput);
    EXPECT_THROW(filter_verlet(v, q), InvalidInput);
}

TEST(Verlet, RejectsRadiusBeyondGrid) {
    const auto p = random_cloud(20, 27);
    const UniformGrid g = build_grid(p, 0.2, Vec3{}, Vec3{1, 1, 1});
    EXPECT_THROW(build_verlet(p, 0.15, 0.1, g), InvalidInput);
}

TEST(NeighborChecks, EquivalenceSuitePasses) {
    const CheckResult r = check_neighbor_equivalence(10, 800, 31);
    EXPECT_TRUE(r.passed) << r.detail;
}
