#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "wcsph/dynamics.hpp"
#include "wcsph/integrator.hpp"
#include "wcsph/parallel.hpp"
#include "wcsph/validation.hpp"

using namespace wcsph;

namespace {

class EnvGuard {
public:
    explicit EnvGuard(const char* value) {
        if (const char* old = std::getenv("SPH_WORKERS")) saved_ = old, had_ = true;
        if (value)
            setenv("SPH_WORKERS", value, 1);
        else
            unsetenv("SPH_WORKERS");
    }
    ~EnvGuard() {
        if (had_)
            setenv("SPH_WORKERS", saved_.c_str(), 1);
        else
            unsetenv("SPH_WORKERS");
    }

private:
    std::string saved_;
    bool had_ = false;
};

}  // namespace

TEST(Executor, EmptyRangeNoCalls) {
    for (int w : {1, 4}) {
        const Executor exec(w == 1 ? ExecPolicy::serial() : ExecPolicy::parallel(w));
        int calls = 0;
        parallel_for_particles(0, exec, [&](std::size_t) { ++calls; });
        EXPECT_EQ(calls, 0);
    }
}

TEST(Executor, ExactlyOncePerIndex) {
    for (int w = 1; w <= 8; ++w) {
        const Executor exec(ExecPolicy::parallel(w));
        for (std::size_t n : {1u, 3u, 7u, 8u, 1000u, 4097u}) {
            std::vector<int> hits(n, 0);
            parallel_for_particles(n, exec, [&](std::size_t i) { ++hits[i]; });
            for (int h : hits) ASSERT_EQ(h, 1) << "workers " << w << " n " << n;
        }
    }
}

TEST(Executor, BlocksAreContiguousAndCover) {
    const Executor exec(ExecPolicy::parallel(5));
    const auto off = exec.block_offsets(23);
    ASSERT_EQ(off.size(), 6u);
    EXPECT_EQ(off.front(), 0u);
    EXPECT_EQ(off.back(), 23u);
    for (std::size_t b = 1; b < off.size(); ++b) EXPECT_GE(off[b] - off[b - 1], 4u);
    EXPECT_EQ(exec.block_offsets(3).size(), 4u);
}

TEST(Executor, ReusableAcrossManyCalls) {
    const Executor exec(ExecPolicy::parallel(4));
    std::atomic<long> sum{0};
    for (int k = 0; k < 2000; ++k) parallel_for_particles(10, exec, [&](std::size_t i) { sum += static_cast<long>(i); });
    EXPECT_EQ(sum.load(), 2000 * 45);
}

TEST(Executor, FailurePropagates) {
    const Executor exec(ExecPolicy::parallel(4));
    std::atomic<int> calls{0};
    EXPECT_THROW(parallel_for_particles(1000, exec,
                                        [&](std::size_t i) {
                                            ++calls;
                                            if (i == 777) throw std::runtime_error("boom");
                                        }),
                 std::runtime_error);
    EXPECT_LE(calls.load(), 1000);
    // The pool still works afterwards.
    std::vector<int> hits(100, 0);
    parallel_for_particles(100, exec, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(ExecPolicy, RejectsZeroWorkers) {
    EXPECT_THROW(ExecPolicy::parallel(0), InvalidInput);
    EXPECT_THROW(ExecPolicy::parallel(-2), InvalidInput);
}

TEST(ExecPolicy, Environment) {
    {
        EnvGuard g(nullptr);
        EXPECT_TRUE(ExecPolicy::from_environment().is_serial());
    }
    {
        EnvGuard g("6");
        const ExecPolicy p = ExecPolicy::from_environment();
        EXPECT_FALSE(p.is_serial());
        EXPECT_EQ(p.workers(), 6);
    }
    {
        EnvGuard g("1");
        EXPECT_TRUE(ExecPolicy::from_environment().is_serial());
    }
    {
        EnvGuard g("many");
        EXPECT_THROW(ExecPolicy::from_environment(), InvalidInput);
    }
}

TEST(ParallelEquivalence, AccelerationsBitwise) {
    SimulationConfig c;
    c.smoothing_length = 0.013;
    ParticleSystem base = make_droplet(c, 0.07, 0.01, 21);
    std::mt19937_64 rng(22);
    for (Vec3& p : base.position) p += detail::random_in_ball(rng, 0.2 * 0.01);
    const CubicSplineKernel k(c.smoothing_length);
    const Executor serial;
    const Executor par(ExecPolicy::parallel(8));
    InteractionParams p = InteractionParams::from(c);
    for (DensityMode mode : {DensityMode::Summation, DensityMode::ContinuityRate}) {
        p.density_mode = mode;
        ParticleSystem a = base, b = base;
        const NeighborLists la = brute_force_neighbors(a, k.support_radius(), serial);
        const NeighborLists lb = brute_force_neighbors(b, k.support_radius(), par);
        ASSERT_EQ(la, lb);
        compute_interactions_gather(a, la, k, p, serial);
        compute_interactions_gather(b, lb, k, p, par);
        EXPECT_EQ(a.acceleration, b.acceleration);
        EXPECT_EQ(a.density, b.density);
        EXPECT_EQ(a.pressure, b.pressure);
        EXPECT_EQ(a.density_rate, b.density_rate);
    }
}

TEST(ParallelEquivalence, NeighborStructuresBitwise) {
    SimulationConfig c;
    ParticleSystem s = make_droplet(c, 0.08, 0.01, 23);
    const Executor serial;
    const Executor par(ExecPolicy::parallel(8));
    const double r = 0.026;
    const UniformGrid ga = build_grid(s, cell_size_for(r, 2), c.domain_min, c.domain_max, 2, serial);
    const UniformGrid gb = build_grid(s, cell_size_for(r, 2), c.domain_min, c.domain_max, 2, par);
    EXPECT_EQ(ga.sorted_indices, gb.sorted_indices);
    EXPECT_EQ(grid_neighbors(ga, s, r, serial), grid_neighbors(gb, s, r, par));
}

TEST(ParallelEquivalence, FullRunBitwise) {
    SimulationConfig c;
    c.fluid.speed_of_sound = 20.0;
    c.smoothing_length = 0.013;
    c.density_mode = DensityMode::ContinuityRate;
    c.neighbor_mode = NeighborMode::VerletCached;
    c.end_time = 1e6;
    c.output_interval = 1e6;
    c.max_steps = 40;
    const RunResult a = run(c, make_droplet(c, 0.05, 0.01, 24), {}, Executor{});
    const RunResult b = run(c, make_droplet(c, 0.05, 0.01, 24), {}, Executor(ExecPolicy::parallel(8)));
    EXPECT_EQ(a.system.position, b.system.position);
    EXPECT_EQ(a.system.velocity, b.system.velocity);
    EXPECT_EQ(a.system.density, b.system.density);
}
