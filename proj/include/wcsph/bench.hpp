#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "wcsph/config_io.hpp"
#include "wcsph/dam_break.hpp"
#include "wcsph/error.hpp"
#include "wcsph/integrator.hpp"
#include "wcsph/output.hpp"
#include "wcsph/parallel.hpp"

namespace wcsph {

struct BenchRow {
    std::size_t particle_count = 0;
    double spacing = 0.0;
    long steps = 0;
    double wall_s = 0.0;
    double neighbor_s = 0.0;
    double interact_s = 0.0;
    double update_s = 0.0;
    double mean_neighbors = 0.0;  // mean list size at the support radius, initial state

    double per_step(double total) const { return steps > 0 ? total / static_cast<double>(steps) : 0.0; }
};

struct BenchReport {
    std::vector<BenchRow> rows;  // ascending particle_count
};

/// Refuses spacings whose particle count exceeds the cap. The cheap estimate
/// screens out absurd spacings before the exact count is taken.
inline std::size_t checked_particle_count(const DamBreakSpec& geometry, std::size_t cap) {
    auto refuse = [&](const std::string& count) {
        throw InvalidInput("particle_spacing " + detail::format_double(geometry.particle_spacing) + " gives " + count +
                           " particles, above the particle cap of " + std::to_string(cap));
    };
    const double estimate = estimate_dam_break_count(geometry);
    if (estimate > 4.0 * static_cast<double>(cap)) refuse("about " + std::to_string(static_cast<long long>(estimate)));
    const std::size_t n = count_dam_break(geometry).total();
    if (n > cap) refuse(std::to_string(n));
    return n;
}

inline BenchRow bench_one(const Scenario& scenario, const Executor& exec = Executor{}) {
    checked_particle_count(scenario.geometry, scenario.run.particle_cap);
    ParticleSystem sys = build_dam_break(scenario.geometry, scenario.sim);
    BenchRow row;
    row.particle_count = sys.count();
    row.spacing = scenario.geometry.particle_spacing;
    {
        const double support = 2.0 * scenario.sim.smoothing_length;
        const int reach = scenario.sim.cell_subdivision;
        const UniformGrid grid =
            build_grid(sys, cell_size_for(support, reach), scenario.sim.domain_min, scenario.sim.domain_max, reach, exec);
        row.mean_neighbors = grid_neighbors(grid, sys, support, exec).mean_size();
    }
    const RunResult r = run(scenario.sim, std::move(sys), {}, exec);
    row.steps = static_cast<long>(r.steps.size());
    row.wall_s = r.wall_s;
    for (const StepStats& s : r.steps) {
        row.neighbor_s += s.neighbor_s;
        row.interact_s += s.interact_s;
        row.update_s += s.update_s;
    }
    return row;
}

/// Runs the scenario once per spacing. All spacings are checked against the
/// particle cap before any run starts.
inline BenchReport run_bench(const Scenario& scenario, std::span<const double> spacings,
                             const Executor& exec = Executor{}) {
    if (spacings.empty()) throw InvalidInput("bench needs at least one spacing");
    std::vector<Scenario> runs;
    for (double d : spacings) {
        if (!(d > 0.0)) throw InvalidInput("bench spacings must be > 0");
        runs.push_back(with_spacing(scenario, d));
        checked_particle_count(runs.back().geometry, scenario.run.particle_cap);
    }
    BenchReport report;
    for (const Scenario& s : runs) report.rows.push_back(bench_one(s, exec));
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const BenchRow& a, const BenchRow& b) { return a.particle_count < b.particle_count; });
    return report;
}

inline constexpr const char* kBenchHeader = "particles,spacing,steps,wall_s,neighbor_s,interact_s,update_s,mean_neighbors";

inline std::string format_bench_csv(const BenchReport& report) {
    std::string out = kBenchHeader;
    out += '\n';
    for (const BenchRow& r : report.rows) {
        out += std::to_string(r.particle_count);
        out += ',';
        detail::append_number(out, r.spacing);
        out += ',';
        out += std::to_string(r.steps);
        for (double v : {r.wall_s, r.neighbor_s, r.interact_s, r.update_s, r.mean_neighbors}) {
            out += ',';
            detail::append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

inline std::string format_bench_table(const BenchReport& report) {
    std::string out;
    char line[200];
    std::snprintf(line, sizeof line, "%10s %10s %7s %10s %10s %10s %10s %12s %10s\n", "particles", "spacing",
                  "steps", "wall s", "neighbor s", "interact s", "update s", "ms/step", "neighbors");
    out += line;
    for (const BenchRow& r : report.rows) {
        std::snprintf(line, sizeof line, "%10zu %10.4g %7ld %10.3f %10.3f %10.3f %10.3f %12.3f %10.1f\n",
                      r.particle_count, r.spacing, r.steps, r.wall_s, r.neighbor_s, r.interact_s, r.update_s,
                      1e3 * r.per_step(r.neighbor_s + r.interact_s + r.update_s), r.mean_neighbors);
        out += line;
    }
    return out;
}

}  // namespace wcsph
