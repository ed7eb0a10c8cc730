#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wcsph/wcsph.hpp"

namespace fs = std::filesystem;
using namespace wcsph;

namespace {

struct CommonOptions {
    std::string config;
    std::string output_dir;
    int workers = 0;  // 0: take SPH_WORKERS, else serial
    std::vector<std::string> overrides;
    bool quiet = false;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

ExecPolicy policy_for(int workers) {
    if (workers == 0) return ExecPolicy::from_environment();
    if (workers < 0) throw InvalidInput("--workers must be >= 1");
    return workers == 1 ? ExecPolicy::serial() : ExecPolicy::parallel(workers);
}

Scenario load(const CommonOptions& o) {
    Scenario s = parse_config(read_file(o.config), o.overrides);
    if (!o.output_dir.empty()) s.run.output_dir = o.output_dir;
    return s;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_config) {
    auto* config = cmd->add_option("--config", o.config, "Scenario config file");
    if (needs_config) config->required()->check(CLI::ExistingFile);
    cmd->add_option("--output-dir", o.output_dir, "Output directory (overrides run.output_dir)");
    cmd->add_option("--workers", o.workers, "Worker threads; 1 is serial (default: $SPH_WORKERS, else serial)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--set", o.overrides, "Override a config entry, section.key=value (repeatable)")
        ->take_all()
        ->allow_extra_args(false);
    cmd->add_flag("--quiet", o.quiet, "Suppress the summary");
}

int cmd_run(const CommonOptions& o) {
    const Scenario scenario = load(o);
    const Executor exec(policy_for(o.workers));
    checked_particle_count(scenario.geometry, scenario.run.particle_cap);
    ParticleSystem sys = build_dam_break(scenario.geometry, scenario.sim);
    const std::size_t particles = sys.count();

    const fs::path dir = scenario.run.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    SnapshotWriter writer(dir);
    const std::vector<OutputSink> sinks{[&](const StepStats& s, const ParticleSystem& p) { writer(s, p); }};
    const RunResult r = run(scenario.sim, std::move(sys), sinks, exec);

    double nb = 0.0, in = 0.0, up = 0.0;
    std::size_t clamped = 0;
    for (const StepStats& s : r.steps) {
        nb += s.neighbor_s;
        in += s.interact_s;
        up += s.update_s;
        clamped += s.clamped;
    }
    if (!r.steps.empty()) {
        write_timings_csv(r.steps, dir / "timings.csv");
    } else {
        std::ofstream(dir / "timings.csv") << kTimingsHeader << '\n';
    }

    if (!o.quiet) {
        const double simulated = r.steps.empty() ? 0.0 : r.steps.back().time;
        std::printf("particles      %zu\n", particles);
        std::printf("steps          %zu\n", r.steps.size());
        std::printf("simulated      %.6g s\n", simulated);
        std::printf("wall clock     %.3f s\n", r.wall_s);
        std::printf("neighbor phase %.3f s\n", nb);
        std::printf("interactions   %.3f s\n", in);
        std::printf("update phase   %.3f s\n", up);
        std::printf("snapshots      %zu in %s\n", writer.count(), dir.string().c_str());
        if (scenario.sim.neighbor_mode == NeighborMode::VerletCached)
            std::printf("verlet builds  %zu\n", r.verlet_builds);
        std::printf("domain clamps  %zu\n", clamped);
    }
    return 0;
}

int cmd_bench(const CommonOptions& o, const std::vector<double>& spacings, long cap) {
    Scenario scenario = load(o);
    if (cap > 0) scenario.run.particle_cap = static_cast<std::size_t>(cap);
    std::vector<double> list = spacings;
    if (list.empty()) list.push_back(scenario.geometry.particle_spacing);
    const Executor exec(policy_for(o.workers));
    const BenchReport report = run_bench(scenario, list, exec);

    const fs::path dir = scenario.run.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const fs::path csv = dir / "bench.csv";
    std::ofstream out(csv, std::ios::binary | std::ios::trunc);
    out << format_bench_csv(report);
    if (!out) throw IoError("failed writing " + csv.string());

    if (!o.quiet) std::fputs(format_bench_table(report).c_str(), stdout);
    return 0;
}

int cmd_validate(const CommonOptions& o) {
    const Executor exec(policy_for(o.workers));
    bool all = true;
    for (const CheckResult& r : run_validation_suite(exec)) {
        all = all && r.passed;
        if (!o.quiet || !r.passed)
            std::printf("%s  %-40s %8.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                        r.detail.c_str());
    }
    if (!all) std::fprintf(stderr, "validate: one or more checks failed\n");
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly compressible SPH dam-break solver"};
    app.require_subcommand(1);

    CommonOptions run_opts, bench_opts, validate_opts;
    std::vector<double> spacings;
    long cap = 0;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario, writing VTK snapshots and timings.csv");
    add_common(run_cmd, run_opts, true);

    auto* bench_cmd = app.add_subcommand("bench", "Run the scenario at several particle spacings");
    add_common(bench_cmd, bench_opts, true);
    bench_cmd->add_option("--spacing", spacings, "Comma-separated particle spacings in meters")->delimiter(',');
    bench_cmd->add_option("--particle-cap", cap, "Refuse spacings above this many particles")
        ->check(CLI::PositiveNumber);

    auto* validate_cmd = app.add_subcommand("validate", "Run the fast self-check suite");
    validate_cmd->add_option("--workers", validate_opts.workers, "Worker threads; 1 is serial")
        ->check(CLI::NonNegativeNumber);
    validate_cmd->add_flag("--quiet", validate_opts.quiet, "Only print failing checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run_opts);
        if (bench_cmd->parsed()) return cmd_bench(bench_opts, spacings, cap);
        return cmd_validate(validate_opts);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "wcsph: %s\n", e.what());
        return 1;
    }
}
