// Acceptance run: one line per criterion, nonzero exit if any criterion fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wcsph/wcsph.hpp"

using namespace wcsph;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, NotApplicable };

struct Line {
    int id;
    std::string title;
    Verdict verdict;
    std::string detail;
};

std::vector<Line> g_lines;

void report(int id, const std::string& title, Verdict v, const std::string& detail) {
    const char* tag = v == Verdict::Pass ? "[PASS]" : v == Verdict::Fail ? "[FAIL]" : "[N/A] ";
    std::printf("%s %2d %-34s %s\n", tag, id, title.c_str(), detail.c_str());
    std::fflush(stdout);
    g_lines.push_back({id, title, v, detail});
}

Verdict verdict(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Scenario load_config(const std::string& name, const std::vector<std::string>& sets = {}) {
    return parse_config(read_text(fs::path(WCSPH_SOURCE_DIR) / "configs" / name), sets);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
void guarded(int id, const std::string& title, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, title, Verdict::Fail, std::string("exception: ") + e.what());
    }
}

// Reads back a legacy VTK snapshot with a parser that shares no code with the
// writer; returns an empty string on success, else the problem.
std::string check_vtk_file(const fs::path& p, std::size_t expected) {
    std::istringstream in(read_text(p));
    std::string line, word;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile Version", 0) != 0) return "bad header";
    std::getline(in, line);
    std::getline(in, line);
    if (line != "ASCII") return "not ASCII";
    in >> word >> line;
    if (word != "DATASET" || line != "POLYDATA") return "not POLYDATA";
    std::size_t n = 0;
    in >> word >> n >> line;
    if (word != "POINTS" || n != expected) return "bad POINTS header";
    for (std::size_t i = 0; i < 3 * n; ++i) {
        double v;
        if (!(in >> v) || !std::isfinite(v)) return "bad coordinate";
    }
    in >> word >> n;
    if (word != "POINT_DATA" || n != expected) return "bad POINT_DATA";
    int fields = 0;
    while (in >> word) {
        std::string name, type;
        int comps = 3;
        if (word == "SCALARS") {
            in >> name >> type >> comps >> word >> line;
            if (word != "LOOKUP_TABLE") return "missing LOOKUP_TABLE";
        } else if (word == "VECTORS") {
            in >> name >> type;
        } else {
            return "unexpected section " + word;
        }
        for (std::size_t i = 0; i < comps * n; ++i) {
            double v;
            if (!(in >> v) || !std::isfinite(v)) return "bad value in " + name;
        }
        ++fields;
    }
    return fields == 4 ? "" : "expected 4 point-data fields";
}

int run_shell(const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void criterion_kernel() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    for (double h : {1.0, 0.0258}) {
        const CubicSplineKernel k(h);
        for (const CheckResult& r : {check_kernel_normalization(k, 1.0 / 50.0, 1e-3), check_kernel_support(k),
                                     check_kernel_gradient(k, 1000, 1, 1e-5)}) {
            ok = ok && r.passed;
            if (h == 1.0) detail += r.detail + "; ";
        }
    }
    const double s = seconds_since(t0);
    report(1, "kernel correctness", verdict(ok && s < 10.0), detail + fmt("%.2f s (< 10 s)", s));
}

void criterion_neighbors() {
    const auto t0 = std::chrono::steady_clock::now();
    const CheckResult r = check_neighbor_equivalence(100, 2000, 2024);
    const double s = seconds_since(t0);
    report(2, "neighbor oracle equivalence", verdict(r.passed && s < 60.0), r.detail + fmt(", %.1f s (< 60 s)", s));
}

void criterion_complexity() {
    const std::vector<double> spacings{0.016, 0.008};
    const Scenario cell = load_config("bench_dam_break.cfg");
    const BenchReport rc = run_bench(cell, spacings);
    const Scenario brute = load_config("bench_dam_break.cfg", {"numerics.neighbor_mode=brute_force",
                                                               "numerics.max_steps=1"});
    const BenchReport rb = run_bench(brute, spacings);
    auto phase = [](const BenchRow& r) { return r.per_step(r.neighbor_s + r.interact_s); };
    const double n_ratio = double(rc.rows[1].particle_count) / double(rc.rows[0].particle_count);
    const double cl = phase(rc.rows[1]) / phase(rc.rows[0]);
    const double bf = phase(rb.rows[1]) / phase(rb.rows[0]);
    const bool ok = cl >= 6.0 && cl <= 12.0 && bf >= 30.0 && rc.rows[1].particle_count <= 200000;
    std::string detail = std::to_string(rc.rows[0].particle_count) + " -> " + std::to_string(rc.rows[1].particle_count) +
                         " particles (x" + fmt("%.2f", n_ratio) + "); cell list neighbor+interaction x" +
                         fmt("%.2f", cl) + " (want 6..12), brute force x" + fmt("%.1f", bf) +
                         " (want >= 30); mean neighbors " + fmt("%.1f", rc.rows[1].mean_neighbors);
    report(3, "complexity shape", verdict(ok), detail);
    std::fputs(format_bench_table(rc).c_str(), stdout);
    std::fputs(format_bench_table(rb).c_str(), stdout);
}

void criterion_density() {
    const CheckResult r = check_density_consistency(20.0, 0.02);
    report(4, "density consistency", verdict(r.passed), r.detail);
}

void criterion_momentum() {
    const CheckResult r = check_momentum_conservation(1000, PairMode::Gather, Executor{}, 1e-9);
    report(5, "momentum conservation", verdict(r.passed), r.detail);
}

void criterion_symmetric() {
    // Continuity mode on a moving state of about 69k particles.
    Scenario s = load_config("bench_dam_break.cfg", {"numerics.max_steps=20"});
    s = with_spacing(s, 0.011);
    const RunResult warm = run(s.sim, build_dam_break(s.geometry, s.sim));
    const ParticleSystem& sys = warm.system;
    const CubicSplineKernel kernel(s.sim.smoothing_length);
    const double support = kernel.support_radius();
    const UniformGrid grid = build_grid(sys, cell_size_for(support, 1), s.sim.domain_min, s.sim.domain_max, 1);
    const NeighborLists nbrs = grid_neighbors(grid, sys, support);
    const InteractionParams params = InteractionParams::from(s.sim);
    const ModeComparison m = compare_pair_modes(sys, nbrs, kernel, params, 3);
    const double ratio = m.symmetric_s / m.gather_s;
    const bool ok = sys.count() >= 50000 && m.max_relative_difference <= 1e-12 && m.density_difference <= 1e-12 &&
                    2 * m.symmetric_visits == m.gather_visits && ratio <= 0.7;
    report(6, "symmetric half-pair mode", verdict(ok),
           std::to_string(sys.count()) + " particles; accel diff " + fmt("%.3g", m.max_relative_difference) +
               ", density-rate diff " + fmt("%.3g", m.density_difference) + "; visits " +
               std::to_string(m.symmetric_visits) + " vs " + std::to_string(m.gather_visits) + "; time " +
               fmt("%.3f", m.symmetric_s) + " s vs " + fmt("%.3f", m.gather_s) + " s (x" + fmt("%.2f", ratio) +
               ", want <= 0.7)");
}

void criterion_hydrostatic() {
    const Scenario s = load_config("settling_tank.cfg");
    const HydrostaticReport h = measure_hydrostatic(s);
    const bool ok = s.sim.end_time >= 2.0 && h.interior > 0 && h.max_speed < h.speed_limit &&
                    h.max_pressure_error < 0.15;
    report(7, "hydrostatic settling", verdict(ok),
           "after " + fmt("%.2g", s.sim.end_time) + " s: max speed " + fmt("%.3g", h.max_speed) + " m/s (limit " +
               fmt("%.3g", h.speed_limit) + "), max interior pressure error " +
               fmt("%.2f%%", 100.0 * h.max_pressure_error) + " over " + std::to_string(h.interior) +
               " particles (limit 15%)");
}

void criterion_dam_break(const fs::path& work) {
    Scenario s = load_config("dam_break.cfg");
    const double cadence = s.sim.output_interval;
    const int every = 10;
    s.sim.output_interval = cadence / every;  // front sampled 10x more often than snapshots
    const fs::path dir = work / "dam_break";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const Box obstacle = s.geometry.obstacle.value_or(Box{Vec3{1e9, 0, 0}, Vec3{1e9, 0, 0}});
    const double wall = std::min(s.geometry.tank.x, obstacle.min.x);
    const double half = 0.5 * s.geometry.particle_spacing;
    std::vector<double> front;
    std::vector<double> times;
    bool contact = false;
    double worst_retreat = 0.0;
    double contact_time = -1.0;
    std::size_t calls = 0;
    SnapshotWriter writer(dir);
    std::vector<fs::path> written;
    const std::vector<OutputSink> sinks{[&](const StepStats& st, const ParticleSystem& p) {
        double x = 0.0;
        for (std::size_t i = 0; i < p.count(); ++i)
            if (p.is_fluid(i)) x = std::max(x, p.position[i].x);
        if (!contact && !front.empty()) worst_retreat = std::max(worst_retreat, front.back() - x);
        if (!contact && x + half >= wall) {
            contact = true;
            contact_time = st.time;
        }
        front.push_back(x);
        times.push_back(st.time);
        if (calls % every == 0 || st.time >= s.sim.end_time) {
            written.push_back(dir / snapshot_name(writer.count()));
            writer(st, p);
        }
        ++calls;
    }};

    ParticleSystem sys = build_dam_break(s.geometry, s.sim);
    const std::size_t n = sys.count();
    const auto t0 = std::chrono::steady_clock::now();
    RunResult r;
    std::string blowup;
    try {
        r = run(s.sim, std::move(sys), sinks);
    } catch (const NumericalBlowup& e) {
        blowup = e.what();
    }
    const double wall_s = seconds_since(t0);
    const double reached = times.empty() ? 0.0 : times.back();

    std::string vtk_problem;
    for (const fs::path& p : written) {
        vtk_problem = check_vtk_file(p, n);
        if (!vtk_problem.empty()) {
            vtk_problem = p.filename().string() + ": " + vtk_problem;
            break;
        }
    }
    // The reference VTK reader, through its Python bindings.
    std::string vtk = "python3 vtk module not available";
    bool vtk_ok = false;
    if (run_shell("python3 -c 'import vtk' >/dev/null 2>&1") == 0) {
        const fs::path script = work / "vtk_check.py";
        std::ofstream(script) << "import sys, vtk\n"
                                 "n = int(sys.argv[1])\n"
                                 "for f in sys.argv[2:]:\n"
                                 "    r = vtk.vtkPolyDataReader()\n"
                                 "    r.SetFileName(f)\n"
                                 "    r.ReadAllScalarsOn()\n"
                                 "    r.ReadAllVectorsOn()\n"
                                 "    r.Update()\n"
                                 "    assert r.IsFilePolyData() and r.GetErrorCode() == 0, f\n"
                                 "    o = r.GetOutput()\n"
                                 "    assert o.GetNumberOfPoints() == n, (f, o.GetNumberOfPoints())\n"
                                 "    pd = o.GetPointData()\n"
                                 "    for k, c in (('density', 1), ('pressure', 1), ('kind', 1), ('velocity', 3)):\n"
                                 "        a = pd.GetArray(k)\n"
                                 "        assert a is not None and a.GetNumberOfTuples() == n and a.GetNumberOfComponents() == c, (f, k)\n"
                                 "print(vtk.vtkVersion.GetVTKVersion())\n";
        std::string cmd = "python3 " + script.string() + " " + std::to_string(n);
        for (const fs::path& p : written) cmd += " " + p.string();
        vtk_ok = run_shell(cmd + " >" + (work / "vtk.out").string() + " 2>&1") == 0;
        std::string out = read_text(work / "vtk.out");
        while (!out.empty() && out.back() == '\n') out.pop_back();
        vtk = vtk_ok ? "VTK " + out + " read " + std::to_string(written.size()) + " files" : "VTK reader failed: " + out;
    }

    const bool ok = blowup.empty() && n >= 10000 && n <= 30000 && std::abs(reached - 1.5) < 1e-12 &&
                    s.sim.end_time == 1.5 && worst_retreat <= 0.0 && contact && vtk_problem.empty() && vtk_ok;
    std::string detail = std::to_string(n) + " particles; simulated " + fmt("%.6g", reached) + " s in " +
                         fmt("%.0f", wall_s) + " s wall" + (blowup.empty() ? "" : "; " + blowup) + "; " +
                         std::to_string(r.steps.size()) + " steps; front monotone until contact at t=" +
                         fmt("%.3f", contact_time) + " s: " + (worst_retreat <= 0.0 ? "yes" : "no") +
                         " (largest retreat " + fmt("%.3g", worst_retreat) + " m); " +
                         std::to_string(written.size()) + " snapshots, own reader " +
                         (vtk_problem.empty() ? "ok" : vtk_problem) + ", " + vtk;
    report(8, "dam break", verdict(ok), detail);
}

void criterion_determinism(const fs::path& work) {
    Scenario s = load_config("dam_break.cfg", {"geometry.particle_spacing=0.03", "numerics.end_time=0.1",
                                               "numerics.output_interval=0.02"});
    auto produce = [&](const std::string& tag, const Executor& exec) {
        const fs::path dir = work / ("det_" + tag);
        fs::remove_all(dir);
        fs::create_directories(dir);
        SnapshotWriter writer(dir);
        const std::vector<OutputSink> sinks{[&](const StepStats& st, const ParticleSystem& p) { writer(st, p); }};
        run(s.sim, build_dam_break(s.geometry, s.sim), sinks, exec);
        std::vector<std::string> files;
        for (std::size_t i = 0; i < writer.count(); ++i) files.push_back(read_text(dir / snapshot_name(i)));
        return files;
    };
    const Executor serial;
    const Executor par(ExecPolicy::parallel(8));
    const auto s1 = produce("serial_a", serial);
    const auto s2 = produce("serial_b", serial);
    const auto p1 = produce("parallel_a", par);
    const auto p2 = produce("parallel_b", par);
    const bool ok = s1.size() > 1 && s1 == s2 && p1 == p2 && s1 == p1;
    report(9, "determinism", verdict(ok),
           std::to_string(s1.size()) + " snapshots per run; serial/serial " + (s1 == s2 ? "identical" : "DIFFER") +
               ", parallel(8)/parallel(8) " + (p1 == p2 ? "identical" : "DIFFER") + ", serial/parallel(8) " +
               (s1 == p1 ? "identical" : "DIFFER"));
}

void criterion_speedup() {
    const unsigned cores = std::thread::hardware_concurrency();
    if (cores < 4) {
        report(10, "parallel speedup (soft)", Verdict::NotApplicable,
               "needs a machine with >= 4 cores; this one reports " + std::to_string(cores));
        return;
    }
    Scenario s = load_config("bench_dam_break.cfg");
    s = with_spacing(s, 0.0085);
    ParticleSystem sys = build_dam_break(s.geometry, s.sim);
    const CubicSplineKernel kernel(s.sim.smoothing_length);
    const double support = kernel.support_radius();
    const UniformGrid grid = build_grid(sys, cell_size_for(support, 1), s.sim.domain_min, s.sim.domain_max, 1);
    const NeighborLists nbrs = grid_neighbors(grid, sys, support);
    const InteractionParams params = InteractionParams::from(s.sim);
    auto time_with = [&](const Executor& exec) {
        double best = 1e30;
        for (int k = 0; k < 3; ++k) {
            ParticleSystem copy = sys;
            const auto t0 = std::chrono::steady_clock::now();
            compute_interactions_gather(copy, nbrs, kernel, params, exec);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };
    const double serial = time_with(Executor{});
    const double parallel = time_with(Executor(ExecPolicy::parallel(static_cast<int>(cores))));
    const double speedup = serial / parallel;
    report(10, "parallel speedup (soft)", verdict(sys.count() >= 100000 && speedup >= 2.0),
           std::to_string(sys.count()) + " particles, " + std::to_string(cores) + " workers: x" +
               fmt("%.2f", speedup));
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "wcsph_acceptance";
    fs::create_directories(work);

    guarded(1, "kernel correctness", criterion_kernel);
    guarded(2, "neighbor oracle equivalence", criterion_neighbors);
    guarded(3, "complexity shape", criterion_complexity);
    guarded(4, "density consistency", criterion_density);
    guarded(5, "momentum conservation", criterion_momentum);
    guarded(6, "symmetric half-pair mode", criterion_symmetric);
    guarded(7, "hydrostatic settling", criterion_hydrostatic);
    guarded(8, "dam break", [&] { criterion_dam_break(work); });
    guarded(9, "determinism", [&] { criterion_determinism(work); });
    guarded(10, "parallel speedup (soft)", criterion_speedup);

    std::puts("\nsummary");
    int failed = 0;
    for (const Line& l : g_lines) {
        const char* tag = l.verdict == Verdict::Pass ? "[PASS]" : l.verdict == Verdict::Fail ? "[FAIL]" : "[N/A] ";
        std::printf("%s %2d %s\n", tag, l.id, l.title.c_str());
        failed += l.verdict == Verdict::Fail;
    }
    return failed == 0 ? 0 : 1;
}
