#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include "wcsph/core.hpp"
#include "wcsph/error.hpp"
#include "wcsph/integrator.hpp"

namespace wcsph {

namespace detail {

// 17 significant digits: every double survives a print/parse round trip.
inline void append_number(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    out.append(buf, ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file.write(content.data(), static_cast<std::streamsize>(content.size()));
    file.close();
    if (!file) throw IoError("failed writing " + path.string());
}

}  // namespace detail

/// Legacy-format ASCII POLYDATA snapshot: particle positions as POINTS with
/// density, pressure and kind scalars and a velocity vector per point.
inline std::string format_vtk_snapshot(const ParticleSystem& sys, const std::string& title = "wcsph particles") {
    const std::size_t n = sys.count();
    std::string out;
    out.reserve(n * 200 + 256);
    out += "# vtk DataFile Version 3.0\n";
    out += title.empty() ? std::string("wcsph") : title.substr(0, 255);
    out += "\nASCII\nDATASET POLYDATA\n";
    out += "POINTS " + std::to_string(n) + " double\n";
    auto vec = [&](const Vec3& v) {
        detail::append_number(out, v.x);
        out += ' ';
        detail::append_number(out, v.y);
        out += ' ';
        detail::append_number(out, v.z);
        out += '\n';
    };
    for (const Vec3& p : sys.position) vec(p);

    out += "POINT_DATA " + std::to_string(n) + '\n';
    auto scalars = [&](const char* name, std::span<const double> values) {
        out += "SCALARS ";
        out += name;
        out += " double 1\nLOOKUP_TABLE default\n";
        for (double v : values) {
            detail::append_number(out, v);
            out += '\n';
        }
    };
    scalars("density", sys.density);
    scalars("pressure", sys.pressure);
    out += "SCALARS kind int 1\nLOOKUP_TABLE default\n";
    for (ParticleKind k : sys.kind()) out += k == ParticleKind::Fluid ? "0\n" : "1\n";
    out += "VECTORS velocity double\n";
    for (const Vec3& u : sys.velocity) vec(u);
    return out;
}

inline void write_vtk_snapshot(const ParticleSystem& sys, const std::filesystem::path& path,
                               const std::string& title = "wcsph particles") {
    detail::write_file(path, format_vtk_snapshot(sys, title));
}

inline constexpr const char* kTimingsHeader = "step,time,dt,neighbor_s,interact_s,update_s,max_vel,max_rho_dev";

inline std::string format_timings_csv(std::span<const StepStats> stats) {
    if (stats.empty()) throw InvalidInput("timings CSV needs at least one step");
    std::string out = kTimingsHeader;
    out += '\n';
    for (const StepStats& s : stats) {
        out += std::to_string(s.step);
        for (double v : {s.time, s.dt, s.neighbor_s, s.interact_s, s.update_s, s.max_velocity,
                         s.max_density_deviation}) {
            out += ',';
            detail::append_number(out, v);
        }
        out += '\n';
    }
    return out;
}

inline void write_timings_csv(std::span<const StepStats> stats, const std::filesystem::path& path) {
    detail::write_file(path, format_timings_csv(stats));
}

/// snapshot_000042.vtk
inline std::string snapshot_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%06zu.vtk", index);
    return buf;
}

/// Output sink writing numbered VTK snapshots into a directory.
class SnapshotWriter {
public:
    explicit SnapshotWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void operator()(const StepStats& stats, const ParticleSystem& sys) {
        char title[96];
        std::snprintf(title, sizeof title, "wcsph step %ld time %.17g", stats.step, stats.time);
        write_vtk_snapshot(sys, dir_ / snapshot_name(count_), title);
        ++count_;
    }

    std::size_t count() const noexcept { return count_; }

private:
    std::filesystem::path dir_;
    std::size_t count_ = 0;
};

}  // namespace wcsph
