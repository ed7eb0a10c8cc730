#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wcsph/core.hpp"
#include "wcsph/dam_break.hpp"
#include "wcsph/error.hpp"
#include "wcsph/kernels.hpp"

namespace wcsph {

struct RunSettings {
    std::string output_dir = "output";
    std::size_t particle_cap = 2'000'000;

    friend bool operator==(const RunSettings&, const RunSettings&) = default;
};

inline std::size_t count_dam_break_fluid(const DamBreakSpec& g) {
    const double d = g.particle_spacing;
    return static_cast<std::size_t>(lattice_count(g.water_column.x, d) * lattice_count(g.water_column.y, d) *
                                    lattice_count(g.water_column.z, d));
}

/// h from the water-column volume, its lattice particle count and the target
/// neighbor count.
inline double derived_smoothing_length(const SimulationConfig& c, const DamBreakSpec& g) {
    const double volume = g.water_column.x * g.water_column.y * g.water_column.z;
    return smoothing_length_from_count(volume, c.target_neighbor_count, static_cast<double>(count_dam_break_fluid(g)));
}

/// Everything a config document describes.
struct Scenario {
    SimulationConfig sim;
    DamBreakSpec geometry;
    RunSettings run;
    bool explicit_smoothing_length = false;
};

inline bool operator==(const FluidProperties& a, const FluidProperties& b) {
    return a.rest_density == b.rest_density && a.kinematic_viscosity == b.kinematic_viscosity &&
           a.speed_of_sound == b.speed_of_sound && a.gamma == b.gamma && a.gravity == b.gravity;
}

inline bool operator==(const SimulationConfig& a, const SimulationConfig& b) {
    return a.fluid == b.fluid && a.particle_spacing == b.particle_spacing &&
           a.target_neighbor_count == b.target_neighbor_count && a.smoothing_length == b.smoothing_length &&
           a.cfl == b.cfl && a.end_time == b.end_time && a.output_interval == b.output_interval &&
           a.density_mode == b.density_mode && a.pair_mode == b.pair_mode && a.neighbor_mode == b.neighbor_mode &&
           a.verlet_skin_factor == b.verlet_skin_factor && a.domain_min == b.domain_min &&
           a.domain_max == b.domain_max && a.seed == b.seed && a.viscosity_model == b.viscosity_model &&
           a.artificial_viscosity == b.artificial_viscosity &&
           a.clamp_negative_pressure == b.clamp_negative_pressure && a.integrator == b.integrator &&
           a.cell_subdivision == b.cell_subdivision && a.max_steps == b.max_steps;
}

inline bool operator==(const Scenario& a, const Scenario& b) {
    return a.sim == b.sim && a.geometry == b.geometry && a.run == b.run;
}

/// Flat `[section]` + `key = value` document with line numbers kept for
/// diagnostics. Comments start with '#' or ';'.
class ConfigDocument {
public:
    struct Entry {
        std::string value;
        int line = 0;
    };

    static ConfigDocument parse(std::string_view text) {
        ConfigDocument doc;
        std::string section;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            const std::size_t hash = raw.find_first_of("#;");
            std::string line = trim(raw.substr(0, hash));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("", line_no, "malformed section header");
                section = trim(std::string_view(line).substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError("", line_no, "empty section name");
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("", line_no, "expected `key = value`");
            const std::string key = trim(std::string_view(line).substr(0, eq));
            const std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key.empty()) throw ConfigError("", line_no, "missing key");
            if (section.empty()) throw ConfigError(key, line_no, "key outside of any [section]");
            const std::string path = section + "." + key;
            if (doc.entries_.count(path)) throw ConfigError(path, line_no, "duplicate key");
            doc.entries_[path] = Entry{value, line_no};
        }
        return doc;
    }

    /// Applies a `section.key=value` override, replacing or adding the entry.
    void set(std::string_view assignment) {
        const std::size_t eq = assignment.find('=');
        if (eq == std::string_view::npos) throw ConfigError(std::string(assignment), 0, "override must be section.key=value");
        const std::string path = trim(assignment.substr(0, eq));
        if (path.find('.') == std::string::npos || path.front() == '.' || path.back() == '.')
            throw ConfigError(path, 0, "override key must be section.key");
        auto it = entries_.find(path);
        const int line = it == entries_.end() ? 0 : it->second.line;
        entries_[path] = Entry{trim(assignment.substr(eq + 1)), line};
    }

    const Entry* find(const std::string& path) const {
        auto it = entries_.find(path);
        return it == entries_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

private:
    static std::string trim(std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return std::string(s.substr(b, e - b));
    }

    std::map<std::string, Entry> entries_;
};

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(const ConfigDocument& doc) : doc_(doc) {}

    const ConfigDocument::Entry& require(const std::string& path) {
        used_.push_back(path);
        const auto* e = doc_.find(path);
        if (!e) throw ConfigError(path, 0, "missing required key");
        return *e;
    }

    const ConfigDocument::Entry* optional(const std::string& path) {
        used_.push_back(path);
        return doc_.find(path);
    }

    static double to_double(const std::string& path, const ConfigDocument::Entry& e) {
        return parse_number(path, e.line, e.value);
    }

    static long to_integer(const std::string& path, const ConfigDocument::Entry& e) {
        long v = 0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || ptr != last) throw ConfigError(path, e.line, "not an integer: '" + e.value + "'");
        return v;
    }

    static bool to_bool(const std::string& path, const ConfigDocument::Entry& e) {
        if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
        if (e.value == "false" || e.value == "0" || e.value == "no") return false;
        throw ConfigError(path, e.line, "not a boolean: '" + e.value + "'");
    }

    static std::vector<double> to_list(const std::string& path, const ConfigDocument::Entry& e, std::size_t n) {
        std::vector<double> out;
        std::string item;
        std::istringstream in(e.value);
        while (std::getline(in, item, ',')) out.push_back(parse_number(path, e.line, item));
        if (out.size() != n)
            throw ConfigError(path, e.line, "expected " + std::to_string(n) + " comma-separated numbers");
        return out;
    }

    static Vec3 to_vec3(const std::string& path, const ConfigDocument::Entry& e) {
        const auto v = to_list(path, e, 3);
        return {v[0], v[1], v[2]};
    }

    void reject_unknown() const {
        for (const auto& [path, entry] : doc_.entries()) {
            if (std::find(used_.begin(), used_.end(), path) == used_.end())
                throw ConfigError(path, entry.line, "unknown key");
        }
    }

private:
    static double parse_number(const std::string& path, int line, std::string_view text) {
        std::size_t b = 0, e = text.size();
        while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
        text = text.substr(b, e - b);
        if (!text.empty() && text.front() == '+') text.remove_prefix(1);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
            throw ConfigError(path, line, "not a number: '" + std::string(text) + "'");
        return v;
    }

    const ConfigDocument& doc_;
    std::vector<std::string> used_;
};

constexpr std::pair<std::string_view, DensityMode> kDensityModes[] = {
    {"summation", DensityMode::Summation}, {"continuity", DensityMode::ContinuityRate}};
constexpr std::pair<std::string_view, PairMode> kPairModes[] = {
    {"gather", PairMode::Gather}, {"symmetric", PairMode::SymmetricHalfPairs}};
constexpr std::pair<std::string_view, NeighborMode> kNeighborModes[] = {
    {"brute_force", NeighborMode::BruteForce}, {"cell_list", NeighborMode::CellList}, {"verlet", NeighborMode::VerletCached}};
constexpr std::pair<std::string_view, ViscosityModel> kViscosityModels[] = {
    {"artificial", ViscosityModel::Artificial}, {"laminar", ViscosityModel::Laminar}};
constexpr std::pair<std::string_view, IntegratorKind> kIntegrators[] = {
    {"symplectic_euler", IntegratorKind::SymplecticEuler}, {"leapfrog", IntegratorKind::Leapfrog}};

template <class Enum, std::size_t N>
std::string_view enum_name(const std::pair<std::string_view, Enum> (&table)[N], Enum value) {
    for (const auto& [name, v] : table) {
        if (v == value) return name;
    }
    return "?";
}

template <class Enum, std::size_t N>
Enum read_enum(const std::string& path, const ConfigDocument::Entry& e,
               const std::pair<std::string_view, Enum> (&table)[N]) {
    for (const auto& [name, value] : table) {
        if (e.value == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : table) allowed += (allowed.empty() ? "" : "|") + std::string(name);
    throw ConfigError(path, e.line, "unknown value '" + e.value + "' (expected " + allowed + ")");
}

}  // namespace detail

/// Builds a Scenario from a parsed document. Derives the smoothing length
/// from target_neighbor_count when it is absent, and sizes the simulation
/// domain to the tank.
inline Scenario interpret_config(const ConfigDocument& doc) {
    using detail::ConfigReader;
    ConfigReader r(doc);
    Scenario s;
    auto num = [&](const std::string& p) { return ConfigReader::to_double(p, r.require(p)); };
    auto checked = [&](const std::string& p, bool ok, const char* what) {
        if (!ok) {
            const auto* e = doc.find(p);
            throw ConfigError(p, e ? e->line : 0, what);
        }
    };

    FluidProperties& f = s.sim.fluid;
    f.rest_density = num("fluid.rest_density");
    checked("fluid.rest_density", f.rest_density > 0.0, "must be > 0");
    f.kinematic_viscosity = num("fluid.viscosity");
    checked("fluid.viscosity", f.kinematic_viscosity >= 0.0, "must be >= 0");
    f.speed_of_sound = num("fluid.speed_of_sound");
    checked("fluid.speed_of_sound", f.speed_of_sound > 0.0, "must be > 0");
    f.gamma = num("fluid.gamma");
    checked("fluid.gamma", f.gamma >= 1.0, "must be >= 1");
    f.gravity = ConfigReader::to_vec3("fluid.gravity", r.require("fluid.gravity"));

    SimulationConfig& c = s.sim;
    c.cfl = num("numerics.cfl");
    checked("numerics.cfl", c.cfl > 0.0 && c.cfl <= 1.0, "must be in (0, 1]");
    c.end_time = num("numerics.end_time");
    checked("numerics.end_time", c.end_time >= 0.0, "must be >= 0");
    c.output_interval = num("numerics.output_interval");
    checked("numerics.output_interval", c.output_interval > 0.0, "must be > 0");
    c.density_mode = detail::read_enum("numerics.density_mode", r.require("numerics.density_mode"), detail::kDensityModes);
    c.pair_mode = detail::read_enum("numerics.pair_mode", r.require("numerics.pair_mode"), detail::kPairModes);
    c.neighbor_mode =
        detail::read_enum("numerics.neighbor_mode", r.require("numerics.neighbor_mode"), detail::kNeighborModes);
    c.verlet_skin_factor = num("numerics.verlet_skin_factor");
    checked("numerics.verlet_skin_factor", c.verlet_skin_factor >= 0.0, "must be >= 0");
    {
        const auto& e = r.require("numerics.target_neighbor_count");
        c.target_neighbor_count = static_cast<int>(ConfigReader::to_integer("numerics.target_neighbor_count", e));
        checked("numerics.target_neighbor_count", c.target_neighbor_count > 0, "must be > 0");
    }
    if (const auto* e = r.optional("numerics.viscosity_model"))
        c.viscosity_model = detail::read_enum("numerics.viscosity_model", *e, detail::kViscosityModels);
    if (const auto* e = r.optional("numerics.artificial_viscosity")) {
        c.artificial_viscosity = ConfigReader::to_double("numerics.artificial_viscosity", *e);
        checked("numerics.artificial_viscosity", c.artificial_viscosity >= 0.0, "must be >= 0");
    }
    if (const auto* e = r.optional("numerics.clamp_negative_pressure"))
        c.clamp_negative_pressure = ConfigReader::to_bool("numerics.clamp_negative_pressure", *e);
    if (const auto* e = r.optional("numerics.integrator"))
        c.integrator = detail::read_enum("numerics.integrator", *e, detail::kIntegrators);
    if (const auto* e = r.optional("numerics.cell_subdivision")) {
        c.cell_subdivision = static_cast<int>(ConfigReader::to_integer("numerics.cell_subdivision", *e));
        checked("numerics.cell_subdivision", c.cell_subdivision >= 1, "must be >= 1");
    }
    if (const auto* e = r.optional("numerics.max_steps")) {
        c.max_steps = ConfigReader::to_integer("numerics.max_steps", *e);
        checked("numerics.max_steps", c.max_steps >= 0, "must be >= 0");
    }

    DamBreakSpec& g = s.geometry;
    g.tank = ConfigReader::to_vec3("geometry.tank", r.require("geometry.tank"));
    g.water_column = ConfigReader::to_vec3("geometry.water_column", r.require("geometry.water_column"));
    if (const auto* e = r.optional("geometry.obstacle")) {
        const auto v = ConfigReader::to_list("geometry.obstacle", *e, 6);
        g.obstacle = Box{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
    }
    g.particle_spacing = num("geometry.particle_spacing");
    checked("geometry.particle_spacing", g.particle_spacing > 0.0, "must be > 0");
    if (const auto* e = r.optional("geometry.boundary_layers"))
        g.boundary_layers = static_cast<int>(ConfigReader::to_integer("geometry.boundary_layers", *e));
    if (const auto* e = r.optional("geometry.hydrostatic_init"))
        g.hydrostatic_init = ConfigReader::to_bool("geometry.hydrostatic_init", *e);
    try {
        g.validate();
    } catch (const InvalidInput& ex) {
        // Attribute the failure to the first geometry key the message names.
        const std::string what = ex.what();
        std::string key = "geometry";
        for (const char* k : {"obstacle", "particle_spacing", "water_column", "boundary_layers", "tank"}) {
            if (what.find(k) != std::string::npos) {
                key = std::string("geometry.") + k;
                break;
            }
        }
        const auto* e = doc.find(key);
        throw ConfigError(key, e ? e->line : 0, what);
    }
    c.particle_spacing = g.particle_spacing;

    {
        const auto& e = r.require("run.seed");
        const long seed = ConfigReader::to_integer("run.seed", e);
        checked("run.seed", seed >= 0, "must be >= 0");
        c.seed = static_cast<std::uint64_t>(seed);
    }
    s.run.output_dir = r.require("run.output_dir").value;
    checked("run.output_dir", !s.run.output_dir.empty(), "must not be empty");
    if (const auto* e = r.optional("run.particle_cap")) {
        const long cap = ConfigReader::to_integer("run.particle_cap", *e);
        checked("run.particle_cap", cap > 0, "must be > 0");
        s.run.particle_cap = static_cast<std::size_t>(cap);
    }

    if (const auto* e = r.optional("numerics.smoothing_length")) {
        c.smoothing_length = ConfigReader::to_double("numerics.smoothing_length", *e);
        checked("numerics.smoothing_length", c.smoothing_length > 0.0, "must be > 0");
        s.explicit_smoothing_length = true;
    } else {
        if (c.target_neighbor_count > static_cast<double>(count_dam_break_fluid(g)))
            throw ConfigError("numerics.target_neighbor_count", 0, "exceeds the fluid particle count");
        c.smoothing_length = derived_smoothing_length(c, g);
    }
    r.reject_unknown();
    fit_domain(c, g);
    return s;
}

/// Parses a config document and applies `section.key=value` overrides.
inline Scenario parse_config(std::string_view text, const std::vector<std::string>& overrides = {}) {
    ConfigDocument doc = ConfigDocument::parse(text);
    for (const auto& o : overrides) doc.set(o);
    return interpret_config(doc);
}

/// The same scenario at another particle spacing. An explicit smoothing
/// length keeps its ratio to the spacing; a derived one is derived again.
inline Scenario with_spacing(Scenario s, double spacing) {
    const double old = s.geometry.particle_spacing;
    s.geometry.particle_spacing = spacing;
    s.geometry.validate();
    if (s.explicit_smoothing_length)
        s.sim.smoothing_length *= spacing / old;
    else
        s.sim.smoothing_length = derived_smoothing_length(s.sim, s.geometry);
    s.sim.particle_spacing = spacing;
    fit_domain(s.sim, s.geometry);
    return s;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ptr);
}

inline std::string format_vec3(const Vec3& v) {
    return format_double(v.x) + ", " + format_double(v.y) + ", " + format_double(v.z);
}

}  // namespace detail

/// Writes a document that parses back to the same Scenario. The smoothing
/// length is always written explicitly.
inline std::string serialize_config(const Scenario& s) {
    using detail::format_double;
    using detail::format_vec3;
    const SimulationConfig& c = s.sim;
    std::ostringstream out;
    out << "[fluid]\n"
        << "rest_density = " << format_double(c.fluid.rest_density) << '\n'
        << "viscosity = " << format_double(c.fluid.kinematic_viscosity) << '\n'
        << "speed_of_sound = " << format_double(c.fluid.speed_of_sound) << '\n'
        << "gamma = " << format_double(c.fluid.gamma) << '\n'
        << "gravity = " << format_vec3(c.fluid.gravity) << "\n\n"
        << "[numerics]\n"
        << "cfl = " << format_double(c.cfl) << '\n'
        << "end_time = " << format_double(c.end_time) << '\n'
        << "output_interval = " << format_double(c.output_interval) << '\n'
        << "density_mode = " << detail::enum_name(detail::kDensityModes, c.density_mode) << '\n'
        << "pair_mode = " << detail::enum_name(detail::kPairModes, c.pair_mode) << '\n'
        << "neighbor_mode = " << detail::enum_name(detail::kNeighborModes, c.neighbor_mode) << '\n'
        << "verlet_skin_factor = " << format_double(c.verlet_skin_factor) << '\n'
        << "target_neighbor_count = " << c.target_neighbor_count << '\n'
        << "smoothing_length = " << format_double(c.smoothing_length) << '\n'
        << "viscosity_model = " << detail::enum_name(detail::kViscosityModels, c.viscosity_model) << '\n'
        << "artificial_viscosity = " << format_double(c.artificial_viscosity) << '\n'
        << "clamp_negative_pressure = " << (c.clamp_negative_pressure ? "true" : "false") << '\n'
        << "integrator = " << detail::enum_name(detail::kIntegrators, c.integrator) << '\n'
        << "cell_subdivision = " << c.cell_subdivision << '\n'
        << "max_steps = " << c.max_steps << "\n\n"
        << "[geometry]\n"
        << "tank = " << format_vec3(s.geometry.tank) << '\n'
        << "water_column = " << format_vec3(s.geometry.water_column) << '\n';
    if (s.geometry.obstacle)
        out << "obstacle = " << format_vec3(s.geometry.obstacle->min) << ", " << format_vec3(s.geometry.obstacle->max)
            << '\n';
    out << "particle_spacing = " << format_double(s.geometry.particle_spacing) << '\n'
        << "boundary_layers = " << s.geometry.boundary_layers << '\n'
        << "hydrostatic_init = " << (s.geometry.hydrostatic_init ? "true" : "false") << "\n\n"
        << "[run]\n"
        << "seed = " << c.seed << '\n'
        << "output_dir = " << s.run.output_dir << '\n'
        << "particle_cap = " << s.run.particle_cap << '\n';
    return out.str();
}

}  // namespace wcsph
