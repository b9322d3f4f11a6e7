#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/panel.hpp"

namespace vcd {

using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment, values may be quoted.
inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap map;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::strip_quotes(detail::trim(line.substr(eq + 1)));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        map[key] = value;
    }
    return map;
}

inline std::string serialize_config(const ConfigMap& map) {
    std::ostringstream os;
    for (const auto& [k, v] : map) os << k << " = " << v << '\n';
    return os.str();
}

enum class ArrayType { pinhole, lenslet, none };

/// Fully-typed experiment description. Every knob of the pipeline lives
/// here; `from_map` rejects unknown keys and bad values with the offending
/// key path in the message.
struct ExperimentConfig {
    std::string source;  // empty = built-in test chart
    std::uint64_t seed = 1;

    double eye_focus_distance = 0.38;
    double eye_retina_depth = 0.025;
    double eye_pupil_diameter = 0.006;

    double display_distance = 0.25;
    int retina_cols = 64;
    int retina_rows = 64;
    double retina_extent = 0.0;  // 0 = match the content window
    int aperture_samples = 9;

    int content_cols = 64;
    int content_rows = 64;
    int margin_cells = -1;     // -1 = derive from the defocus blur width
    int angular_samples = 0;   // 0 = pixels per array cell

    double panel_ppi = 254.0;
    double emission_gain = 0.0;  // 0 = 50 behind pinholes, 1 otherwise

    ArrayType array_type = ArrayType::pinhole;
    double array_pitch = 500e-6;
    double array_aperture = 100e-6;
    ApertureShape aperture_shape = ApertureShape::square;
    double array_focal = 3e-3;
    double array_gap = 3e-3;
    double array_thickness = 1e-3;

    int solver_max_iterations = 500;
    double solver_tolerance = 1e-4;
    bool solver_momentum = true;
    int solver_power_iterations = 50;

    int render_samples = 64;
    bool render_stratified = true;
    int threads = 0;

    std::vector<std::pair<int, int>> shifts{{0, 0}};

    EyeModel eye() const {
        return EyeModel(eye_focus_distance, eye_retina_depth, eye_pupil_diameter);
    }
    PinholeArraySpec pinhole() const {
        PinholeArraySpec s;
        s.pitch = array_pitch;
        s.aperture = array_aperture;
        s.gap = array_gap;
        s.shape = aperture_shape;
        return s;
    }
    LensletArraySpec lenslet() const {
        LensletArraySpec s;
        s.pitch = array_pitch;
        s.focal = array_focal;
        s.thickness = array_thickness;
        return s;
    }
    SolverOptions solver_options() const {
        SolverOptions o;
        o.max_iterations = solver_max_iterations;
        o.relative_residual_tolerance = solver_tolerance;
        o.momentum = solver_momentum;
        o.power_iterations = solver_power_iterations;
        o.threads = threads;
        return o;
    }
};

namespace detail {

class ConfigReader {
  public:
    explicit ConfigReader(const ConfigMap& map) : map_(map) {}

    std::string get_string(const std::string& key, const std::string& dflt) {
        consumed_.insert(key);
        auto it = map_.find(key);
        return it == map_.end() ? dflt : it->second;
    }
    double get_double(const std::string& key, double dflt) {
        consumed_.insert(key);
        auto it = map_.find(key);
        if (it == map_.end()) return dflt;
        try {
            std::size_t pos = 0;
            double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw ConfigError(key + ": not a number: '" + it->second + "'");
        }
    }
    int get_int(const std::string& key, int dflt) {
        double v = get_double(key, dflt);
        if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
        return static_cast<int>(v);
    }
    bool get_bool(const std::string& key, bool dflt) {
        consumed_.insert(key);
        auto it = map_.find(key);
        if (it == map_.end()) return dflt;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError(key + ": expected true or false, got '" + it->second + "'");
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) {
        consumed_.insert(key);
        auto it = map_.find(key);
        if (it == map_.end()) return dflt;
        try {
            return std::stoull(it->second);
        } catch (const std::exception&) {
            throw ConfigError(key + ": not an unsigned integer: '" + it->second + "'");
        }
    }
    void reject_unknown() const {
        for (const auto& [k, v] : map_)
            if (!consumed_.count(k)) throw ConfigError("unknown config key: " + k);
    }

  private:
    const ConfigMap& map_;
    std::set<std::string> consumed_;
};

inline std::vector<std::pair<int, int>> parse_shifts(const std::string& text) {
    std::vector<std::pair<int, int>> shifts;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        item = trim(item);
        if (item.empty()) continue;
        std::size_t comma = item.find(',');
        if (comma == std::string::npos)
            throw ConfigError("shifts: expected 'dx,dy' pairs separated by ';', got '" + item +
                              "'");
        try {
            shifts.emplace_back(std::stoi(trim(item.substr(0, comma))),
                                std::stoi(trim(item.substr(comma + 1))));
        } catch (const std::exception&) {
            throw ConfigError("shifts: bad pair '" + item + "'");
        }
    }
    if (shifts.empty()) throw ConfigError("shifts: empty list");
    return shifts;
}

inline std::string shifts_to_string(const std::vector<std::pair<int, int>>& shifts) {
    std::ostringstream os;
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        if (i) os << ';';
        os << shifts[i].first << ',' << shifts[i].second;
    }
    return os.str();
}

}  // namespace detail

inline ExperimentConfig config_from_map(const ConfigMap& map) {
    detail::ConfigReader r(map);
    ExperimentConfig c;
    c.source = r.get_string("source", "");
    c.seed = r.get_u64("seed", 1);
    c.eye_focus_distance = r.get_double("eye.focus_distance", c.eye_focus_distance);
    c.eye_retina_depth = r.get_double("eye.retina_depth", c.eye_retina_depth);
    c.eye_pupil_diameter = r.get_double("eye.pupil_diameter", c.eye_pupil_diameter);
    c.display_distance = r.get_double("scene.display_distance", c.display_distance);
    c.retina_cols = r.get_int("scene.retina_cols", c.retina_cols);
    c.retina_rows = r.get_int("scene.retina_rows", c.retina_rows);
    c.retina_extent = r.get_double("scene.retina_extent", c.retina_extent);
    c.aperture_samples = r.get_int("scene.aperture_samples", c.aperture_samples);
    c.content_cols = r.get_int("lightfield.content_cols", c.content_cols);
    c.content_rows = r.get_int("lightfield.content_rows", c.content_rows);
    c.margin_cells = r.get_int("lightfield.margin_cells", c.margin_cells);
    c.angular_samples = r.get_int("lightfield.angular_samples", c.angular_samples);
    c.panel_ppi = r.get_double("panel.ppi", c.panel_ppi);
    c.emission_gain = r.get_double("panel.emission_gain", c.emission_gain);
    std::string type = r.get_string("array.type", "pinhole");
    if (type == "pinhole")
        c.array_type = ArrayType::pinhole;
    else if (type == "lenslet")
        c.array_type = ArrayType::lenslet;
    else if (type == "none")
        c.array_type = ArrayType::none;
    else
        throw ConfigError("array.type: expected pinhole, lenslet or none, got '" + type + "'");
    c.array_pitch = r.get_double("array.pitch", c.array_pitch);
    c.array_aperture = r.get_double("array.aperture", c.array_aperture);
    std::string shape = r.get_string("array.aperture_shape", "square");
    if (shape == "square")
        c.aperture_shape = ApertureShape::square;
    else if (shape == "disc")
        c.aperture_shape = ApertureShape::disc;
    else
        throw ConfigError("array.aperture_shape: expected square or disc, got '" + shape + "'");
    c.array_focal = r.get_double("array.focal", c.array_focal);
    c.array_gap = r.get_double("array.gap", c.array_gap);
    c.array_thickness = r.get_double("array.thickness", c.array_thickness);
    c.solver_max_iterations = r.get_int("solver.max_iterations", c.solver_max_iterations);
    c.solver_tolerance = r.get_double("solver.tolerance", c.solver_tolerance);
    c.solver_momentum = r.get_bool("solver.momentum", c.solver_momentum);
    c.solver_power_iterations = r.get_int("solver.power_iterations", c.solver_power_iterations);
    c.render_samples = r.get_int("render.samples_per_pixel", c.render_samples);
    c.render_stratified = r.get_bool("render.stratified", c.render_stratified);
    c.threads = r.get_int("render.threads", c.threads);
    c.shifts = detail::parse_shifts(r.get_string("shifts", "0,0"));
    r.reject_unknown();

    // Surface invariant violations at load time with the key path.
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(std::string(key) + ": must be positive");
    };
    positive(c.eye_focus_distance, "eye.focus_distance");
    positive(c.eye_retina_depth, "eye.retina_depth");
    positive(c.eye_pupil_diameter, "eye.pupil_diameter");
    positive(c.display_distance, "scene.display_distance");
    positive(c.panel_ppi, "panel.ppi");
    positive(c.array_pitch, "array.pitch");
    positive(c.array_focal, "array.focal");
    positive(c.array_gap, "array.gap");
    if (c.retina_cols < 1 || c.retina_rows < 1)
        throw ConfigError("scene.retina_cols/rows: must be >= 1");
    if (c.aperture_samples < 1) throw ConfigError("scene.aperture_samples: must be >= 1");
    if (c.content_cols < 1 || c.content_rows < 1)
        throw ConfigError("lightfield.content_cols/rows: must be >= 1");
    if (c.angular_samples < 0) throw ConfigError("lightfield.angular_samples: must be >= 0");
    if (!(c.array_aperture > 0.0) || c.array_aperture >= c.array_pitch)
        throw ConfigError("array.aperture: need 0 < aperture < pitch");
    if (c.emission_gain < 0.0) throw ConfigError("panel.emission_gain: must be >= 0");
    if (c.solver_max_iterations < 1) throw ConfigError("solver.max_iterations: must be >= 1");
    if (!(c.solver_tolerance > 0.0)) throw ConfigError("solver.tolerance: must be positive");
    if (c.solver_power_iterations < 1) throw ConfigError("solver.power_iterations: must be >= 1");
    if (c.render_samples < 1) throw ConfigError("render.samples_per_pixel: must be >= 1");
    if (c.threads < 0) throw ConfigError("render.threads: must be >= 0");
    bool has_zero = false;
    for (const auto& s : c.shifts) has_zero = has_zero || (s.first == 0 && s.second == 0);
    if (!has_zero) throw ConfigError("shifts: must include 0,0");
    return c;
}

/// Fully-resolved key map (defaults expanded). config_from_map(config_to_map(c))
/// reproduces c.
inline ConfigMap config_to_map(const ExperimentConfig& c) {
    using detail::format_double;
    ConfigMap m;
    m["source"] = c.source;
    m["seed"] = std::to_string(c.seed);
    m["eye.focus_distance"] = format_double(c.eye_focus_distance);
    m["eye.retina_depth"] = format_double(c.eye_retina_depth);
    m["eye.pupil_diameter"] = format_double(c.eye_pupil_diameter);
    m["scene.display_distance"] = format_double(c.display_distance);
    m["scene.retina_cols"] = std::to_string(c.retina_cols);
    m["scene.retina_rows"] = std::to_string(c.retina_rows);
    m["scene.retina_extent"] = format_double(c.retina_extent);
    m["scene.aperture_samples"] = std::to_string(c.aperture_samples);
    m["lightfield.content_cols"] = std::to_string(c.content_cols);
    m["lightfield.content_rows"] = std::to_string(c.content_rows);
    m["lightfield.margin_cells"] = std::to_string(c.margin_cells);
    m["lightfield.angular_samples"] = std::to_string(c.angular_samples);
    m["panel.ppi"] = format_double(c.panel_ppi);
    m["panel.emission_gain"] = format_double(c.emission_gain);
    m["array.type"] = c.array_type == ArrayType::pinhole  ? "pinhole"
                      : c.array_type == ArrayType::lenslet ? "lenslet"
                                                            : "none";
    m["array.pitch"] = format_double(c.array_pitch);
    m["array.aperture"] = format_double(c.array_aperture);
    m["array.aperture_shape"] = c.aperture_shape == ApertureShape::square ? "square" : "disc";
    m["array.focal"] = format_double(c.array_focal);
    m["array.gap"] = format_double(c.array_gap);
    m["array.thickness"] = format_double(c.array_thickness);
    m["solver.max_iterations"] = std::to_string(c.solver_max_iterations);
    m["solver.tolerance"] = format_double(c.solver_tolerance);
    m["solver.momentum"] = c.solver_momentum ? "true" : "false";
    m["solver.power_iterations"] = std::to_string(c.solver_power_iterations);
    m["render.samples_per_pixel"] = std::to_string(c.render_samples);
    m["render.stratified"] = c.render_stratified ? "true" : "false";
    m["render.threads"] = std::to_string(c.threads);
    m["shifts"] = detail::shifts_to_string(c.shifts);
    return m;
}

/// Named parameter sets for the experiment presets. "myopic-literal" repeats
/// the hyperopic distances under the myopic label; "myopic-consistent" swaps
/// them so the display sits beyond the focal plane.
inline ConfigMap preset_overrides(const std::string& name) {
    ConfigMap m;
    if (name == "hyperopic" || name == "myopic-literal") {
        m["eye.focus_distance"] = "0.38";
        m["scene.display_distance"] = "0.25";
        m["render.samples_per_pixel"] = "16384";
    } else if (name == "myopic-consistent") {
        m["eye.focus_distance"] = "0.25";
        m["scene.display_distance"] = "0.38";
        m["render.samples_per_pixel"] = "16384";
    } else if (name == "infocus") {
        m["eye.focus_distance"] = "0.38";
        m["scene.display_distance"] = "0.38";
        m["render.samples_per_pixel"] = "4096";
    } else {
        throw ConfigError("unknown preset: " + name +
                          " (expected hyperopic, myopic-literal, myopic-consistent or infocus)");
    }
    return m;
}

}  // namespace vcd
