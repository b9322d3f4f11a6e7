#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vcd/config.hpp"
#include "vcd/errors.hpp"
#include "vcd/forward_model.hpp"
#include "vcd/image.hpp"
#include "vcd/light_field.hpp"
#include "vcd/panel.hpp"
#include "vcd/retina_sim.hpp"
#include "vcd/solver.hpp"

namespace vcd {

/// Derived per-run geometry shared by the solve, the panel synthesis and the
/// benches: light-field lattice (content window plus a guard margin that
/// keeps the defocus blur inside the field), retinal window, panel size.
struct PipelinePlan {
    LightFieldGrid grid;
    SceneGeometry geometry;
    PanelSpec panel;
    int margin_cells = 0;
    int content_cols = 0;
    int content_rows = 0;

    double content_width() const { return content_cols * grid.spatial_pitch; }
};

/// Width of the defocus kernel on the display plane: pupil * |1 - d_o/d_f|.
inline double defocus_blur_width(const EyeModel& eye, double display_distance) {
    return eye.pupil_diameter * std::abs(1.0 - display_distance / eye.focus_distance);
}

/// Signed angular step of the light field a cell-based display emits: one
/// panel pixel step under a cell moves the served pupil intercept by
/// d_o * pixel_pitch / gap, toward negative for a direct (pinhole) layout
/// and positive for the mirrored (lenslet) layout.
inline double hardware_angular_step(const ArraySpec& array, const PanelSpec& panel,
                                    double display_distance) {
    double step = display_distance * panel.pixel_pitch() / array_gap(array);
    return is_lenslet(array) ? step : -step;
}

inline PipelinePlan make_plan(const ExperimentConfig& cfg,
                              const std::optional<ArraySpec>& array) {
    PipelinePlan plan;
    plan.content_cols = cfg.content_cols;
    plan.content_rows = cfg.content_rows;
    plan.panel.ppi = cfg.panel_ppi;
    plan.panel.emission_gain = 1.0;

    const EyeModel eye = cfg.eye();
    double pitch = array ? array_pitch(*array) : cfg.array_pitch;
    int margin = cfg.margin_cells;
    if (margin < 0) {
        double blur = defocus_blur_width(eye, cfg.display_distance);
        margin = static_cast<int>(std::ceil(0.5 * blur / pitch)) + 2;
    }
    plan.margin_cells = margin;

    plan.grid.n_x = cfg.content_cols + 2 * margin;
    plan.grid.n_y = cfg.content_rows + 2 * margin;
    plan.grid.spatial_pitch = pitch;
    if (array) {
        int k = angular_count(pitch, plan.panel.pixel_pitch());
        plan.grid.n_u = k;
        plan.grid.n_v = k;
        plan.grid.angular_step = hardware_angular_step(*array, plan.panel, cfg.display_distance);
    } else {
        int n = cfg.angular_samples > 0 ? cfg.angular_samples : 5;
        plan.grid.n_u = n;
        plan.grid.n_v = n;
        plan.grid.angular_step = cfg.eye_pupil_diameter / n;
    }
    plan.grid.angular_center = 0.0;

    plan.panel.cols = plan.grid.n_x * plan.grid.n_u;
    plan.panel.rows = plan.grid.n_y * plan.grid.n_v;

    plan.geometry.display_distance = cfg.display_distance;
    plan.geometry.retina_cols = cfg.retina_cols;
    plan.geometry.retina_rows = cfg.retina_rows;
    plan.geometry.aperture_samples_u = cfg.aperture_samples;
    plan.geometry.aperture_samples_v = cfg.aperture_samples;
    // Default window: chief rays map the content window exactly onto the
    // retinal raster (magnification d_e/d_o).
    plan.geometry.retina_extent =
        cfg.retina_extent > 0.0
            ? cfg.retina_extent
            : plan.content_width() * cfg.eye_retina_depth / cfg.display_distance;
    return plan;
}

/// Geometric fraction of panel light an array sheet lets through.
inline double array_throughput(const ArraySpec& array) {
    if (is_lenslet(array)) return 1.0;
    const auto& ph = std::get<PinholeArraySpec>(array);
    double linear = ph.aperture / ph.pitch;
    double square_ratio = linear * linear;
    return ph.shape == ApertureShape::square ? square_ratio
                                             : square_ratio * 3.14159265358979323846 / 4.0;
}

inline double auto_emission_gain(const ExperimentConfig& cfg, const ArraySpec& array) {
    if (cfg.emission_gain > 0.0) return cfg.emission_gain;
    return is_lenslet(array) ? 1.0 : 50.0;
}

/// One array path of the pipeline: solved field, interlaced panel and the
/// brightness pre-compensation applied to the solve target so that the
/// gained render reproduces the requested image.
struct VcdPath {
    PipelinePlan plan;
    double emission_gain = 1.0;
    double target_scale = 1.0;
    LightField4D light_field;
    Image panel_image;
    std::vector<std::vector<double>> residual_history;
    int iterations_used = 0;
    bool converged = false;
};

inline Image scale_image(const Image& img, double s) {
    Image out = img;
    for (double& v : out.data) v *= s;
    return out;
}

/// Prefilter + interlace for one array type. The target must match the
/// configured retinal raster.
inline VcdPath build_vcd_path(const ExperimentConfig& cfg, const ArraySpec& array,
                              const Image& target) {
    VcdPath path;
    path.plan = make_plan(cfg, array);
    path.emission_gain = auto_emission_gain(cfg, array);
    double boost = path.emission_gain * array_throughput(array);
    path.target_scale = boost > 1.0 ? 1.0 / boost : 1.0;

    PrefilterMatrix P = build_prefilter_matrix(cfg.eye(), path.plan.geometry, path.plan.grid,
                                               cfg.threads);
    Image solve_target = path.target_scale == 1.0 ? target : scale_image(target, path.target_scale);
    ShiftedSetResult set =
        interlace_shifted_set(solve_target, cfg.shifts, P, array, path.plan.panel,
                              cfg.solver_options());
    path.light_field = std::move(set.merged);
    path.panel_image = std::move(set.panel);
    if (!set.per_shift.empty()) {
        path.residual_history = set.per_shift.front().residual_history;
        path.iterations_used = set.per_shift.front().iterations_used;
        path.converged = set.per_shift.front().converged;
    }
    return path;
}

inline OpticalBench make_vcd_bench(const ExperimentConfig& cfg, const ArraySpec& array,
                                   const VcdPath& path) {
    OpticalBench bench;
    bench.panel_image = path.panel_image;
    bench.panel = path.plan.panel;
    bench.panel.emission_gain = path.emission_gain;
    bench.array = array;
    bench.array_distance = cfg.display_distance;
    bench.eye = cfg.eye();
    bench.retina_cols = cfg.retina_cols;
    bench.retina_rows = cfg.retina_rows;
    bench.retina_extent = path.plan.geometry.retina_extent;
    bench.rng_seed = cfg.seed;
    return bench;
}

/// Plain-LCD baseline: the source letterboxed at the content scale on the
/// same panel, no array, panel on the array plane.
inline OpticalBench make_baseline_bench(const ExperimentConfig& cfg, const PipelinePlan& plan,
                                        const Image& source) {
    Image content = resample_bilinear(source, plan.content_cols * plan.grid.n_u,
                                      plan.content_rows * plan.grid.n_v);
    Image panel(plan.panel.cols, plan.panel.rows, content.channels);
    const int off_c = (plan.panel.cols - content.width) / 2;
    const int off_r = (plan.panel.rows - content.height) / 2;
    for (int r = 0; r < content.height; ++r)
        for (int c = 0; c < content.width; ++c)
            for (int ch = 0; ch < content.channels; ++ch)
                panel.at(r + off_r, c + off_c, ch) = content.at(r, c, ch);

    OpticalBench bench;
    bench.panel_image = std::move(panel);
    bench.panel = plan.panel;
    bench.panel.emission_gain = 1.0;
    bench.array_distance = cfg.display_distance;
    bench.eye = cfg.eye();
    bench.retina_cols = cfg.retina_cols;
    bench.retina_rows = cfg.retina_rows;
    bench.retina_extent = plan.geometry.retina_extent;
    bench.rng_seed = cfg.seed;
    return bench;
}

struct ExperimentReport {
    Image source_reference;
    Image defocused;
    Image vcd_pinhole;
    Image vcd_lenslet;
    double psnr_defocused = 0.0;
    double psnr_pinhole_vcd = 0.0;
    double psnr_lenslet_vcd = 0.0;
    std::map<std::string, double> mean_luminance;
    VcdPath pinhole_path;
    VcdPath lenslet_path;
    double wall_time_seconds = 0.0;
    ConfigMap resolved_config;
};

/// Full four-image run: source reference, defocused baseline, pinhole VCD
/// and lenslet VCD, with quality metrics against the reference.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Image& source) {
    auto t0 = std::chrono::steady_clock::now();
    ExperimentReport rep;
    rep.resolved_config = config_to_map(cfg);
    rep.source_reference = resample_bilinear(source, cfg.retina_cols, cfg.retina_rows);

    RenderSettings rs;
    rs.samples_per_pixel = cfg.render_samples;
    rs.stratified = cfg.render_stratified;
    rs.threads = cfg.threads;

    const ArraySpec pin{cfg.pinhole()};
    const ArraySpec len{cfg.lenslet()};

    rep.pinhole_path = build_vcd_path(cfg, pin, rep.source_reference);
    rep.lenslet_path = build_vcd_path(cfg, len, rep.source_reference);

    rep.defocused = render(make_baseline_bench(cfg, rep.pinhole_path.plan, source), rs);
    rep.vcd_pinhole = render(make_vcd_bench(cfg, pin, rep.pinhole_path), rs);
    rep.vcd_lenslet = render(make_vcd_bench(cfg, len, rep.lenslet_path), rs);

    rep.psnr_defocused = psnr(rep.defocused, rep.source_reference);
    rep.psnr_pinhole_vcd = psnr(rep.vcd_pinhole, rep.source_reference);
    rep.psnr_lenslet_vcd = psnr(rep.vcd_lenslet, rep.source_reference);
    rep.mean_luminance["source"] = mean_value(rep.source_reference);
    rep.mean_luminance["defocused"] = mean_value(rep.defocused);
    rep.mean_luminance["vcd_pinhole"] = mean_value(rep.vcd_pinhole);
    rep.mean_luminance["vcd_lenslet"] = mean_value(rep.vcd_lenslet);
    rep.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

inline nlohmann::json path_stats_json(const VcdPath& p) {
    nlohmann::json j;
    j["iterations_used"] = p.iterations_used;
    j["converged"] = p.converged;
    j["emission_gain"] = p.emission_gain;
    j["target_scale"] = p.target_scale;
    j["margin_cells"] = p.plan.margin_cells;
    nlohmann::json finals = nlohmann::json::array();
    for (const auto& h : p.residual_history) finals.push_back(h.empty() ? 0.0 : h.back());
    j["final_residual"] = finals;
    return j;
}

inline nlohmann::json report_to_json(const ExperimentReport& rep) {
    nlohmann::json j;
    j["config"] = rep.resolved_config;
    j["psnr_defocused"] = rep.psnr_defocused;
    j["psnr_pinhole_vcd"] = rep.psnr_pinhole_vcd;
    j["psnr_lenslet_vcd"] = rep.psnr_lenslet_vcd;
    j["mean_luminance"] = rep.mean_luminance;
    j["solver"]["pinhole"] = path_stats_json(rep.pinhole_path);
    j["solver"]["lenslet"] = path_stats_json(rep.lenslet_path);
    j["wall_time_seconds"] = rep.wall_time_seconds;
    return j;
}

/// Sidecar metadata allowing a panel image to be re-simulated or extracted
/// standalone.
inline nlohmann::json panel_sidecar_json(const ExperimentConfig& cfg, const ArraySpec& array,
                                         const VcdPath& path) {
    nlohmann::json j;
    j["panel"]["ppi"] = path.plan.panel.ppi;
    j["panel"]["cols"] = path.plan.panel.cols;
    j["panel"]["rows"] = path.plan.panel.rows;
    j["panel"]["emission_gain"] = path.emission_gain;
    j["array"]["type"] = is_lenslet(array) ? "lenslet" : "pinhole";
    j["array"]["pitch"] = array_pitch(array);
    j["array"]["gap"] = array_gap(array);
    if (is_lenslet(array)) {
        j["array"]["focal"] = std::get<LensletArraySpec>(array).focal;
        j["array"]["thickness"] = std::get<LensletArraySpec>(array).thickness;
    } else {
        const auto& ph = std::get<PinholeArraySpec>(array);
        j["array"]["aperture"] = ph.aperture;
        j["array"]["aperture_shape"] = ph.shape == ApertureShape::square ? "square" : "disc";
    }
    j["lightfield"]["n_x"] = path.plan.grid.n_x;
    j["lightfield"]["n_y"] = path.plan.grid.n_y;
    j["lightfield"]["n_u"] = path.plan.grid.n_u;
    j["lightfield"]["n_v"] = path.plan.grid.n_v;
    j["lightfield"]["spatial_pitch"] = path.plan.grid.spatial_pitch;
    j["lightfield"]["angular_step"] = path.plan.grid.angular_step;
    j["scene"]["display_distance"] = cfg.display_distance;
    j["scene"]["retina_extent"] = path.plan.geometry.retina_extent;
    j["target_scale"] = path.target_scale;
    return j;
}

}  // namespace vcd
