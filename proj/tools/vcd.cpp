// Command-line front end: prefilter / simulate / pipeline / metrics.
// Exit codes: 0 success, 1 configuration error, 2 runtime or numeric error,
// 3 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vcd/config.hpp"
#include "vcd/experiment.hpp"
#include "vcd/image.hpp"
#include "vcd/light_field.hpp"
#include "vcd/panel.hpp"
#include "vcd/png_io.hpp"
#include "vcd/retina_sim.hpp"
#include "vcd/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string preset;
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir = "out";
    std::string source;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_source = true) {
    cmd->add_option("--preset", args.preset,
                    "hyperopic | myopic-literal | myopic-consistent | infocus");
    cmd->add_option("--config", args.config_path, "configuration file (key = value lines)");
    cmd->add_option("--set", args.sets, "override single keys, e.g. --set solver.tolerance=1e-5");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "render seed override");
    if (with_source) cmd->add_option("--source", args.source, "source image (PNG)");
}

vcd::ExperimentConfig resolve_config(const CommonArgs& args, vcd::ConfigMap* out_map = nullptr) {
    vcd::ConfigMap map;
    if (!args.preset.empty())
        for (const auto& [k, v] : vcd::preset_overrides(args.preset)) map[k] = v;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw vcd::IoError("cannot read config file: " + args.config_path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        for (const auto& [k, v] : vcd::parse_config_text(text)) map[k] = v;
    }
    for (const auto& kv : args.sets) {
        auto parsed = vcd::parse_config_text(kv);
        for (const auto& [k, v] : parsed) map[k] = v;
    }
    if (!args.source.empty()) map["source"] = args.source;
    if (args.seed) map["seed"] = std::to_string(*args.seed);
    vcd::ExperimentConfig cfg = vcd::config_from_map(map);
    if (out_map) *out_map = vcd::config_to_map(cfg);
    return cfg;
}

vcd::Image load_source(const vcd::ExperimentConfig& cfg) {
    if (cfg.source.empty()) return vcd::make_test_chart(128);
    return vcd::read_png(cfg.source);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw vcd::IoError("cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const vcd::ConfigMap& resolved) {
    json j;
    j["command"] = command;
    j["config"] = resolved;
    write_text(dir / "manifest.json", j.dump(2) + "\n");
    write_text(dir / "resolved_config.cfg", vcd::serialize_config(resolved));
}

vcd::ArraySpec array_from_config(const vcd::ExperimentConfig& cfg) {
    if (cfg.array_type == vcd::ArrayType::lenslet) return vcd::ArraySpec{cfg.lenslet()};
    if (cfg.array_type == vcd::ArrayType::pinhole) return vcd::ArraySpec{cfg.pinhole()};
    throw vcd::ConfigError("array.type: this command needs a pinhole or lenslet array");
}

json light_field_dims_json(const vcd::LightFieldGrid& grid, int channels) {
    json j;
    j["n_x"] = grid.n_x;
    j["n_y"] = grid.n_y;
    j["n_u"] = grid.n_u;
    j["n_v"] = grid.n_v;
    j["spatial_pitch"] = grid.spatial_pitch;
    j["angular_step"] = grid.angular_step;
    j["angular_extent"] = grid.angular_extent();
    j["channels"] = channels;
    return j;
}

int cmd_prefilter(const CommonArgs& args) {
    vcd::ConfigMap resolved;
    vcd::ExperimentConfig cfg = resolve_config(args, &resolved);
    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "prefilter", resolved);

    vcd::Image source = load_source(cfg);
    vcd::Image target = vcd::resample_bilinear(source, cfg.retina_cols, cfg.retina_rows);
    vcd::ArraySpec array = array_from_config(cfg);
    vcd::VcdPath path = vcd::build_vcd_path(cfg, array, target);

    fs::path dir(args.out_dir);
    vcd::write_png((dir / "light_field.png").string(),
                   vcd::light_field_to_tiled_image(path.light_field), 16);
    write_text(dir / "light_field.json",
               light_field_dims_json(path.plan.grid, path.light_field.channels).dump(2) + "\n");
    vcd::write_png((dir / "panel.png").string(), path.panel_image, 16);
    write_text(dir / "panel.json", vcd::panel_sidecar_json(cfg, array, path).dump(2) + "\n");

    vcd::PrefilterResult history;
    history.residual_history = path.residual_history;
    std::ostringstream csv;
    vcd::write_residual_csv(history, csv);
    write_text(dir / "residuals.csv", csv.str());

    std::cout << "prefilter: " << path.iterations_used << " iterations, "
              << (path.converged ? "converged" : "iteration limit") << "\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args, const std::string& panel_path,
                 const std::string& sidecar_path) {
    vcd::ConfigMap resolved;
    vcd::ExperimentConfig cfg = resolve_config(args, &resolved);
    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "simulate", resolved);
    fs::path dir(args.out_dir);

    vcd::OpticalBench bench;
    bench.eye = cfg.eye();
    bench.retina_cols = cfg.retina_cols;
    bench.retina_rows = cfg.retina_rows;
    bench.rng_seed = cfg.seed;
    bench.array_distance = cfg.display_distance;
    bench.panel_image = vcd::read_png(panel_path);
    bench.panel.ppi = cfg.panel_ppi;
    bench.panel.cols = bench.panel_image.width;
    bench.panel.rows = bench.panel_image.height;

    std::string sidecar = sidecar_path;
    if (sidecar.empty()) {
        fs::path guess = fs::path(panel_path).replace_extension(".json");
        if (fs::exists(guess)) sidecar = guess.string();
    }
    double retina_extent = cfg.retina_extent;
    if (!sidecar.empty()) {
        std::ifstream in(sidecar);
        if (!in) throw vcd::IoError("cannot read sidecar: " + sidecar);
        json j = json::parse(in, nullptr, true, true);
        bench.panel.ppi = j["panel"].value("ppi", bench.panel.ppi);
        bench.panel.emission_gain = j["panel"].value("emission_gain", 1.0);
        std::string type = j["array"].value("type", "none");
        if (type == "pinhole") {
            vcd::PinholeArraySpec ph;
            ph.pitch = j["array"].value("pitch", ph.pitch);
            ph.aperture = j["array"].value("aperture", ph.aperture);
            ph.gap = j["array"].value("gap", ph.gap);
            ph.shape = j["array"].value("aperture_shape", "square") == std::string("disc")
                           ? vcd::ApertureShape::disc
                           : vcd::ApertureShape::square;
            bench.array = vcd::ArraySpec{ph};
        } else if (type == "lenslet") {
            vcd::LensletArraySpec ls;
            ls.pitch = j["array"].value("pitch", ls.pitch);
            ls.focal = j["array"].value("focal", ls.focal);
            bench.array = vcd::ArraySpec{ls};
        }
        bench.array_distance = j["scene"].value("display_distance", bench.array_distance);
        retina_extent = j["scene"].value("retina_extent", retina_extent);
    } else if (cfg.array_type != vcd::ArrayType::none) {
        bench.array = array_from_config(cfg);
        if (cfg.emission_gain > 0.0)
            bench.panel.emission_gain = cfg.emission_gain;
        else
            bench.panel.emission_gain = vcd::auto_emission_gain(cfg, *bench.array);
    }
    if (cfg.emission_gain > 0.0) bench.panel.emission_gain = cfg.emission_gain;
    if (retina_extent <= 0.0) {
        // Map the whole panel through the chief-ray magnification.
        retina_extent = bench.panel_image.width * bench.panel.pixel_pitch() *
                        cfg.eye_retina_depth / cfg.display_distance;
    }
    bench.retina_extent = retina_extent;

    vcd::RenderSettings rs;
    rs.samples_per_pixel = cfg.render_samples;
    rs.stratified = cfg.render_stratified;
    rs.threads = cfg.threads;
    vcd::Image retina = vcd::render(bench, rs);
    vcd::write_png((dir / "retina.png").string(), retina, 16);

    json rep;
    rep["mean_luminance"] = vcd::mean_value(retina);
    rep["panel"] = panel_path;
    if (!cfg.source.empty()) {
        vcd::Image ref = vcd::resample_bilinear(vcd::read_png(cfg.source), cfg.retina_cols,
                                                cfg.retina_rows);
        rep["psnr_db"] = vcd::psnr(retina, ref);
    }
    write_text(dir / "report.json", rep.dump(2) + "\n");
    std::cout << "simulate: wrote " << (dir / "retina.png").string() << "\n";
    return 0;
}

int cmd_pipeline(const CommonArgs& args) {
    vcd::ConfigMap resolved;
    vcd::ExperimentConfig cfg = resolve_config(args, &resolved);
    fs::create_directories(args.out_dir);
    write_manifest(args.out_dir, "pipeline", resolved);
    fs::path dir(args.out_dir);

    vcd::Image source = load_source(cfg);
    vcd::ExperimentReport rep = vcd::run_experiment(cfg, source);

    vcd::write_png((dir / "source.png").string(), rep.source_reference, 16);
    vcd::write_png((dir / "defocused.png").string(), rep.defocused, 16);
    vcd::write_png((dir / "vcd_pinhole.png").string(), rep.vcd_pinhole, 16);
    vcd::write_png((dir / "vcd_lenslet.png").string(), rep.vcd_lenslet, 16);
    vcd::write_png((dir / "panel_pinhole.png").string(), rep.pinhole_path.panel_image, 16);
    vcd::write_png((dir / "panel_lenslet.png").string(), rep.lenslet_path.panel_image, 16);
    write_text(dir / "panel_pinhole.json",
               vcd::panel_sidecar_json(cfg, vcd::ArraySpec{cfg.pinhole()}, rep.pinhole_path)
                       .dump(2) +
                   "\n");
    write_text(dir / "panel_lenslet.json",
               vcd::panel_sidecar_json(cfg, vcd::ArraySpec{cfg.lenslet()}, rep.lenslet_path)
                       .dump(2) +
                   "\n");
    vcd::write_png((dir / "light_field_pinhole.png").string(),
                   vcd::light_field_to_tiled_image(rep.pinhole_path.light_field), 16);
    vcd::write_png((dir / "light_field_lenslet.png").string(),
                   vcd::light_field_to_tiled_image(rep.lenslet_path.light_field), 16);
    for (const char* name : {"pinhole", "lenslet"}) {
        const vcd::VcdPath& p =
            std::string(name) == "pinhole" ? rep.pinhole_path : rep.lenslet_path;
        vcd::PrefilterResult h;
        h.residual_history = p.residual_history;
        std::ostringstream csv;
        vcd::write_residual_csv(h, csv);
        write_text(dir / (std::string("residuals_") + name + ".csv"), csv.str());
    }
    write_text(dir / "report.json", vcd::report_to_json(rep).dump(2) + "\n");

    std::cout << "pipeline: psnr_defocused=" << rep.psnr_defocused
              << " dB, psnr_pinhole_vcd=" << rep.psnr_pinhole_vcd
              << " dB, psnr_lenslet_vcd=" << rep.psnr_lenslet_vcd << " dB\n";
    return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
    vcd::Image a = vcd::read_png(a_path);
    vcd::Image b = vcd::read_png(b_path);
    double value = vcd::psnr(a, b);
    std::cout << "psnr_db=" << value << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vision-correcting display pipeline"};
    app.require_subcommand(1);

    CommonArgs pre_args, sim_args, pipe_args;
    std::string panel_path, sidecar_path, metrics_a, metrics_b;

    CLI::App* pre = app.add_subcommand(
        "prefilter", "solve the display light field and interlace the panel image");
    add_common(pre, pre_args);

    CLI::App* sim = app.add_subcommand("simulate", "ray-trace one bench from a panel image");
    add_common(sim, sim_args);
    sim->add_option("--panel", panel_path, "panel image (PNG)")->required();
    sim->add_option("--sidecar", sidecar_path, "panel metadata JSON (default: <panel>.json)");

    CLI::App* pipe = app.add_subcommand(
        "pipeline", "full run: prefilter, interlace and render all comparison images");
    add_common(pipe, pipe_args);

    CLI::App* met = app.add_subcommand("metrics", "PSNR between two images");
    met->add_option("a", metrics_a, "first image")->required();
    met->add_option("b", metrics_b, "second image")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (pre->parsed()) return cmd_prefilter(pre_args);
        if (sim->parsed()) return cmd_simulate(sim_args, panel_path, sidecar_path);
        if (pipe->parsed()) return cmd_pipeline(pipe_args);
        if (met->parsed()) return cmd_metrics(metrics_a, metrics_b);
    } catch (const vcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const vcd::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const vcd::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
