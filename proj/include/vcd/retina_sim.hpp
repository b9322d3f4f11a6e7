#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/forward_model.hpp"
#include "vcd/image.hpp"
#include "vcd/panel.hpp"
#include "vcd/sampling.hpp"
#include "vcd/util.hpp"

namespace vcd {

/// Scene for the backward ray tracer: an LCD panel, an optional pinhole or
/// lenslet sheet `array_distance` meters from the pupil (the panel sits one
/// array gap behind it; with no array the panel is at array_distance), and a
/// thin-lens eye.
struct OpticalBench {
    Image panel_image;
    PanelSpec panel;
    std::optional<ArraySpec> array;
    double array_distance = 0.25;
    EyeModel eye;
    int retina_cols = 64;
    int retina_rows = 64;
    double retina_extent = 1e-3;
    std::uint64_t rng_seed = 0;

    double gap() const { return array ? array_gap(*array) : 0.0; }
    double panel_distance() const { return array_distance + gap(); }
    double retina_extent_y() const {
        return retina_extent * static_cast<double>(retina_rows) / retina_cols;
    }

    void validate() const {
        panel.validate();
        if (array) std::visit([](const auto& s) { s.validate(); }, *array);
        if (!(array_distance > 0.0)) throw NumericError("bench: array distance must be positive");
        if (retina_cols < 1 || retina_rows < 1) throw NumericError("bench: retina resolution");
        if (!(retina_extent > 0.0)) throw NumericError("bench: retina extent must be positive");
        if (panel_image.width < 1 || panel_image.height < 1)
            throw NumericError("bench: empty panel image");
    }
};

struct RenderSettings {
    int samples_per_pixel = 64;
    bool stratified = true;
    /// When positive, pupil points come from the fixed aperture grid used by
    /// the matrix forward model instead of stochastic disc sampling.
    int pupil_grid_u = 0;
    int pupil_grid_v = 0;
    int threads = 0;

    void validate() const {
        if (samples_per_pixel < 1) throw NumericError("render: samples_per_pixel must be >= 1");
    }
};

namespace detail {

/// Bilinear panel lookup at a physical point on the panel plane. The raster
/// is centered on the optical axis; points past the pixel-center hull read
/// as dark.
inline double panel_radiance(const Image& img, double pixel_pitch, double x, double y, int ch) {
    double fc = x / pixel_pitch + (img.width - 1) / 2.0;
    double fr = y / pixel_pitch + (img.height - 1) / 2.0;
    if (fc < 0.0 || fc > img.width - 1 || fr < 0.0 || fr > img.height - 1) return 0.0;
    int c0 = static_cast<int>(fc);
    int r0 = static_cast<int>(fr);
    int c1 = std::min(c0 + 1, img.width - 1);
    int r1 = std::min(r0 + 1, img.height - 1);
    double dc = fc - c0;
    double dr = fr - r0;
    return img.at(r0, c0, ch) * (1 - dc) * (1 - dr) + img.at(r0, c1, ch) * dc * (1 - dr) +
           img.at(r1, c0, ch) * (1 - dc) * dr + img.at(r1, c1, ch) * dc * dr;
}

/// Center of the array cell containing a hit point. Cells are anchored to
/// the panel raster: cell (0,0) is centered over the panel's first k x k
/// pixel block.
inline double cell_center(double hit, double pixel_pitch, int pixels_per_cell, int panel_px) {
    double half = (panel_px - 1) / 2.0;
    double block = (hit / pixel_pitch + half - (pixels_per_cell - 1) / 2.0) / pixels_per_cell;
    double idx = std::round(block);
    return (idx * pixels_per_cell + (pixels_per_cell - 1) / 2.0 - half) * pixel_pitch;
}

}  // namespace detail

/// Backward ray trace of the bench. Per retinal pixel: sample the pupil,
/// refract at the eye lens, propagate to the array plane, interact with the
/// optional array (pinhole mask passes or discards; lenslet deflects by its
/// local thin lens), propagate the gap, and sample the panel bilinearly
/// times the emission gain. Blocked rays contribute zero; the pixel is the
/// mean over all samples, clamped to [0,1] unless `clamp` is false.
///
/// Identical seed and settings give bit-identical images for any thread
/// count: every pixel derives its own sample stream from (seed, pixel).
inline Image render(const OpticalBench& bench, const RenderSettings& settings, bool clamp = true) {
    bench.validate();
    settings.validate();

    const double d_e = bench.eye.retina_depth;
    const double f_eye = bench.eye.focal_length();
    const double d_o = bench.array_distance;
    const double gap = bench.gap();
    const double pp = bench.panel.pixel_pitch();
    const double extent_x = bench.retina_extent;
    const double extent_y = bench.retina_extent_y();
    const int channels = bench.panel_image.channels;

    const bool use_grid = settings.pupil_grid_u > 0 && settings.pupil_grid_v > 0;
    std::vector<std::pair<double, double>> grid_points;
    if (use_grid)
        grid_points = pupil_grid(bench.eye, settings.pupil_grid_u, settings.pupil_grid_v);

    int k = 0;
    double pitch = 0.0;
    if (bench.array) {
        pitch = array_pitch(*bench.array);
        k = angular_count(pitch, pp);
    }

    Image out(bench.retina_cols, bench.retina_rows, channels);
    const std::size_t n_px = static_cast<std::size_t>(bench.retina_cols) * bench.retina_rows;
    parallel_for(n_px, [&](std::size_t px) {
        const int r = static_cast<int>(px) / bench.retina_cols;
        const int c = static_cast<int>(px) % bench.retina_cols;
        const double x_ret = retina_coord(c, bench.retina_cols, extent_x);
        const double y_ret = retina_coord(r, bench.retina_rows, extent_y);

        std::vector<std::pair<double, double>> samples;
        if (use_grid) {
            samples = grid_points;
        } else {
            Pcg32 rng(bench.rng_seed, px);
            samples = disc_samples(rng, settings.samples_per_pixel, bench.eye.pupil_diameter,
                                   settings.stratified);
        }
        if (samples.empty()) return;

        double acc[3] = {0.0, 0.0, 0.0};
        for (const auto& [pu, pv] : samples) {
            // backward slope toward the scene, then across the eye lens
            double mx = (pu - x_ret) / d_e - pu / f_eye;
            double my = (pv - y_ret) / d_e - pv / f_eye;
            double hx = pu + d_o * mx;
            double hy = pv + d_o * my;
            double panel_x = hx;
            double panel_y = hy;
            if (bench.array) {
                double cx = detail::cell_center(hx, pp, k, bench.panel_image.width);
                double cy = detail::cell_center(hy, pp, k, bench.panel_image.height);
                if (!is_lenslet(*bench.array)) {
                    const auto& ph = std::get<PinholeArraySpec>(*bench.array);
                    double dx = hx - cx;
                    double dy = hy - cy;
                    bool pass = ph.shape == ApertureShape::square
                                    ? std::abs(dx) <= ph.aperture / 2.0 &&
                                          std::abs(dy) <= ph.aperture / 2.0
                                    : dx * dx + dy * dy <= (ph.aperture / 2.0) * (ph.aperture / 2.0);
                    if (!pass) continue;  // blocked; still counted below
                    panel_x = hx + gap * mx;
                    panel_y = hy + gap * my;
                } else {
                    const auto& ls = std::get<LensletArraySpec>(*bench.array);
                    double m2x = mx - (hx - cx) / ls.focal;
                    double m2y = my - (hy - cy) / ls.focal;
                    panel_x = hx + gap * m2x;
                    panel_y = hy + gap * m2y;
                }
            }
            for (int ch = 0; ch < channels; ++ch)
                acc[ch] += detail::panel_radiance(bench.panel_image, pp, panel_x, panel_y, ch) *
                           bench.panel.emission_gain;
        }
        const double inv = 1.0 / static_cast<double>(samples.size());
        for (int ch = 0; ch < channels; ++ch) {
            double v = acc[ch] * inv;
            out.at(r, c, ch) = clamp ? std::clamp(v, 0.0, 1.0) : v;
        }
    }, settings.threads);
    return out;
}

}  // namespace vcd
