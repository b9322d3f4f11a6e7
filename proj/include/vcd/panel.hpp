#pragma once

#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/image.hpp"
#include "vcd/light_field.hpp"
#include "vcd/solver.hpp"

namespace vcd {

/// LCD description. Pixel pitch is derived from the pixel density.
struct PanelSpec {
    double ppi = 254.0;
    int cols = 0;
    int rows = 0;
    /// Multiplier applied to panel radiance at simulation time only.
    double emission_gain = 1.0;

    double pixel_pitch() const { return 0.0254 / ppi; }

    void validate() const {
        if (!(ppi > 0.0)) throw ConfigError("panel: ppi must be positive");
        if (!(emission_gain > 0.0)) throw ConfigError("panel: emission gain must be positive");
    }
};

enum class ApertureShape { square, disc };

struct PinholeArraySpec {
    double pitch = 500e-6;
    double aperture = 100e-6;
    double gap = 3e-3;
    ApertureShape shape = ApertureShape::square;

    double spatio_angular_ratio() const { return pitch / aperture; }

    void validate() const {
        if (!(aperture > 0.0) || !(aperture < pitch))
            throw ConfigError("pinhole array: need 0 < aperture < pitch");
        if (!(gap > 0.0)) throw ConfigError("pinhole array: gap must be positive");
    }
};

struct LensletArraySpec {
    double pitch = 500e-6;
    double focal = 3e-3;
    /// Recorded for documentation; the thin-lens model ignores thickness.
    double thickness = 1e-3;

    double gap() const { return focal; }  // sheet sits one focal length off the panel

    void validate() const {
        if (!(pitch > 0.0)) throw ConfigError("lenslet array: pitch must be positive");
        if (!(focal > 0.0)) throw ConfigError("lenslet array: focal must be positive");
    }
};

using ArraySpec = std::variant<PinholeArraySpec, LensletArraySpec>;

inline double array_pitch(const ArraySpec& a) {
    return std::visit([](const auto& s) { return s.pitch; }, a);
}
inline double array_gap(const ArraySpec& a) {
    if (std::holds_alternative<PinholeArraySpec>(a)) return std::get<PinholeArraySpec>(a).gap;
    return std::get<LensletArraySpec>(a).gap();
}
inline bool is_lenslet(const ArraySpec& a) { return std::holds_alternative<LensletArraySpec>(a); }

/// Panel pixels per array cell. The pitch must be a whole number of pixels
/// (within 1e-9 relative), otherwise the interlace mapping is undefined.
inline int angular_count(double arr_pitch, double pixel_pitch) {
    if (!(arr_pitch > 0.0) || !(pixel_pitch > 0.0))
        throw ConfigError("angular_count: pitches must be positive");
    double ratio = arr_pitch / pixel_pitch;
    double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
        throw MisalignedArrayError("array pitch " + std::to_string(arr_pitch) +
                                   " m is not a whole multiple of pixel pitch " +
                                   std::to_string(pixel_pitch) + " m (ratio " +
                                   std::to_string(ratio) + ")");
    return static_cast<int>(rounded);
}

/// Within-cell panel slot that carries angular index a. Pinhole cells store
/// the angular block directly; lenslet cells mirror it, since the sheet is
/// driven with the opposite angular orientation.
inline int cell_slot(int a, int k, const ArraySpec& array) {
    return is_lenslet(array) ? k - 1 - a : a;
}

/// Arranges light-field samples on the panel: the k x k pixels under cell
/// (i, j) hold that cell's angular block, at panel pixel
/// (i*k + slot_a, j*k + slot_b). Unused panel margin (right/bottom) is zero.
inline Image interlace(const LightField4D& lf, const ArraySpec& array, const PanelSpec& panel) {
    panel.validate();
    std::visit([](const auto& s) { s.validate(); }, array);
    const int k = angular_count(array_pitch(array), panel.pixel_pitch());
    if (lf.n_u != k || lf.n_v != k)
        throw NumericError("interlace: light field angular resolution " + std::to_string(lf.n_u) +
                           "x" + std::to_string(lf.n_v) + " does not match pixels per cell " +
                           std::to_string(k));
    const int need_c = lf.n_x * k;
    const int need_r = lf.n_y * k;
    const int out_c = panel.cols > 0 ? panel.cols : need_c;
    const int out_r = panel.rows > 0 ? panel.rows : need_r;
    if (out_c < need_c || out_r < need_r)
        throw NumericError("interlace: panel resolution too small for the light field");
    Image img(out_c, out_r, lf.channels);
    for (int j = 0; j < lf.n_y; ++j)
        for (int i = 0; i < lf.n_x; ++i)
            for (int b = 0; b < lf.n_v; ++b)
                for (int a = 0; a < lf.n_u; ++a)
                    for (int ch = 0; ch < lf.channels; ++ch)
                        img.at(j * k + cell_slot(b, k, array), i * k + cell_slot(a, k, array),
                               ch) = lf.at(i, j, a, b, ch);
    return img;
}

/// Exact inverse of `interlace` on its image. Panel dimensions must be whole
/// multiples of the pixels-per-cell count. The spatial pitch of the result
/// is the array pitch; the angular extent is nominal (pitch-per-gap slope
/// window) unless the caller overrides it.
inline LightField4D extract(const Image& panel_img, const ArraySpec& array, const PanelSpec& panel,
                            double angular_extent_override = 0.0) {
    const int k = angular_count(array_pitch(array), panel.pixel_pitch());
    if (panel_img.width % k != 0 || panel_img.height % k != 0)
        throw MisalignedArrayError("extract: panel dimensions are not divisible by " +
                                   std::to_string(k));
    const int n_x = panel_img.width / k;
    const int n_y = panel_img.height / k;
    double extent = angular_extent_override > 0.0
                        ? angular_extent_override
                        : k * panel.pixel_pitch() / array_gap(array);
    LightField4D lf(n_x, n_y, k, k, array_pitch(array), extent, panel_img.channels);
    for (int j = 0; j < n_y; ++j)
        for (int i = 0; i < n_x; ++i)
            for (int b = 0; b < k; ++b)
                for (int a = 0; a < k; ++a)
                    for (int ch = 0; ch < panel_img.channels; ++ch)
                        lf.at(i, j, a, b, ch) = panel_img.at(
                            j * k + cell_slot(b, k, array), i * k + cell_slot(a, k, array), ch);
    return lf;
}

/// Shift (in spatial cells) nominally served by each angular sample: one
/// cell per angular step off center. Sample (a, b) is assigned the listed
/// shift nearest to its nominal offset; ties go to the earlier list entry.
inline std::vector<int> nearest_shift_assignment(const std::vector<std::pair<int, int>>& shifts,
                                                 int n_u, int n_v) {
    if (shifts.empty()) throw ConfigError("shift set must not be empty");
    std::vector<int> pick(static_cast<std::size_t>(n_u) * n_v, 0);
    for (int b = 0; b < n_v; ++b) {
        double nominal_y = b - (n_v - 1) / 2.0;
        for (int a = 0; a < n_u; ++a) {
            double nominal_x = a - (n_u - 1) / 2.0;
            int best = 0;
            double best_d = 0.0;
            for (std::size_t s = 0; s < shifts.size(); ++s) {
                double dx = nominal_x - shifts[s].first;
                double dy = nominal_y - shifts[s].second;
                double d = dx * dx + dy * dy;
                if (s == 0 || d < best_d - 1e-12) {
                    best = static_cast<int>(s);
                    best_d = d;
                }
            }
            pick[static_cast<std::size_t>(b) * n_u + a] = best;
        }
    }
    return pick;
}

struct ShiftedSetResult {
    Image panel;
    LightField4D merged;
    std::vector<PrefilterResult> per_shift;
};

/// Viewing-angle robustness: each listed shift of the source is prefiltered
/// independently, the fields are merged by assigning every angular sample to
/// the shift it serves, and the merged field is interlaced.
///
/// Shifts are in spatial cells; the source shift is applied in retinal
/// pixels at the cell-to-pixel scale of the operator geometry.
inline ShiftedSetResult interlace_shifted_set(const Image& target,
                                              const std::vector<std::pair<int, int>>& shifts,
                                              const PrefilterMatrix& P, const ArraySpec& array,
                                              const PanelSpec& panel, const SolverOptions& opts) {
    if (shifts.empty()) throw ConfigError("shift set must not be empty");
    bool has_zero = false;
    for (const auto& s : shifts) has_zero = has_zero || (s.first == 0 && s.second == 0);
    if (!has_zero) throw ConfigError("shift set must include (0,0)");

    const LightFieldGrid& grid = P.grid();
    const double px_per_cell_x = static_cast<double>(target.width) / grid.n_x;
    const double px_per_cell_y = static_cast<double>(target.height) / grid.n_y;

    ShiftedSetResult out;
    out.per_shift.reserve(shifts.size());
    for (const auto& [dx, dy] : shifts) {
        Image shifted = (dx == 0 && dy == 0)
                            ? target
                            : shift_image(target, dx * px_per_cell_x, dy * px_per_cell_y);
        out.per_shift.push_back(solve_prefilter(P, shifted, opts));
    }

    const auto pick = nearest_shift_assignment(shifts, grid.n_u, grid.n_v);
    out.merged = grid.make_field(target.channels);
    for (int b = 0; b < grid.n_v; ++b)
        for (int a = 0; a < grid.n_u; ++a) {
            const LightField4D& src =
                out.per_shift[pick[static_cast<std::size_t>(b) * grid.n_u + a]].light_field;
            for (int j = 0; j < grid.n_y; ++j)
                for (int i = 0; i < grid.n_x; ++i)
                    for (int ch = 0; ch < target.channels; ++ch)
                        out.merged.at(i, j, a, b, ch) = src.at(i, j, a, b, ch);
        }
    out.panel = interlace(out.merged, array, panel);
    return out;
}

}  // namespace vcd
