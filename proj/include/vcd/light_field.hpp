#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/image.hpp"

namespace vcd {

/// Two-plane light field L(x, y, u, v): (x, y) sample a spatial plane at
/// `spatial_pitch` meters per sample, (u, v) sample a pupil-plane window of
/// full width `angular_extent` meters. Values live in [0,1].
///
/// Storage order: spatial row j, spatial column i, angular row b, angular
/// column a, channel. The per-channel flat index used by the prefilter
/// operator is ((j*n_x + i)*n_v + b)*n_u + a.
struct LightField4D {
    int n_x = 1, n_y = 1;
    int n_u = 1, n_v = 1;
    double spatial_pitch = 1e-4;
    double angular_extent = 1e-3;
    int channels = 1;
    std::vector<double> radiance;

    LightField4D() = default;
    LightField4D(int nx, int ny, int nu, int nv, double pitch, double extent, int ch)
        : n_x(nx), n_y(ny), n_u(nu), n_v(nv), spatial_pitch(pitch), angular_extent(extent),
          channels(ch) {
        if (nx < 1 || ny < 1 || nu < 1 || nv < 1)
            throw NumericError("light field sample counts must be >= 1");
        if (!(pitch > 0.0) || !(extent > 0.0))
            throw NumericError("light field pitch and angular extent must be positive");
        if (ch != 1 && ch != 3) throw NumericError("light field channels must be 1 or 3");
        radiance.assign(static_cast<std::size_t>(nx) * ny * nu * nv * ch, 0.0);
    }

    std::size_t sample_index(int i, int j, int a, int b) const {
        return ((static_cast<std::size_t>(j) * n_x + i) * n_v + b) * n_u + a;
    }
    double& at(int i, int j, int a, int b, int ch = 0) {
        return radiance[sample_index(i, j, a, b) * channels + ch];
    }
    double at(int i, int j, int a, int b, int ch = 0) const {
        return radiance[sample_index(i, j, a, b) * channels + ch];
    }
    std::size_t samples_per_channel() const {
        return static_cast<std::size_t>(n_x) * n_y * n_u * n_v;
    }

    bool values_in_unit_range(double tol = 0.0) const {
        for (double v : radiance)
            if (!(v >= -tol && v <= 1.0 + tol)) return false;
        return true;
    }
};

/// Lays the field out as an n_u x n_v grid of n_x x n_y spatial slices:
/// tile (a, b) holds the spatial image of angular sample (a, b).
inline Image light_field_to_tiled_image(const LightField4D& lf) {
    Image img(lf.n_u * lf.n_x, lf.n_v * lf.n_y, lf.channels);
    for (int b = 0; b < lf.n_v; ++b)
        for (int a = 0; a < lf.n_u; ++a)
            for (int j = 0; j < lf.n_y; ++j)
                for (int i = 0; i < lf.n_x; ++i)
                    for (int ch = 0; ch < lf.channels; ++ch)
                        img.at(b * lf.n_y + j, a * lf.n_x + i, ch) = lf.at(i, j, a, b, ch);
    return img;
}

inline LightField4D light_field_from_tiled_image(const Image& img, int n_u, int n_v,
                                                 double spatial_pitch, double angular_extent) {
    if (n_u < 1 || n_v < 1 || img.width % n_u != 0 || img.height % n_v != 0)
        throw NumericError("tiled image dimensions are not divisible by the angular grid");
    LightField4D lf(img.width / n_u, img.height / n_v, n_u, n_v, spatial_pitch, angular_extent,
                    img.channels);
    for (int b = 0; b < lf.n_v; ++b)
        for (int a = 0; a < lf.n_u; ++a)
            for (int j = 0; j < lf.n_y; ++j)
                for (int i = 0; i < lf.n_x; ++i)
                    for (int ch = 0; ch < lf.channels; ++ch)
                        lf.at(i, j, a, b, ch) = img.at(b * lf.n_y + j, a * lf.n_x + i, ch);
    return lf;
}

}  // namespace vcd
