#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vcd/errors.hpp"

namespace vcd {

/// Dense row-major raster, interleaved channels, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int ch, double fill = 0.0)
        : width(w), height(h), channels(ch),
          data(static_cast<std::size_t>(w) * h * ch, fill) {
        if (w < 1 || h < 1 || (ch != 1 && ch != 3))
            throw NumericError("image dimensions must be positive with 1 or 3 channels");
    }

    double& at(int row, int col, int ch = 0) {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch = 0) const {
        return data[(static_cast<std::size_t>(row) * width + col) * channels + ch];
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

inline void clamp01(Image& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

inline double mean_value(const Image& img) {
    double s = 0.0;
    for (double v : img.data) s += v;
    return img.data.empty() ? 0.0 : s / static_cast<double>(img.data.size());
}

/// Bilinear sample at a fractional pixel position (row/col units, pixel
/// centers at integers). Coordinates are clamped to the border.
inline double sample_bilinear_clamped(const Image& img, double frow, double fcol, int ch) {
    double fx = std::clamp(fcol, 0.0, static_cast<double>(img.width - 1));
    double fy = std::clamp(frow, 0.0, static_cast<double>(img.height - 1));
    int c0 = static_cast<int>(fx);
    int r0 = static_cast<int>(fy);
    int c1 = std::min(c0 + 1, img.width - 1);
    int r1 = std::min(r0 + 1, img.height - 1);
    double dc = fx - c0;
    double dr = fy - r0;
    return img.at(r0, c0, ch) * (1 - dc) * (1 - dr) + img.at(r0, c1, ch) * dc * (1 - dr) +
           img.at(r1, c0, ch) * (1 - dc) * dr + img.at(r1, c1, ch) * dc * dr;
}

/// Resample to a new resolution. Pixel (r,c) of the output takes the input
/// value at the same normalized position (pixel centers mapped to centers).
inline Image resample_bilinear(const Image& img, int w, int h) {
    Image out(w, h, img.channels);
    for (int r = 0; r < h; ++r) {
        double fr = (r + 0.5) / h * img.height - 0.5;
        for (int c = 0; c < w; ++c) {
            double fc = (c + 0.5) / w * img.width - 0.5;
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = sample_bilinear_clamped(img, fr, fc, ch);
        }
    }
    return out;
}

/// Translate by a (possibly fractional) pixel offset; exposed content slides
/// in as zero.
inline Image shift_image(const Image& img, double dx_px, double dy_px) {
    Image out(img.width, img.height, img.channels);
    for (int r = 0; r < img.height; ++r) {
        double sr = r - dy_px;
        for (int c = 0; c < img.width; ++c) {
            double sc = c - dx_px;
            if (sr < -0.5 || sr > img.height - 0.5 || sc < -0.5 || sc > img.width - 0.5) continue;
            for (int ch = 0; ch < img.channels; ++ch)
                out.at(r, c, ch) = sample_bilinear_clamped(img, sr, sc, ch);
        }
    }
    return out;
}

inline double mse_clamped(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw NumericError("psnr: image shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = std::clamp(a.data[i], 0.0, 1.0) - std::clamp(b.data[i], 0.0, 1.0);
        s += d * d;
    }
    return s / static_cast<double>(a.data.size());
}

/// Peak signal-to-noise ratio in dB over unit dynamic range; inputs are
/// clamped to [0,1] first. Identical images report the 99 dB cap.
inline double psnr(const Image& a, const Image& b) {
    double m = mse_clamped(a, b);
    if (m <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / m));
}

/// Synthetic test subject: smooth bivariate shading with a soft checker
/// overlay and one high-contrast bar group. Used as the default source when
/// no image is supplied.
inline Image make_test_chart(int size, int channels = 1) {
    Image img(size, size, channels);
    const double pi = 3.14159265358979323846;
    for (int r = 0; r < size; ++r) {
        double v = (r + 0.5) / size;
        for (int c = 0; c < size; ++c) {
            double u = (c + 0.5) / size;
            double base = 0.5 + 0.35 * std::sin(2 * pi * u * 2.0) * std::cos(2 * pi * v * 3.0);
            int checker = ((c / std::max(1, size / 6)) + (r / std::max(1, size / 6))) % 2;
            double val = checker == 0 ? base * 0.55 : base;
            val += 0.1;
            if (std::abs(v - 0.14) < 0.07 && std::abs(u - 0.5) < 0.32 &&
                (static_cast<int>(std::floor(u * 16.0)) % 2 == 0))
                val += 0.35;
            val = std::clamp(val, 0.02, 0.98);
            for (int ch = 0; ch < channels; ++ch) {
                double tint = channels == 3 ? 1.0 - 0.12 * ch * u : 1.0;
                img.at(r, c, ch) = std::clamp(val * tint, 0.02, 0.98);
            }
        }
    }
    return img;
}

}  // namespace vcd
