#pragma once

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "vcd/errors.hpp"
#include "vcd/image.hpp"

namespace vcd {

namespace detail {
struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

/// Reads an 8- or 16-bit PNG as grayscale or RGB with values scaled to
/// [0,1]. Palette images are expanded; alpha is dropped.
inline Image read_png(const std::string& path) {
    detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open PNG for reading: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng read init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // stored big-endian
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    int ch = png_get_channels(png, info);
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG channel count in " + path);
    }

    std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> raw(row_bytes * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 r = 0; r < h; ++r) rows[r] = raw.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(w), static_cast<int>(h), ch);
    const std::size_t count = static_cast<std::size_t>(w) * h * ch;
    if (bit_depth == 16) {
        const auto* p = reinterpret_cast<const std::uint16_t*>(raw.data());
        for (std::size_t i = 0; i < count; ++i) img.data[i] = p[i] / 65535.0;
    } else {
        for (std::size_t i = 0; i < count; ++i) img.data[i] = raw[i] / 255.0;
    }
    return img;
}

/// Writes grayscale or RGB PNG at 8 or 16 bits. Values are clamped to [0,1]
/// and rounded; encoding settings are fixed so equal images produce
/// byte-identical files.
inline void write_png(const std::string& path, const Image& img, int bit_depth = 8) {
    if (bit_depth != 8 && bit_depth != 16) throw IoError("PNG bit depth must be 8 or 16");
    detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open PNG for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng write init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng info init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width, img.height, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    const std::size_t px = static_cast<std::size_t>(img.width) * img.channels;
    if (bit_depth == 16) {
        std::vector<std::uint16_t> row(px);
        for (int r = 0; r < img.height; ++r) {
            for (std::size_t i = 0; i < px; ++i) {
                double v = std::clamp(img.data[r * px + i], 0.0, 1.0);
                row[i] = static_cast<std::uint16_t>(v * 65535.0 + 0.5);
            }
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
    } else {
        std::vector<unsigned char> row(px);
        for (int r = 0; r < img.height; ++r) {
            for (std::size_t i = 0; i < px; ++i) {
                double v = std::clamp(img.data[r * px + i], 0.0, 1.0);
                row[i] = static_cast<unsigned char>(v * 255.0 + 0.5);
            }
            png_write_row(png, row.data());
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace vcd
