#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace vcd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Small counter-free PCG32 stream. A fresh generator is derived per pixel
/// from (seed, pixel index), so sample sequences are independent of how
/// pixels are scheduled across threads.
class Pcg32 {
  public:
    Pcg32(std::uint64_t seed, std::uint64_t stream) {
        state_ = 0;
        inc_ = (splitmix64(stream) << 1u) | 1u;
        next_u32();
        state_ += splitmix64(seed);
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Uniform in [0, 1).
    double next_double() { return next_u32() * (1.0 / 4294967296.0); }

  private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

/// Concentric square-to-disc map (area preserving). Input in [0,1)^2,
/// output on the unit disc.
inline std::pair<double, double> square_to_disc(double sx, double sy) {
    double ox = 2.0 * sx - 1.0;
    double oy = 2.0 * sy - 1.0;
    if (ox == 0.0 && oy == 0.0) return {0.0, 0.0};
    double r, theta;
    if (std::abs(ox) > std::abs(oy)) {
        r = ox;
        theta = (3.14159265358979323846 / 4.0) * (oy / ox);
    } else {
        r = oy;
        theta = (3.14159265358979323846 / 2.0) - (3.14159265358979323846 / 4.0) * (ox / oy);
    }
    return {r * std::cos(theta), r * std::sin(theta)};
}

/// Deterministic pupil sample positions for one pixel: `count` points on a
/// disc of the given diameter. The first g*g points (g = floor(sqrt(count)))
/// are jittered-stratified over the square before the concentric map; the
/// remainder are plain uniform draws from the same stream.
inline std::vector<std::pair<double, double>> disc_samples(Pcg32& rng, int count, double diameter,
                                                           bool stratified) {
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(count));
    double radius = diameter / 2.0;
    int g = stratified ? static_cast<int>(std::floor(std::sqrt(static_cast<double>(count)))) : 0;
    int emitted = 0;
    for (int sy = 0; sy < g; ++sy) {
        for (int sx = 0; sx < g; ++sx) {
            double ux = (sx + rng.next_double()) / g;
            double uy = (sy + rng.next_double()) / g;
            auto [dx, dy] = square_to_disc(ux, uy);
            out.emplace_back(dx * radius, dy * radius);
            ++emitted;
        }
    }
    for (; emitted < count; ++emitted) {
        auto [dx, dy] = square_to_disc(rng.next_double(), rng.next_double());
        out.emplace_back(dx * radius, dy * radius);
    }
    return out;
}

}  // namespace vcd
