#include "mmal/perlin.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mmal/rng.hpp"

namespace mmal {

namespace {

inline double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

// Unit gradient at a lattice corner, fully determined by (seed, xi, yi).
inline void lattice_gradient(std::uint64_t seed, std::int64_t xi, std::int64_t yi, double& gx,
                             double& gy) {
    const std::uint64_t h =
        hash_mix(hash_mix(seed, static_cast<std::uint64_t>(xi)), static_cast<std::uint64_t>(yi));
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(h >> 11) * 0x1.0p-53);
    gx = std::cos(angle);
    gy = std::sin(angle);
}

} // namespace

double perlin_octave(double u, double v, std::uint64_t seed) {
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const auto x0 = static_cast<std::int64_t>(fu);
    const auto y0 = static_cast<std::int64_t>(fv);
    const double tx = u - fu;
    const double ty = v - fv;

    double g00x, g00y, g10x, g10y, g01x, g01y, g11x, g11y;
    lattice_gradient(seed, x0, y0, g00x, g00y);
    lattice_gradient(seed, x0 + 1, y0, g10x, g10y);
    lattice_gradient(seed, x0, y0 + 1, g01x, g01y);
    lattice_gradient(seed, x0 + 1, y0 + 1, g11x, g11y);

    const double n00 = g00x * tx + g00y * ty;
    const double n10 = g10x * (tx - 1.0) + g10y * ty;
    const double n01 = g01x * tx + g01y * (ty - 1.0);
    const double n11 = g11x * (tx - 1.0) + g11y * (ty - 1.0);

    const double sx = fade(tx);
    const double sy = fade(ty);
    return lerp(lerp(n00, n10, sx), lerp(n01, n11, sx), sy);
}

std::vector<float> perlin_field(int w, int h, double frequency, int octaves, std::uint64_t seed) {
    if (w < 1 || h < 1) throw std::invalid_argument("perlin_field: extents must be >= 1");
    if (frequency <= 0.0) throw std::invalid_argument("perlin_field: frequency must be > 0");
    if (octaves < 1) throw std::invalid_argument("perlin_field: octaves must be >= 1");

    double total_amp = 0.0;
    for (int o = 0; o < octaves; ++o) total_amp += std::pow(0.5, o);

    // One octave of unit-gradient noise stays in [-sqrt(2)/2, sqrt(2)/2];
    // dividing by the summed amplitude keeps the octave mix there too, and
    // the sqrt(2) factor stretches the theoretical range to [-1, 1].
    const double norm = std::numbers::sqrt2 / total_amp;

    std::vector<float> field(static_cast<std::size_t>(w) * h);
#pragma omp parallel for schedule(static) if (w * h > 4096)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            double amp = 1.0;
            double freq = frequency;
            for (int o = 0; o < octaves; ++o) {
                const double u = static_cast<double>(x) * freq / static_cast<double>(w);
                const double v = static_cast<double>(y) * freq / static_cast<double>(h);
                acc += amp * perlin_octave(u, v, hash_mix(seed, static_cast<std::uint64_t>(o)));
                amp *= 0.5;
                freq *= 2.0;
            }
            field[static_cast<std::size_t>(y) * w + x] =
                static_cast<float>(std::clamp(acc * norm, -1.0, 1.0));
        }
    }
    return field;
}

} // namespace mmal
