#pragma once

#include <cstdint>
#include <vector>

namespace mmal {

// Classic 2D gradient noise, w x h cells sampled at (x*frequency/w,
// y*frequency/h). Octaves are summed with halved amplitude and re-scaled so
// the theoretical range is [-1, 1]; lattice points of a single octave are
// exactly 0. Deterministic in (seed, arguments).
std::vector<float> perlin_field(int w, int h, double frequency, int octaves, std::uint64_t seed);

// Value of one octave at continuous noise coordinates (u, v). Exposed for
// tests; range is [-sqrt(2)/2, sqrt(2)/2].
double perlin_octave(double u, double v, std::uint64_t seed);

} // namespace mmal
