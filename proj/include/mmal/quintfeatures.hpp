#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmal/rng.hpp"

namespace mmal {

inline constexpr int kNumManifestations = 10;

// Factor tables. Index order is the canonical id order used everywhere in
// manifests and label encodings.
extern const std::array<const char*, 10> kShapeNames;
extern const std::array<const char*, 10> kColorNames;
extern const std::array<const char*, 10> kTextureNames;

int shape_id_from_name(const std::string& name);
int color_id_from_name(const std::string& name);
int texture_id_from_name(const std::string& name);

// Latent description of one generated image.
struct QuintSpec {
    int shape_id = 0;
    int fg_color_id = 0;
    int fg_texture_id = 0;
    int bg_color_id = 1;
    int bg_texture_id = 1;
    std::uint64_t erosion_seed = 0;
    std::uint64_t jitter_seed = 0;

    void validate() const;
};

struct ErosionConfig {
    double frequency = 4.0; // cycles per canvas
    int octaves = 2;
    // tau in (-1,1); pixels with field < tau are erased. The field is
    // symmetric around 0, so -0.25 erases roughly a quarter of the
    // foreground; positive thresholds erase the majority of it.
    double threshold = -0.25;
};

struct GenConfig {
    int canvas = 64;
    std::uint64_t seed = 0;
    ErosionConfig erosion;

    void validate() const;
};

struct QuintImage {
    int canvas = 0;
    std::vector<std::uint8_t> pixels; // canvas*canvas*3, RGB row-major
    QuintSpec spec;
};

struct Rgb {
    std::uint8_t r, g, b;
};

// Factor constraints for sample_spec. A factor is free (-1) or fixed to a
// value; tying a factor to another spec is expressed by fixing it to that
// spec's value.
struct SpecConstraints {
    int shape = -1;
    int fg_color = -1;
    int fg_texture = -1;
    int bg_color = -1;
    int bg_texture = -1;

    static SpecConstraints free_all() { return {}; }
    SpecConstraints& tie_shape(const QuintSpec& other) {
        shape = other.shape_id;
        return *this;
    }
};

// Ten HSV anchor colors (hue 36*k degrees) with hue jitter of +/-9 degrees
// and saturation/value in [0.7, 1.0]. jitter_seed == 0 returns the anchor
// exactly. Distinct classes keep >= 18 degrees of circular hue separation.
Rgb jitter_color(int color_id, std::uint64_t jitter_seed);

Rgb hsv_to_rgb(double hue_deg, double sat, double val);
double rgb_hue_deg(Rgb c);

// Uniform spec draw subject to constraints and the fg != bg invariants.
QuintSpec sample_spec(const SpecConstraints& constraints, Rng& rng);

// Shape silhouette before erosion; one byte per pixel, 1 = foreground.
std::vector<std::uint8_t> rasterize_mask(const QuintSpec& spec, const GenConfig& cfg);

// mask AND (field >= tau); only ever removes pixels.
std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& mask,
                                const std::vector<float>& field, double tau);

QuintImage render(const QuintSpec& spec, const GenConfig& cfg);

} // namespace mmal
