#include "mmal/quintfeatures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mmal/perlin.hpp"

namespace mmal {

const std::array<const char*, 10> kShapeNames = {"circle",  "square",  "star",   "triangle",
                                                 "pentagon", "hexagon", "diamond", "cross",
                                                 "ring",    "crescent"};

const std::array<const char*, 10> kColorNames = {"red",  "orange", "yellow", "green", "spring",
                                                 "cyan", "blue",   "violet", "purple", "pink"};

const std::array<const char*, 10> kTextureNames = {"grid",    "pulses", "noise",   "triangles",
                                                   "zigzags", "stripes", "dots",    "checker",
                                                   "waves",   "bricks"};

namespace {

int id_from_name(const std::string& name, const std::array<const char*, 10>& table,
                 const char* what) {
    for (int i = 0; i < 10; ++i)
        if (name == table[i]) return i;
    throw std::invalid_argument(std::string("unknown ") + what + " name: " + name);
}

void check_id(int id, const char* what) {
    if (id < 0 || id >= kNumManifestations)
        throw std::invalid_argument(std::string(what) + " id out of range [0,10)");
}

} // namespace

int shape_id_from_name(const std::string& name) { return id_from_name(name, kShapeNames, "shape"); }
int color_id_from_name(const std::string& name) { return id_from_name(name, kColorNames, "color"); }
int texture_id_from_name(const std::string& name) {
    return id_from_name(name, kTextureNames, "texture");
}

void QuintSpec::validate() const {
    check_id(shape_id, "shape");
    check_id(fg_color_id, "fg color");
    check_id(fg_texture_id, "fg texture");
    check_id(bg_color_id, "bg color");
    check_id(bg_texture_id, "bg texture");
    if (fg_color_id == bg_color_id)
        throw std::invalid_argument("spec: fg and bg color must differ");
    if (fg_texture_id == bg_texture_id)
        throw std::invalid_argument("spec: fg and bg texture must differ");
}

void GenConfig::validate() const {
    if (canvas < 16) throw std::invalid_argument("gen config: canvas must be >= 16");
    if (erosion.frequency <= 0.0) throw std::invalid_argument("gen config: frequency must be > 0");
    if (erosion.octaves < 1) throw std::invalid_argument("gen config: octaves must be >= 1");
    if (erosion.threshold <= -1.0 || erosion.threshold >= 1.0)
        throw std::invalid_argument("gen config: threshold must be in (-1,1)");
}

// ---- colors --------------------------------------------------------------

Rgb hsv_to_rgb(double hue_deg, double sat, double val) {
    double h = std::fmod(hue_deg, 360.0);
    if (h < 0.0) h += 360.0;
    const double c = val * sat;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0.0, g = 0.0, b = 0.0;
    if (hp < 1.0) {
        r = c, g = x;
    } else if (hp < 2.0) {
        r = x, g = c;
    } else if (hp < 3.0) {
        g = c, b = x;
    } else if (hp < 4.0) {
        g = x, b = c;
    } else if (hp < 5.0) {
        r = x, b = c;
    } else {
        r = c, b = x;
    }
    const double m = val - c;
    auto to_byte = [](double v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    };
    return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

double rgb_hue_deg(Rgb c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    if (d == 0.0) return 0.0;
    double h;
    if (mx == r)
        h = std::fmod((g - b) / d, 6.0);
    else if (mx == g)
        h = (b - r) / d + 2.0;
    else
        h = (r - g) / d + 4.0;
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    return h;
}

Rgb jitter_color(int color_id, std::uint64_t jitter_seed) {
    check_id(color_id, "color");
    const double anchor_hue = 36.0 * color_id;
    if (jitter_seed == 0) return hsv_to_rgb(anchor_hue, 0.85, 0.85);
    const double hue = anchor_hue + (unit_from_hash(jitter_seed, 0) * 2.0 - 1.0) * 9.0;
    const double sat = 0.7 + 0.3 * unit_from_hash(jitter_seed, 1);
    const double val = 0.7 + 0.3 * unit_from_hash(jitter_seed, 2);
    return hsv_to_rgb(hue, sat, val);
}

// ---- spec sampling --------------------------------------------------------

namespace {

int draw_factor(int fixed, Rng& rng) {
    if (fixed >= 0) {
        check_id(fixed, "fixed factor");
        return fixed;
    }
    return static_cast<int>(rng.index(kNumManifestations));
}

// Draw `secondary` uniformly over [0,10) \ {primary}; honors a fixed value.
int draw_factor_excluding(int fixed, int excluded, Rng& rng) {
    if (fixed >= 0) {
        check_id(fixed, "fixed factor");
        if (fixed == excluded)
            throw std::invalid_argument("sample_spec: contradictory constraints (fg == bg)");
        return fixed;
    }
    int v = static_cast<int>(rng.index(kNumManifestations - 1));
    if (v >= excluded) ++v;
    return v;
}

} // namespace

QuintSpec sample_spec(const SpecConstraints& c, Rng& rng) {
    QuintSpec spec;
    spec.shape_id = draw_factor(c.shape, rng);
    spec.fg_color_id = draw_factor(c.fg_color, rng);
    spec.bg_color_id = draw_factor_excluding(c.bg_color, spec.fg_color_id, rng);
    spec.fg_texture_id = draw_factor(c.fg_texture, rng);
    spec.bg_texture_id = draw_factor_excluding(c.bg_texture, spec.fg_texture_id, rng);
    spec.erosion_seed = rng.next_u64();
    spec.jitter_seed = rng.next_u64();
    spec.validate();
    return spec;
}

// ---- shapes ----------------------------------------------------------------

namespace {

// Point-in-convex-polygon for regular n-gons with a vertex pointing up.
bool in_regular_polygon(double u, double v, int sides) {
    // vertex angle 90deg in image coords means "up" is -v
    for (int i = 0; i < sides; ++i) {
        const double a0 = std::numbers::pi * (0.5 + 2.0 * i / sides);
        const double a1 = std::numbers::pi * (0.5 + 2.0 * (i + 1) / sides);
        const double x0 = std::cos(a0), y0 = -std::sin(a0);
        const double x1 = std::cos(a1), y1 = -std::sin(a1);
        const double cross = (x1 - x0) * (v - y0) - (y1 - y0) * (u - x0);
        if (cross > 0.0) return false;
    }
    return true;
}

// Even-odd point-in-polygon used by the star.
bool in_polygon(double u, double v, const std::vector<std::pair<double, double>>& poly) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto [xi, yi] = poly[i];
        const auto [xj, yj] = poly[j];
        if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

const std::vector<std::pair<double, double>>& star_polygon() {
    static const std::vector<std::pair<double, double>> star = [] {
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < 10; ++i) {
            const double r = (i % 2 == 0) ? 1.0 : 0.4;
            const double a = std::numbers::pi * (0.5 + i / 5.0);
            pts.emplace_back(r * std::cos(a), -r * std::sin(a));
        }
        return pts;
    }();
    return star;
}

// (u, v) are normalized so the shape's bounding extent is [-1, 1].
bool inside_shape(int shape_id, double u, double v) {
    const double r2 = u * u + v * v;
    switch (shape_id) {
        case 0: return r2 <= 1.0;                           // circle
        case 1: return std::max(std::fabs(u), std::fabs(v)) <= 1.0; // square
        case 2: return in_polygon(u, v, star_polygon());    // star
        case 3: return in_regular_polygon(u, v, 3);         // triangle
        case 4: return in_regular_polygon(u, v, 5);         // pentagon
        case 5: return in_regular_polygon(u, v, 6);         // hexagon
        case 6: return std::fabs(u) + std::fabs(v) <= 1.0;  // diamond
        case 7:                                             // cross
            return (std::fabs(u) <= 0.35 && std::fabs(v) <= 1.0) ||
                   (std::fabs(v) <= 0.35 && std::fabs(u) <= 1.0);
        case 8: return r2 <= 1.0 && r2 >= 0.55 * 0.55;      // ring
        case 9: {                                           // crescent
            const double du = u - 0.45;
            return r2 <= 1.0 && du * du + v * v >= 0.75 * 0.75;
        }
        default: throw std::invalid_argument("shape id out of range");
    }
}

// ---- textures ---------------------------------------------------------------

// Binary pattern at pixel (x, y). Texture period scales with the canvas so a
// 64px canvas gets 8px texels.
bool texture_on(int texture_id, int x, int y, int canvas, std::uint64_t tex_seed) {
    const int p = std::max(4, canvas / 8);
    const int half = p / 2;
    switch (texture_id) {
        case 0: // grid
            return x % p < 2 || y % p < 2;
        case 1: { // pulses: concentric rings around the canvas center
            const double cx = canvas * 0.5, cy = canvas * 0.5;
            const double r = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
            return static_cast<int>(r) % p < half;
        }
        case 2: // noise
            return unit_from_hash(tex_seed, static_cast<std::uint64_t>(y) * canvas + x) < 0.5;
        case 3: { // triangles
            const bool diag = (x % p) + (y % p) < p;
            return ((x / p + y / p) % 2 == 0) ? diag : !diag;
        }
        case 4: { // zigzags
            const int tri = std::abs(x % (2 * p) - p);
            return (y + tri) % p < half;
        }
        case 5: // stripes (diagonal)
            return (x + y) % (2 * p) < p;
        case 6: { // dots
            const int dx = x % p - half;
            const int dy = y % p - half;
            return dx * dx + dy * dy <= (p / 3) * (p / 3);
        }
        case 7: // checker
            return (x / p + y / p) % 2 == 0;
        case 8: { // waves
            const int wave = static_cast<int>(
                std::lround(half * std::sin(2.0 * std::numbers::pi * x / (3.0 * p))));
            const int yy = y + wave;
            return ((yy % p) + p) % p < half;
        }
        case 9: { // bricks
            const int row = y / p;
            const int offset = (row % 2) * p;
            return y % p < 2 || (x + offset) % (2 * p) < 2;
        }
        default: throw std::invalid_argument("texture id out of range");
    }
}

// Texture-on pixels are pulled toward the complementary shade. The mix factor
// stays below 0.5 so the channel ordering, and therefore the hue, of the base
// color is preserved.
Rgb modulate(Rgb base, bool on) {
    if (!on) return base;
    constexpr double t = 0.4;
    auto mx = [](std::uint8_t c) {
        return static_cast<std::uint8_t>(
            std::lround((1.0 - t) * c + t * (255.0 - c)));
    };
    return {mx(base.r), mx(base.g), mx(base.b)};
}

} // namespace

std::vector<std::uint8_t> rasterize_mask(const QuintSpec& spec, const GenConfig& cfg) {
    const int n = cfg.canvas;
    const double size = 0.4 + 0.3 * unit_from_hash(derive_seed(spec.jitter_seed, "size"), 0);
    const double half_extent = size * n * 0.5;
    const double cx = n * 0.5, cy = n * 0.5;

    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n) * n, 0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double u = (x + 0.5 - cx) / half_extent;
            const double v = (y + 0.5 - cy) / half_extent;
            if (inside_shape(spec.shape_id, u, v))
                mask[static_cast<std::size_t>(y) * n + x] = 1;
        }
    return mask;
}

std::vector<std::uint8_t> erode(const std::vector<std::uint8_t>& mask,
                                const std::vector<float>& field, double tau) {
    if (mask.size() != field.size()) throw std::invalid_argument("erode: extent mismatch");
    std::vector<std::uint8_t> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i)
        out[i] = (mask[i] && field[i] >= tau) ? 1 : 0;
    return out;
}

QuintImage render(const QuintSpec& spec, const GenConfig& cfg) {
    spec.validate();
    cfg.validate();
    const int n = cfg.canvas;

    const std::uint64_t fg_jitter = spec.jitter_seed == 0 ? 0 : derive_seed(spec.jitter_seed, "fg");
    const std::uint64_t bg_jitter = spec.jitter_seed == 0 ? 0 : derive_seed(spec.jitter_seed, "bg");
    const Rgb fg = jitter_color(spec.fg_color_id, fg_jitter);
    const Rgb bg = jitter_color(spec.bg_color_id, bg_jitter);
    const std::uint64_t fg_tex_seed = derive_seed(spec.jitter_seed, "fgtex");
    const std::uint64_t bg_tex_seed = derive_seed(spec.jitter_seed, "bgtex");

    std::vector<std::uint8_t> mask = rasterize_mask(spec, cfg);
    const std::vector<float> field =
        perlin_field(n, n, cfg.erosion.frequency, cfg.erosion.octaves, spec.erosion_seed);
    mask = erode(mask, field, cfg.erosion.threshold);

    QuintImage img;
    img.canvas = n;
    img.spec = spec;
    img.pixels.resize(static_cast<std::size_t>(n) * n * 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * n + x;
            Rgb px;
            if (mask[idx]) {
                px = modulate(fg, texture_on(spec.fg_texture_id, x, y, n, fg_tex_seed));
            } else {
                px = modulate(bg, texture_on(spec.bg_texture_id, x, y, n, bg_tex_seed));
            }
            img.pixels[idx * 3 + 0] = px.r;
            img.pixels[idx * 3 + 1] = px.g;
            img.pixels[idx * 3 + 2] = px.b;
        }
    return img;
}

} // namespace mmal
