#include "mmal/model.hpp"

namespace mmal {

std::vector<std::uint8_t> moddrop(std::vector<std::uint8_t> masks, double p_drop,
                                  std::size_t n_modalities, Rng& rng) {
    if (p_drop < 0.0 || p_drop >= 1.0)
        throw std::invalid_argument("moddrop: p_drop must be in [0,1)");
    if (p_drop == 0.0) return masks;

    for (std::uint8_t& mask : masks) {
        const std::uint8_t original = mask;
        std::uint8_t out = 0;
        for (std::size_t m = 0; m < n_modalities; ++m) {
            const auto bit = static_cast<std::uint8_t>(1u << m);
            if (!(original & bit)) continue;
            if (!rng.bernoulli(p_drop)) out |= bit;
        }
        if (out == 0) {
            std::vector<std::size_t> had;
            for (std::size_t m = 0; m < n_modalities; ++m)
                if (original & (1u << m)) had.push_back(m);
            if (had.empty()) throw std::invalid_argument("moddrop: sample already all-absent");
            out = static_cast<std::uint8_t>(1u << had[rng.index(had.size())]);
        }
        mask = out;
    }
    return masks;
}

} // namespace mmal
