#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmal {

// Lossless 8-bit RGB PNG writer (zlib stream with stored deflate blocks).
// Output is byte-deterministic for identical input.
void write_png_rgb8(const std::string& path, const std::uint8_t* pixels, int width, int height);

} // namespace mmal
