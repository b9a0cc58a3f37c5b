#pragma once

#include "acf/types.hpp"

#include <string>

namespace acf {

/// Binary PPM (P6, maxval 255) or ASCII PPM (P3). Values are scaled to [0,1].
Image read_ppm(const std::string &path);
void write_ppm(const std::string &path, const Image &image);

/// Binary PGM (P5) of a plane with values in [0,1] (clamped).
void write_pgm(const std::string &path, const Plane &plane);

/// Rectangle outline in the given color, clipped to the image.
void draw_box(Image &image, const Box &box, float r, float g, float b, int thickness = 1);

/// Quantizes to 8-bit and back, matching a write/read cycle through PPM.
Image quantize_8bit(const Image &image);

} // namespace acf
