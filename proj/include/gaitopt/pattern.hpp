#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gaitopt {

/// A translating one-dimensional stripe pattern presented on the projector
/// plane.  Stripes run parallel to the y axis and move along +x at
/// wavelength_px * frequency_hz pixels per second.
struct LightPattern {
    double wavelength_px = 645.0;
    double duty_cycle_frac = 0.30; ///< lit fraction of each period, in (0, 1]
    double frequency_hz = 1.0;
    int width_px = 1280;
    int height_px = 1024;

    void validate() const;
};

/// Row-major binary frame; one byte per pixel (0 = dark, 1 = lit).
struct Bitmap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) *
                          static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

/// Rasterize the pattern at time t_s.  A pixel at column x is lit iff the
/// fractional phase x / wavelength - frequency * t, wrapped into
/// [-1/2, 1/2), lies within duty/2 of the stripe center.
Bitmap render_pattern(const LightPattern& pattern, double t_s);

/// Serialize a bitmap as a little-endian (width, height) uint32 header
/// followed by row-major LSB-first bit rows, each padded to a whole byte.
std::vector<std::uint8_t> pack_bitmap(const Bitmap& bitmap);

void write_packed(const std::string& path, const Bitmap& bitmap);

/// Plain-text PGM (P2, maxval 1) export for eyeballing frames.
void write_pgm(const std::string& path, const Bitmap& bitmap);

} // namespace gaitopt
