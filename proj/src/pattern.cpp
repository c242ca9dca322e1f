#include "gaitopt/pattern.hpp"

#include <cmath>
#include <fstream>

#include "gaitopt/errors.hpp"

namespace gaitopt {

void LightPattern::validate() const {
    if (!(wavelength_px > 0.0))
        throw DomainError("pattern wavelength must be positive");
    if (!(duty_cycle_frac > 0.0) || duty_cycle_frac > 1.0)
        throw DomainError("duty cycle fraction must lie in (0, 1]");
    if (!(frequency_hz >= 0.0))
        throw DomainError("pattern frequency must be non-negative");
    if (width_px <= 0 || height_px <= 0)
        throw DomainError("frame dimensions must be positive");
}

namespace {

// Wrap v into [-1/2, 1/2).
double wrap_half(double v) { return v - std::floor(v + 0.5); }

} // namespace

Bitmap render_pattern(const LightPattern& pattern, double t_s) {
    pattern.validate();
    Bitmap frame;
    frame.width = pattern.width_px;
    frame.height = pattern.height_px;
    frame.pixels.assign(static_cast<std::size_t>(frame.width) *
                            static_cast<std::size_t>(frame.height),
                        0);

    // The pattern is constant along y, so rasterize one row and copy it.
    std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.width));
    const double half_duty = 0.5 * pattern.duty_cycle_frac;
    for (int x = 0; x < frame.width; ++x) {
        const double phase = wrap_half(static_cast<double>(x) / pattern.wavelength_px -
                                       pattern.frequency_hz * t_s);
        row[static_cast<std::size_t>(x)] = std::fabs(phase) <= half_duty ? 1 : 0;
    }
    for (int y = 0; y < frame.height; ++y)
        std::copy(row.begin(), row.end(),
                  frame.pixels.begin() +
                      static_cast<std::size_t>(y) * static_cast<std::size_t>(frame.width));
    return frame;
}

std::vector<std::uint8_t> pack_bitmap(const Bitmap& bitmap) {
    const std::size_t row_bytes = (static_cast<std::size_t>(bitmap.width) + 7) / 8;
    std::vector<std::uint8_t> out;
    out.reserve(8 + row_bytes * static_cast<std::size_t>(bitmap.height));

    auto push_u32 = [&out](std::uint32_t v) {
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
    };
    push_u32(static_cast<std::uint32_t>(bitmap.width));
    push_u32(static_cast<std::uint32_t>(bitmap.height));

    for (int y = 0; y < bitmap.height; ++y) {
        std::size_t base = out.size();
        out.resize(base + row_bytes, 0);
        for (int x = 0; x < bitmap.width; ++x)
            if (bitmap.at(x, y))
                out[base + static_cast<std::size_t>(x) / 8] |=
                    static_cast<std::uint8_t>(1u << (x % 8));
    }
    return out;
}

void write_packed(const std::string& path, const Bitmap& bitmap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write pattern file: " + path);
    auto bytes = pack_bitmap(bitmap);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void write_pgm(const std::string& path, const Bitmap& bitmap) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write PGM file: " + path);
    out << "P2\n" << bitmap.width << ' ' << bitmap.height << "\n1\n";
    for (int y = 0; y < bitmap.height; ++y) {
        for (int x = 0; x < bitmap.width; ++x) {
            if (x) out << ' ';
            out << static_cast<int>(bitmap.at(x, y));
        }
        out << '\n';
    }
}

} // namespace gaitopt
