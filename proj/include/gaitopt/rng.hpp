#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace gaitopt {

/// FNV-1a 64-bit hash; used for content fingerprints and for folding names
/// into seed indices.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t hash = 0xCBF29CE484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001B3ULL;
    }
    return hash;
}

inline std::uint64_t fnv1a64(std::string_view text) {
    return fnv1a64(text.data(), text.size());
}

/// splitmix64 step; used both as a standalone mixer and to derive
/// decorrelated child seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic child seed for a named stream. Streams are small integer
/// tags (one per purpose: surface noise, masking, BO proposals, ...), index
/// selects the run/replicate within the stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index) {
    std::uint64_t s = base;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream * 0xD1342543DE82EF95ULL + 0x9E3779B97F4A7C15ULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ (index * 0xC6A4A7935BD1E995ULL + 0x2545F4914F6CDD1DULL);
    return splitmix64(s);
}

/// Small deterministic generator (splitmix64 core, Box-Muller normals).
/// Unlike std::normal_distribution, the draw sequence is pinned by this
/// header, so seeded artifacts are reproducible across standard libraries.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform on [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Stream tags for derive_seed. Centralized so independent consumers never
/// collide on the same child seed.
namespace streams {
inline constexpr std::uint64_t kSurface = 1;
inline constexpr std::uint64_t kObservationNoise = 2;
inline constexpr std::uint64_t kBoRun = 3;
inline constexpr std::uint64_t kMapFit = 4;
inline constexpr std::uint64_t kEntropySearch = 5;
inline constexpr std::uint64_t kGridMask = 6;
inline constexpr std::uint64_t kRandomSearch = 7;
inline constexpr std::uint64_t kConfig = 8;
inline constexpr std::uint64_t kPlantTrace = 9;
} // namespace streams

} // namespace gaitopt
