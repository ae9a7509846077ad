#pragma once

#include <cmath>
#include <cstdint>

namespace speq {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, a, b, c). Every column of
/// every replica gets its own stream, so sampling is deterministic no matter
/// how work is scheduled across threads.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t s = seed;
        state_ = splitmix64_next(s);
        s = state_ ^ (a * 0x9E3779B97F4A7C15ULL + 1);
        state_ = splitmix64_next(s);
        s = state_ ^ (b * 0xC2B2AE3D27D4EB4FULL + 2);
        state_ = splitmix64_next(s);
        s = state_ ^ (c * 0x165667B19E3779F9ULL + 3);
        state_ = splitmix64_next(s);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform in (0, 1]: never returns 0, safe under log().
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Box-Muller, one spare value cached per stream.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_uniform();
        double u2 = next_uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    double next_rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

private:
    std::uint64_t state_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace speq
