#pragma once
// Counter-based noise: every draw is a pure function of (seed, tick, stream, index),
// so replays do not depend on call order or on the standard library's distributions.

#include <cmath>
#include <cstdint>

namespace dynplan {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t bits(std::uint64_t tick, std::uint64_t stream, std::uint64_t index) const {
        std::uint64_t h = splitmix64(seed_);
        h = splitmix64(h ^ tick);
        h = splitmix64(h ^ (stream * 0xD1B54A32D192ED03ull));
        return splitmix64(h ^ (index * 0x8CB92BA72F3D8DD7ull));
    }

    // Uniform in (0, 1), 53-bit resolution.
    double uniform(std::uint64_t tick, std::uint64_t stream, std::uint64_t index) const {
        return (static_cast<double>(bits(tick, stream, index) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    // Box-Muller on two independent counters.
    double normal(std::uint64_t tick, std::uint64_t stream, std::uint64_t index) const {
        double u1 = uniform(tick, stream, 2 * index);
        double u2 = uniform(tick, stream, 2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t seed_;
};

// Stable stream id from a channel name (FNV-1a).
inline std::uint64_t stream_id(const char* s) {
    std::uint64_t h = 1469598103934665603ull;
    for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace dynplan
