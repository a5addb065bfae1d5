#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace powerstate {

/// SplitMix64 generator. Used everywhere randomness is needed so that
/// results are bit-identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log argument.
    double uniform01_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n) {
        // Debiased multiply-shift (Lemire).
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
        std::uint64_t l = static_cast<std::uint64_t>(m);
        if (l < n) {
            std::uint64_t t = -n % n;
            while (l < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * static_cast<__uint128_t>(n);
                l = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = uniform01_open();
        double v = uniform01_open();
        double r = std::sqrt(-2.0 * std::log(u));
        double theta = 2.0 * 3.141592653589793238462643 * v;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// FNV-1a over arbitrary bytes; also the basis for seed derivation.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a64(s.data(), s.size(), h);
}

/// Derive an independent child seed from a master seed and a salt pair.
/// Deterministic, so parallel and serial execution see identical streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt_a, std::uint64_t salt_b = 0) {
    std::uint64_t bytes[3] = {master, salt_a, salt_b};
    std::uint64_t h = fnv1a64(bytes, sizeof bytes);
    // One splitmix scramble so sequential salts do not give correlated states.
    Rng r(h);
    return r.next_u64();
}

/// Hash a double's bit pattern into an existing FNV state.
inline std::uint64_t hash_double(double v, std::uint64_t h) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return fnv1a64(&bits, sizeof bits, h);
}

}  // namespace powerstate
