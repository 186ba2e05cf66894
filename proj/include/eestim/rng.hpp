#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace eestim {

// Per-chain random stream. Identical (seed, stream) pairs reproduce the same
// draw sequence within a build.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9U};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace eestim
