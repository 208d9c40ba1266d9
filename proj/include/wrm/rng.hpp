#pragma once

#include <array>
#include <cstdint>

namespace wrm {

// Philox4x32-10 block: 128-bit counter, 64-bit key, four 32-bit outputs.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        std::uint64_t key);

// Counter-based random stream.  A stream is addressed by (seed, id_a, id_b);
// the ensemble driver uses id_a = realisation index and id_b = agent index, so
// every agent in every realisation owns an independent stream and the draw for
// step k never depends on scheduling or on what other streams have consumed.
// Draw sequence within a stream is deterministic; period is 2^64 blocks.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint32_t id_a, std::uint32_t id_b)
        : key_(seed), ctr_{0, 0, id_a, id_b} {}

    // Uniform on (0,1), strictly inside the interval.
    double next_uniform();

    // Standard normal via Box-Muller (one spare cached).
    double next_normal();

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze; requires shape >= 1.
    double next_gamma(double shape);

private:
    void refill();

    std::uint64_t key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> block_{};
    int word_pos_ = 4;      // 4 == exhausted
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace wrm
