#pragma once

#include <array>
#include <cstdint>

namespace qnd {

// Philox4x32-10 counter-based generator (Salmon et al. 2011). One block maps a
// 128-bit counter and 64-bit key to 128 pseudo-random bits; there is no state
// to advance, so independent streams are just independent counter prefixes.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              const std::array<std::uint32_t, 2>& key);
};

// Stream of standard normal variates derived from (seed, stream_id). Streams
// with distinct ids are statistically independent and can be consumed in any
// order, which makes Monte Carlo ensembles reproducible under parallelism.
//
// Uniforms are built from 64 Philox bits each; normals come from Box-Muller,
// so consumption is deterministic (two normals per block).
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t stream_id);

    // Standard normal N(0,1).
    double next();

    // Uniform in (0,1].
    double next_uniform();

    // When set, every normal from next() has its sign flipped. Used for
    // antithetic variance reduction in generator estimates.
    void set_antithetic(bool on) { antithetic_ = on; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return id_; }

  private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t id_;
    std::array<std::uint32_t, 2> key_;
    std::uint64_t block_index_ = 0;
    double cache_[2] = {0.0, 0.0};
    int cached_ = 0;
    bool antithetic_ = false;
};

}  // namespace qnd
