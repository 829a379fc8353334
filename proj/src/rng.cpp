#include "qnd/rng.hpp"

#include <cmath>

namespace qnd {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline void philox_round(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(const std::array<std::uint32_t, 4>& counter,
                                               const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        philox_round(c, k);
    }
    return c;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      id_(stream_id),
      key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

void NormalStream::refill() {
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(block_index_), static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
    const auto bits = Philox4x32::block(counter, key_);
    ++block_index_;

    const std::uint64_t a = (static_cast<std::uint64_t>(bits[0]) << 32) | bits[1];
    const std::uint64_t b = (static_cast<std::uint64_t>(bits[2]) << 32) | bits[3];
    // u1 in (0,1] so the log below is finite; u2 in [0,1).
    const double u1 = 1.0 - static_cast<double>(a >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;

    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cache_[0] = radius * std::cos(angle);
    cache_[1] = radius * std::sin(angle);
    cached_ = 2;
}

double NormalStream::next() {
    if (cached_ == 0) refill();
    const double z = cache_[2 - cached_];
    --cached_;
    return antithetic_ ? -z : z;
}

double NormalStream::next_uniform() {
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(block_index_), static_cast<std::uint32_t>(block_index_ >> 32),
        static_cast<std::uint32_t>(id_), static_cast<std::uint32_t>(id_ >> 32)};
    const auto bits = Philox4x32::block(counter, key_);
    ++block_index_;
    cached_ = 0;  // uniforms and normals share the block counter
    const std::uint64_t a = (static_cast<std::uint64_t>(bits[0]) << 32) | bits[1];
    return 1.0 - static_cast<double>(a >> 11) * 0x1.0p-53;
}

}  // namespace qnd
