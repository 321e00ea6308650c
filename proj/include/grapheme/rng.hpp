#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace grapheme {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A generator is a (key, stream) pair. The 128-bit counter is laid out as
/// {block_lo, block_hi, stream_lo, stream_hi}; each block yields four 32-bit
/// words which are handed out as two 64-bit values. Streams never overlap
/// as long as fewer than 2^64 blocks are consumed per stream.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32() : Philox4x32(0, 0) {}
    Philox4x32(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ >= 2) {
            refill();
        }
        const auto lo = static_cast<std::uint64_t>(buffer_[2 * lane_]);
        const auto hi = static_cast<std::uint64_t>(buffer_[2 * lane_ + 1]);
        ++lane_;
        return lo | (hi << 32);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_pos() { return 1.0 - uniform(); }

    /// Uniform integer in [0, bound) via Lemire's multiply-shift rejection.
    std::uint64_t below(std::uint64_t bound) {
        unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    std::uint64_t blocks_consumed() const { return block_; }

    static Block rounds(Block ctr, Key key) {
        constexpr std::uint32_t kMul0 = 0xD2511F53;
        constexpr std::uint32_t kMul1 = 0xCD9E8D57;
        constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
        constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
        for (int r = 0; r < 10; ++r) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

private:
    void refill() {
        const Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = rounds(ctr, key_);
        ++block_;
        lane_ = 0;
    }

    Key key_;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;
    Block buffer_{};
    int lane_ = 2;
};

using Rng = Philox4x32;

/// Stream-split rule for replicas: the replica index is multiplied by the
/// 64-bit golden-ratio constant and XOR-folded into the master key; the
/// stream half of the counter carries a purpose tag so that different
/// consumers of one replica (forward run, dual run, sampling) never share
/// random numbers.
inline Rng replica_rng(std::uint64_t master_seed, std::uint64_t replica, std::uint64_t purpose = 0) {
    const std::uint64_t key = master_seed ^ (replica * 0x9E3779B97F4A7C15ULL);
    return Rng(key, purpose);
}

/// Exponential variate with the given rate (rate > 0).
inline double exponential(Rng& rng, double rate) {
    return -std::log(rng.uniform_pos()) / rate;
}

}  // namespace grapheme
