#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace brw {

// Philox4x32-10 counter-based generator. Streams are indexed by
// (seed, stream): the seed forms the key, the stream id occupies the top
// half of the 128-bit counter, so any two (seed, stream) pairs yield
// independent sequences regardless of thread scheduling.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32() : Philox4x32(0, 0) {}
    Philox4x32(std::uint64_t seed, std::uint64_t stream) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
        ctr_ = {0, 0, static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() {
        if (have_ == 0) {
            block_ = encrypt(ctr_, key_);
            bump_counter();
            have_ = 2;
        }
        --have_;
        const unsigned i = 2 * (1 - have_);
        return static_cast<std::uint64_t>(block_[i]) |
               (static_cast<std::uint64_t>(block_[i + 1]) << 32);
    }

    // One raw 4x32 block for a given counter/key; exposed for tests.
    static std::array<std::uint32_t, 4> encrypt(std::array<std::uint32_t, 4> x,
                                                std::array<std::uint32_t, 2> k) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k[0] += 0x9E3779B9u;
                k[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = 0xD2511F53ull * x[0];
            const std::uint64_t p1 = 0xCD9E8D57ull * x[2];
            x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1],
                 static_cast<std::uint32_t>(p0)};
        }
        return x;
    }

private:
    void bump_counter() {
        if (++ctr_[0] == 0) ++ctr_[1];  // stream id in ctr_[2..3] is fixed
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> block_{};
    unsigned have_ = 0;
};

// Canonical uniform in [0,1) using 53 random bits.
inline double uniform01(Philox4x32& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace brw
