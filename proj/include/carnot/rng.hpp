#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace carnot {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
/// A draw is a pure function of (key, counter), so every sample path owns an
/// independent stream addressed by its index and results do not depend on
/// how paths are scheduled across threads.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;

    explicit constexpr Philox4x32(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Counter operator()(Counter ctr) const {
        std::array<std::uint32_t, 2> key = key_;
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

private:
    static constexpr Counter single_round(const Counter& c, const std::array<std::uint32_t, 2>& k) {
        const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
        const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }

    std::array<std::uint32_t, 2> key_;
};

/// Stream of standard normals addressed by (seed, stream, block). Each Philox
/// call yields two 53-bit uniforms, turned into two normals by Box-Muller.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream, std::uint32_t block)
        : gen_(seed), stream_(stream), block_(block) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto out = gen_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                               block_, counter_++});
        const double u1 = to_unit_open(out[0], out[1]);
        const double u2 = to_unit_open(out[2], out[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    /// Uniform on (0, 1).
    double uniform() {
        const auto out = gen_({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                               block_, counter_++});
        return to_unit_open(out[0], out[1]);
    }

    /// (0, 1), never exactly 0 so log() is safe.
    static double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = (std::uint64_t{hi} << 21) ^ (std::uint64_t{lo} >> 11);
        return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53;
    }

private:
    Philox4x32 gen_;
    std::uint64_t stream_;
    std::uint32_t block_;
    std::uint32_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace carnot
