#pragma once

// Counter-based random numbers (Philox 4x64, 10 rounds).
//
// Every draw is a pure function of (seed, replication, stream, step, sub),
// so replications can run on any number of threads in any order and still
// produce bit-identical trajectories.  Streams keep the latent-chain draws
// and the response draws from interfering with each other when a procedure
// changes how many of either it consumes per step.

#include <cstdint>
#include <array>

namespace chad {

namespace detail {

// 128-bit product of two 64-bit operands, split into hi/lo words.
inline void mulhilo64(std::uint64_t a, std::uint64_t b,
                      std::uint64_t& hi, std::uint64_t& lo) {
    unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
}

} // namespace detail

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey     = std::array<std::uint64_t, 2>;
using PhiloxBlock   = std::array<std::uint64_t, 4>;

// Reference philox4x64-10.  Verified against an independent implementation
// (see rng_test.cpp for the frozen vectors).
inline PhiloxBlock philox4x64(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ull;
    constexpr std::uint64_t M1 = 0xCA5A826395121157ull;
    constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ull;
    constexpr std::uint64_t W1 = 0xBB67AE8584CAA73Bull;

    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        detail::mulhilo64(M0, ctr[0], hi0, lo0);
        detail::mulhilo64(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// Stream ids used by the trial engine.
enum : std::uint64_t {
    kStreamLatent   = 0,  // U_t: change-point transitions
    kStreamResponse = 1,  // V_t: response sampling
    kStreamAux      = 2,  // everything else (Monte Carlo KL, ...)
};

// One 64-bit word addressed by (seed, rep) x (step, sub, stream).
inline std::uint64_t raw_word(std::uint64_t seed, std::uint64_t rep,
                              std::uint64_t stream, std::uint64_t step,
                              std::uint64_t sub) {
    return philox4x64({step, sub, stream, 0}, {seed, rep})[0];
}

// Uniform on the open interval (0, 1): ((w >> 12) + 1/2) * 2^-52.  Each step
// is exact in double precision, so the extremes are 2^-53 and 1 - 2^-53 and
// the function never returns 0 or 1; log(u) and Bernoulli edge cases (p = 0,
// p = 1) stay deterministic.  Using more of the word would not keep the
// interval open: with 53 bits the top value 2^53 - 1/2 ties to even and the
// product rounds to exactly 1.0.
inline double to_unit(std::uint64_t w) {
    return (static_cast<double>(w >> 12) + 0.5) * 0x1p-52;
}

inline double uniform(std::uint64_t seed, std::uint64_t rep,
                      std::uint64_t stream, std::uint64_t step,
                      std::uint64_t sub = 0) {
    return to_unit(raw_word(seed, rep, stream, step, sub));
}

// Sequential uniforms within one (rep, stream, step) cell, for samplers that
// need more than one draw per observation (Box-Muller, rejection loops).
class StepRng {
public:
    StepRng(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream,
            std::uint64_t step)
        : seed_(seed), rep_(rep), stream_(stream), step_(step) {}

    double next() { return uniform(seed_, rep_, stream_, step_, sub_++); }

private:
    std::uint64_t seed_, rep_, stream_, step_;
    std::uint64_t sub_ = 0;
};

} // namespace chad
