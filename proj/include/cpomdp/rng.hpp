// Counter-based pseudo-random streams: every draw is a pure function of
// (key, counter), so replications get independent streams that are
// reproducible bit-for-bit on any platform and under any thread schedule.
#pragma once

#include <cstdint>

#include "cpomdp/common.hpp"

namespace cpomdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class CounterRng {
  public:
    /// Stream `stream` of the generator seeded with `seed`; distinct streams
    /// are statistically independent.
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(splitmix64(seed ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1))) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ counter_++); }

    /// Uniform on [0, 1) with 53 random mantissa bits.
    real next_u01() {
        return static_cast<real>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Index in [0, n) sampled by inverse CDF over the given weights; weights
    /// need not be normalized. Returns n when total mass is zero.
    template <typename Weights>
    std::size_t pick(const Weights& w, real total) {
        if (!(total > 0)) return w.size();
        real u = next_u01() * total;
        for (std::size_t i = 0; i < w.size(); ++i) {
            u -= w[i];
            if (u < 0) return i;
        }
        return w.size() - 1; // rounding: land on the last positive entry
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace cpomdp
