#pragma once

#include <cmath>
#include <cstdint>

namespace rtandem {

// Small counter-friendly generator (splitmix64 core). Streams are cheap to
// construct, so simulation code derives one independent stream per
// (agent, hypothesis, replicate) cell and results do not depend on scheduling.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(mix(seed ^ 0x9e3779b97f4a7c15ull)) {}

    // Derives a stream keyed by up to three indices. Adding more agents or
    // replicates never perturbs the draws of existing cells.
    static RngStream substream(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
        std::uint64_t s = master;
        s = mix(s ^ (0xa0761d6478bd642full + a));
        s = mix(s ^ (0xe7037ed1a0b428dbull + b));
        s = mix(s ^ (0x8ebc6af09c88c6e3ull + c));
        return RngStream(s);
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_exponential(double mean) {
        // next_double() < 1, so the log argument stays positive.
        return -mean * std::log1p(-next_double());
    }

    double next_normal(double mu, double sigma) {
        // Box-Muller, one variate per pair of uniforms (second discarded).
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mu + sigma * r * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

}  // namespace rtandem
