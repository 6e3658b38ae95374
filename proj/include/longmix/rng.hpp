#ifndef LONGMIX_RNG_HPP
#define LONGMIX_RNG_HPP

#include <cstdint>
#include <random>

#include "longmix/stats.hpp"

namespace longmix {

// splitmix64 output scramble; used to spread structured seeds before they
// reach the engine state.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seedable, portable generator: mt19937_64 has a fully specified sequence,
// uniforms come from the top 53 bits, and normals go through the inverse
// cdf so streams are identical across platforms and standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Uniform on the open interval (0, 1).
    double uniform() {
        const std::uint64_t bits = engine_();
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return stats::norm_quantile(uniform()); }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

// Stream-splitting rule: each mouse gets an independent substream derived
// from the run seed xor its 1-based index (scrambled through splitmix64 by
// the Rng constructor). Draws inside a stream are consumed in a documented
// order by the simulator.
inline Rng mouse_stream(std::uint64_t seed, std::uint64_t mouse_index) {
    return Rng(seed ^ splitmix64(mouse_index + 1));
}

}  // namespace longmix

#endif  // LONGMIX_RNG_HPP
