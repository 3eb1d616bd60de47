#pragma once

#include <cmath>
#include <cstdint>

namespace levytax {

/*
 * Counter-based random generator. Each (seed, stream, path_index) triple names an
 * independent substream; draw i of a substream is a pure function of the key and i.
 * Workers can therefore simulate disjoint path ranges in any order and still produce
 * the draws a single-threaded run would. The mixer is the splitmix64 finalizer applied
 * to key + i * golden_gamma.
 */
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t path_index)
        : key_(derive_key(seed, stream, path_index)), counter_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t z = key_ + (counter_++) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: never 0, so -log(u) is always finite.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t path_index) {
        std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ULL);
        k = mix(k ^ (stream + 0xD1B54A32D192ED03ULL));
        k = mix(k ^ (path_index + 0x8CB92BA72F3D8DD7ULL));
        return k;
    }

    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace levytax
