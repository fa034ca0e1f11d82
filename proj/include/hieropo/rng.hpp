#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hieropo {

/// Purpose tags for stream splitting. Every random quantity in a run is drawn
/// from the stream keyed by (seed, purpose, indices...), so it does not depend
/// on thread scheduling or on what other streams consumed.
enum class Stream : std::uint64_t {
    environment = 1,
    log = 2,
    evaluation = 3,
    optimal_precision = 4,
    recsys_tasks = 5,
    als_init = 6,
    gmm_init = 7,
    width_check = 8,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit Mersenne Twister (fully specified by the standard) with portable
/// uniform/normal transforms. std::*_distribution are implementation-defined,
/// so they are not used anywhere a reproducible draw is needed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Stream derived from a base seed, a purpose and up to a few indices.
    static Rng stream(std::uint64_t seed, Stream purpose, std::initializer_list<std::uint64_t> path = {});

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal via Box-Muller (second variate cached).
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace hieropo
