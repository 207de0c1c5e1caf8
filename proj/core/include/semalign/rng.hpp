#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace semalign {

/// Deterministic random generator. Wraps std::mt19937_64 but performs all
/// variate transforms itself, so identical seeds give identical streams on
/// every platform (std distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (one variate per call).
    double normal();

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t index(std::size_t n);

    /// Fisher-Yates shuffle.
    void shuffle(std::vector<std::size_t>& items);

    /// Independent substream. Pure function of the construction seed and
    /// `stream`; does not consume or depend on this generator's state.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

    /// Full state round-trip for checkpoints.
    std::string state_string() const;
    static Rng from_state(const std::string& state);

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

/// SplitMix64 finalizer; used for seed derivation.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace semalign
