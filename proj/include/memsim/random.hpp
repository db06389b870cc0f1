#pragma once

#include <cstdint>
#include <random>

namespace memsim {

/**
 * Seeded random stream used by every stochastic operation.
 *
 * Child streams are derived from (seed, index) only, never from the parent's
 * current state, so a partition of work can be handed to independent workers
 * and still reproduce the sequential result bit for bit.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    /// Independent stream keyed by `index`. Does not advance this stream.
    RandomStream child(std::uint64_t index) const;

    double normal(double mean = 0.0, double stddev = 1.0);
    /// Uniform on [lo, hi).
    double uniform(double lo = 0.0, double hi = 1.0);
    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace memsim
