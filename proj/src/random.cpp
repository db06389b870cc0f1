#include "memsim/random.hpp"

namespace memsim {

namespace {

// splitmix64 finalizer, used to decorrelate (seed, index) pairs
std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(mix(seed)), static_cast<std::uint32_t>(mix(seed) >> 32)};
    return std::mt19937_64(seq);
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed) : seed_(seed), engine_(make_engine(seed)) {}

RandomStream RandomStream::child(std::uint64_t index) const {
    return RandomStream(mix(seed_ ^ mix(index + 0x632be59bd9b4e019ULL)));
}

double RandomStream::normal(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * std::generate_canonical<double, 53>(engine_);
}

} // namespace memsim
