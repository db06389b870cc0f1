#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace memsim {

/// Mismatched vector/matrix dimensions.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value outside its physical or representable range (read voltage, weight level).
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Caller violated an operation contract (counts, invalid parameters).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Correction-factor fit or device calibration could not produce a usable result.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or tensor. Carries the seed for reproduction when known.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
    DivergenceError(const std::string& what, std::uint64_t seed)
        : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}

    std::optional<std::uint64_t> seed() const noexcept { return seed_; }

private:
    std::optional<std::uint64_t> seed_;
};

} // namespace memsim
