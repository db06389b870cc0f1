#pragma once

#include <cstdint>

namespace memsim {

/// Symmetric signed mid-tread converter grid with L = 2^(bits-1) - 1 levels per side.
struct ConverterSpec {
    int bits = 8;
    /// Volts for a DAC, amperes for an ADC.
    double full_scale = 0.6;

    int max_level() const noexcept { return (1 << (bits - 1)) - 1; }
    double step() const noexcept { return full_scale / max_level(); }
    void validate() const;

    bool operator==(const ConverterSpec&) const = default;
};

/// Conversion tally. Counters from independent runs merge by summation.
struct SaturationCounter {
    std::uint64_t conversions = 0;
    std::uint64_t saturated = 0;

    void merge(const SaturationCounter& other) noexcept {
        conversions += other.conversions;
        saturated += other.saturated;
    }
    double ratio() const noexcept {
        return conversions == 0 ? 0.0 : static_cast<double>(saturated) / static_cast<double>(conversions);
    }
};

/// Integer DAC code for a normalized input; clamps to [-1, 1].
int dac_code(double x_norm, const ConverterSpec& spec);
/// Read voltage for a normalized input; clamps to [-1, 1].
double dac(double x_norm, const ConverterSpec& spec);

/// Quantize a current to a code in [-L, L]. Saturation is silent apart from the counter.
int adc(double current, const ConverterSpec& spec);
int adc(double current, const ConverterSpec& spec, SaturationCounter& counter);
/// Current represented by an ADC code.
double adc_decode(int code, const ConverterSpec& spec);

} // namespace memsim
