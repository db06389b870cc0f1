#include "memsim/converter.hpp"

#include <algorithm>
#include <cmath>

#include "memsim/errors.hpp"

namespace memsim {

void ConverterSpec::validate() const {
    if (bits < 2 || bits > 30) throw PreconditionError("converter bits must be in [2, 30]");
    if (!(full_scale > 0.0) || !std::isfinite(full_scale)) {
        throw PreconditionError("converter full_scale must be positive and finite");
    }
}

int dac_code(double x_norm, const ConverterSpec& spec) {
    const double x = std::clamp(x_norm, -1.0, 1.0);
    // std::round rounds half away from zero, which keeps the grid odd-symmetric
    return static_cast<int>(std::round(x * spec.max_level()));
}

double dac(double x_norm, const ConverterSpec& spec) {
    return static_cast<double>(dac_code(x_norm, spec)) / spec.max_level() * spec.full_scale;
}

namespace {

int adc_impl(double current, const ConverterSpec& spec, bool& saturated) {
    const int levels = spec.max_level();
    const double scaled = std::round(current / spec.full_scale * levels);
    saturated = std::abs(scaled) > levels;
    return static_cast<int>(std::clamp(scaled, -static_cast<double>(levels), static_cast<double>(levels)));
}

} // namespace

int adc(double current, const ConverterSpec& spec) {
    bool saturated = false;
    return adc_impl(current, spec, saturated);
}

int adc(double current, const ConverterSpec& spec, SaturationCounter& counter) {
    bool saturated = false;
    const int code = adc_impl(current, spec, saturated);
    ++counter.conversions;
    if (saturated) ++counter.saturated;
    return code;
}

double adc_decode(int code, const ConverterSpec& spec) {
    return static_cast<double>(code) / spec.max_level() * spec.full_scale;
}

} // namespace memsim
