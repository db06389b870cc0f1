#include "memsim/device_model.hpp"

#include <cmath>
#include <string>

#include "memsim/errors.hpp"

namespace memsim {

DeviceModelParams DeviceModelParams::starting_point() {
    DeviceModelParams p;
    p.g_low_mean = 42e-6;
    p.g_high_mean = 250e-6;
    p.g_high_rel_std = 0.06;
    p.g_low_rel_std = 0.25;
    p.g_half_rel_std = 0.18;
    p.nonlin_alpha = 0.0;
    p.read_noise_rel_std = 0.02;
    p.v_read_max = 0.6;
    return p;
}

DeviceModelParams DeviceModelParams::noiseless() const {
    DeviceModelParams p = *this;
    p.g_low_rel_std = 0.0;
    p.g_high_rel_std = 0.0;
    p.g_half_rel_std = 0.0;
    p.read_noise_rel_std = 0.0;
    return p;
}

DeviceModelParams DeviceModelParams::ideal() const {
    DeviceModelParams p = noiseless();
    p.nonlin_alpha = 0.0;
    return p;
}

void DeviceModelParams::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!(finite(g_low_mean) && finite(g_high_mean) && finite(g_low_rel_std) && finite(g_high_rel_std) &&
          finite(g_half_rel_std) && finite(nonlin_alpha) && finite(read_noise_rel_std) && finite(v_read_max))) {
        throw PreconditionError("device parameters must be finite");
    }
    if (!(g_low_mean > 0.0)) throw PreconditionError("g_low_mean must be positive");
    if (!(g_high_mean > g_low_mean)) throw PreconditionError("g_high_mean must exceed g_low_mean");
    if (g_low_rel_std < 0.0 || g_high_rel_std < 0.0 || g_half_rel_std < 0.0 || read_noise_rel_std < 0.0) {
        throw PreconditionError("relative standard deviations must be non-negative");
    }
    if (!(v_read_max > 0.0)) throw PreconditionError("v_read_max must be positive");
}

namespace {

double truncated_normal(double mean, double stddev, RandomStream& rng) {
    if (stddev == 0.0) return mean;
    for (;;) {
        const double g = rng.normal(mean, stddev);
        if (g > 0.0) return g;
    }
}

} // namespace

ProgrammedCell program_cell(const DeviceModelParams& params, CellTarget target, RandomStream& rng) {
    double mean = 0.0;
    double rel_std = 0.0;
    switch (target) {
    case CellTarget::Low:
        mean = params.g_low_mean;
        rel_std = params.g_low_rel_std;
        break;
    case CellTarget::High:
        mean = params.g_high_mean;
        rel_std = params.g_high_rel_std;
        break;
    case CellTarget::Half:
        mean = params.g_half_mean();
        rel_std = params.g_half_rel_std;
        break;
    case CellTarget::Reset:
        throw PreconditionError("Reset is not a programming target; use reset_cell_random");
    }
    return {truncated_normal(mean, mean * rel_std, rng), target};
}

double expected_current(const ProgrammedCell& cell, const DeviceModelParams& params, double v) {
    return cell.g_actual * v * (1.0 + params.nonlin_alpha * v);
}

double read_current(const ProgrammedCell& cell, const DeviceModelParams& params, double v, RandomStream& rng) {
    if (!(std::abs(v) <= params.v_read_max)) {
        throw RangeError("read voltage " + std::to_string(v) + " V outside +/-" + std::to_string(params.v_read_max) +
                         " V");
    }
    const double i = expected_current(cell, params, v);
    if (params.read_noise_rel_std == 0.0) return i;
    return i * (1.0 + rng.normal(0.0, params.read_noise_rel_std));
}

ProgrammedCell reset_cell_random(const ProgrammedCell& /*cell*/, const DeviceModelParams& params, int num_pulses,
                                 RandomStream& rng) {
    if (num_pulses < 1) throw PreconditionError("reset needs at least one pulse");
    double g = 0.0;
    for (int p = 0; p < num_pulses; ++p) {
        g = rng.uniform(params.g_low_mean, params.g_high_mean);
    }
    return {g, CellTarget::Reset};
}

} // namespace memsim
