#pragma once

#include <cstdint>

#include "memsim/random.hpp"

namespace memsim {

/**
 * Statistical description of a memristor cell population.
 *
 * Conductances are in siemens, voltages in volts. Programming draws a
 * conductance from a zero-truncated Gaussian around the target state's mean;
 * every read applies a quadratic I-V nonlinearity and multiplicative noise.
 * Thermal noise is folded into read_noise_rel_std.
 *
 * The default-constructed values are the calibrated set: paired readout
 * through a fitted correction factor reproduces the reference single-cell
 * statistics (see calibrate_device in harness.hpp).
 */
struct DeviceModelParams {
    double g_low_mean = 42e-6;
    double g_low_rel_std = 0.17;
    double g_high_mean = 250e-6;
    double g_high_rel_std = 0.04;
    double g_half_rel_std = 0.125;
    double nonlin_alpha = -0.0275;
    double read_noise_rel_std = 0.02;
    double v_read_max = 0.6;

    /// Uncalibrated starting point for the calibration search.
    static DeviceModelParams starting_point();
    /// Every variability source switched off; nonlinearity kept as given.
    DeviceModelParams noiseless() const;
    /// Noiseless and perfectly linear.
    DeviceModelParams ideal() const;

    double g_half_mean() const noexcept { return 0.5 * (g_low_mean + g_high_mean); }
    double delta_g() const noexcept { return g_high_mean - g_low_mean; }

    /// Throws PreconditionError when an invariant is violated.
    void validate() const;

    bool operator==(const DeviceModelParams&) const = default;
};

enum class CellTarget : std::uint8_t {
    Low,
    High,
    Half,
    /// Left by a random reset pulse sequence; not a programming target.
    Reset,
};

struct ProgrammedCell {
    double g_actual = 0.0;
    CellTarget target = CellTarget::Low;
};

ProgrammedCell program_cell(const DeviceModelParams& params, CellTarget target, RandomStream& rng);

/// Current through `cell` at read voltage `v`. Throws RangeError when |v| > v_read_max.
double read_current(const ProgrammedCell& cell, const DeviceModelParams& params, double v, RandomStream& rng);

/// Noise-free expected current; the nonlinearity still applies.
double expected_current(const ProgrammedCell& cell, const DeviceModelParams& params, double v);

/**
 * Apply `num_pulses` randomly drawn switching voltages. The final conductance
 * is uniform on [g_low_mean, g_high_mean] and independent of the prior state.
 */
ProgrammedCell reset_cell_random(const ProgrammedCell& cell, const DeviceModelParams& params, int num_pulses,
                                 RandomStream& rng);

} // namespace memsim
