#include "memsim/crossbar.hpp"

#include <cmath>
#include <string>

#include "memsim/errors.hpp"

namespace memsim {

CrossbarTile::CrossbarTile(std::size_t rows, std::size_t cols, DeviceModelParams params, ConverterSpec dac,
                           ConverterSpec adc, RandomStream rng, std::size_t max_rows, std::size_t max_cols)
    : params_(params), dac_(dac), adc_(adc), rng_(std::move(rng)) {
    params_.validate();
    dac_.validate();
    if (rows == 0 || cols == 0) throw ShapeError("crossbar tile needs at least one row and column");
    if (rows > max_rows || cols > max_cols) {
        throw ShapeError("tile " + std::to_string(rows) + "x" + std::to_string(cols) + " exceeds maximum " +
                         std::to_string(max_rows) + "x" + std::to_string(max_cols));
    }
    if (adc_.full_scale <= 0.0) {
        adc_.full_scale = static_cast<double>(rows) * params_.g_high_mean * params_.v_read_max;
    }
    adc_.validate();
    const CellPair zero{{params_.g_low_mean, CellTarget::Low}, {params_.g_low_mean, CellTarget::Low}};
    cells_ = Matrix<CellPair>(rows, cols, zero);
}

void CrossbarTile::set_adc_full_scale(double amperes) {
    ConverterSpec next = adc_;
    next.full_scale = amperes;
    next.validate();
    adc_ = next;
}

void CrossbarTile::program(const TernaryMatrix& weights) {
    if (weights.rows() != rows() || weights.cols() != cols()) {
        throw ShapeError("ternary weights " + std::to_string(weights.rows()) + "x" + std::to_string(weights.cols()) +
                         " do not match tile " + std::to_string(rows()) + "x" + std::to_string(cols()));
    }
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < cols(); ++c) {
            const int w = weights(r, c);
            CellTarget pos = CellTarget::Low;
            CellTarget neg = CellTarget::Low;
            if (w == 1) {
                pos = CellTarget::High;
            } else if (w == -1) {
                neg = CellTarget::High;
            } else if (w != 0) {
                throw RangeError("ternary weight " + std::to_string(w) + " not in {-1, 0, 1}");
            }
            CellPair& pair = cells_(r, c);
            pair.positive = program_cell(params_, pos, rng_);
            pair.negative = program_cell(params_, neg, rng_);
        }
    }
}

void CrossbarTile::reset_random(int num_pulses) {
    for (CellPair& pair : cells_.data()) {
        pair.positive = reset_cell_random(pair.positive, params_, num_pulses, rng_);
        pair.negative = reset_cell_random(pair.negative, params_, num_pulses, rng_);
    }
}

void CrossbarTile::check_voltages(std::span<const double> voltages) const {
    if (voltages.size() != rows()) {
        throw ShapeError("vmm got " + std::to_string(voltages.size()) + " voltages for " + std::to_string(rows()) +
                         " rows");
    }
    for (double v : voltages) {
        if (!(std::abs(v) <= params_.v_read_max)) {
            throw RangeError("row voltage " + std::to_string(v) + " V outside read range");
        }
    }
}

std::vector<double> CrossbarTile::vmm(std::span<const double> voltages, RandomStream& rng) const {
    check_voltages(voltages);
    if (params_.read_noise_rel_std == 0.0) return expected_vmm(voltages);

    std::vector<double> out(cols(), 0.0);
    const double sigma = params_.read_noise_rel_std;
    for (std::size_t r = 0; r < rows(); ++r) {
        const double v = voltages[r];
        // zero-voltage rows carry no current, noise included
        if (v == 0.0) continue;
        const double drive = v * (1.0 + params_.nonlin_alpha * v);
        const auto row = cells_.row(r);
        for (std::size_t c = 0; c < cols(); ++c) {
            const double i_pos = row[c].positive.g_actual * drive * (1.0 + sigma * rng.normal());
            const double i_neg = row[c].negative.g_actual * drive * (1.0 + sigma * rng.normal());
            out[c] += i_pos - i_neg;
        }
    }
    return out;
}

std::vector<double> CrossbarTile::expected_vmm(std::span<const double> voltages) const {
    check_voltages(voltages);
    std::vector<double> out(cols(), 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
        const double v = voltages[r];
        if (v == 0.0) continue;
        const double drive = v * (1.0 + params_.nonlin_alpha * v);
        const auto row = cells_.row(r);
        for (std::size_t c = 0; c < cols(); ++c) {
            out[c] += (row[c].positive.g_actual - row[c].negative.g_actual) * drive;
        }
    }
    return out;
}

double CrossbarTile::worst_case_current() const noexcept {
    return static_cast<double>(rows()) * params_.g_high_mean * params_.v_read_max;
}

} // namespace memsim
