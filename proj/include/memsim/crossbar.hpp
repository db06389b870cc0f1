#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "memsim/converter.hpp"
#include "memsim/device_model.hpp"
#include "memsim/matrix.hpp"
#include "memsim/random.hpp"

namespace memsim {

inline constexpr std::size_t kDefaultTileRows = 128;
inline constexpr std::size_t kDefaultTileCols = 128;

/// One signed weight: the positive-bitline cell minus the negative-bitline cell.
struct CellPair {
    ProgrammedCell positive;
    ProgrammedCell negative;
};

/// Entries in {-1, 0, +1}.
using TernaryMatrix = Matrix<int>;

/**
 * A rows x cols block of paired cells (rows x 2*cols physical devices).
 *
 * Rows are driven by read voltages, each logical column is a positive and a
 * negative bitline whose currents are summed at ideal Kirchhoff nodes and
 * subtracted. Programming noise is frozen into the cells; read noise is drawn
 * fresh from the stream passed to each vmm call.
 */
class CrossbarTile {
public:
    CrossbarTile(std::size_t rows, std::size_t cols, DeviceModelParams params, ConverterSpec dac, ConverterSpec adc,
                 RandomStream rng, std::size_t max_rows = kDefaultTileRows, std::size_t max_cols = kDefaultTileCols);

    std::size_t rows() const noexcept { return cells_.rows(); }
    std::size_t cols() const noexcept { return cells_.cols(); }
    const DeviceModelParams& params() const noexcept { return params_; }
    const ConverterSpec& dac_spec() const noexcept { return dac_; }
    const ConverterSpec& adc_spec() const noexcept { return adc_; }
    void set_adc_full_scale(double amperes);

    const Matrix<CellPair>& cells() const noexcept { return cells_; }
    Matrix<CellPair>& cells() noexcept { return cells_; }

    /// +1 -> (High, Low), 0 -> (Low, Low), -1 -> (Low, High).
    void program(const TernaryMatrix& weights);
    /// Replace the programming stream.
    void set_stream(RandomStream rng) { rng_ = std::move(rng); }
    /// Random-pulse reset of every physical cell.
    void reset_random(int num_pulses);

    /// Column current differences I+ - I- for the given row voltages.
    std::vector<double> vmm(std::span<const double> voltages, RandomStream& rng) const;
    /// Same as vmm without read noise.
    std::vector<double> expected_vmm(std::span<const double> voltages) const;

    /// Worst-case column current, rows * g_high_mean * v_read_max.
    double worst_case_current() const noexcept;

private:
    void check_voltages(std::span<const double> voltages) const;

    DeviceModelParams params_;
    ConverterSpec dac_;
    ConverterSpec adc_;
    RandomStream rng_;
    Matrix<CellPair> cells_;
};

/// Free-function form of CrossbarTile::program.
inline void program_tile(CrossbarTile& tile, const TernaryMatrix& weights) { tile.program(weights); }

inline std::vector<double> vmm(const CrossbarTile& tile, std::span<const double> voltages, RandomStream& rng) {
    return tile.vmm(voltages, rng);
}

} // namespace memsim
