#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "memsim/converter.hpp"
#include "memsim/crossbar.hpp"
#include "memsim/device_model.hpp"
#include "memsim/matrix.hpp"
#include "memsim/random.hpp"

namespace memsim {

/// Symmetric per-tensor quantization with the zero point fixed at 0.
struct QuantScheme {
    int bits = 4;
    double scale = 1.0;

    int max_level() const noexcept { return (1 << (bits - 1)) - 1; }
    void validate() const;

    /// scale = max|W| / L. An all-zero tensor gets scale 1 and a warning.
    static QuantScheme from_max_abs(double max_abs, int bits);
    static QuantScheme from_weights(const RealMatrix& weights, int bits);
};

/// round(W / scale), half away from zero, clamped to [-L, L].
IntMatrix quantize_weights(const RealMatrix& weights, const QuantScheme& scheme);

/**
 * Ternary digits of q, most significant first. Digit k has significance
 * 2^(bits-2-k); every nonzero digit carries sign(q). Throws RangeError when
 * |q| exceeds the level range of `bits`.
 */
std::vector<int> decompose_bits(int q, int bits);
int compose_bits(std::span<const int> digits, int bits);

/// One draw used by the correction-factor least-squares fit.
struct CorrectionSample {
    double target;   ///< x, 0 or -x
    double current;  ///< I+ - I- at read voltage x * v_read_max
};

/// Fresh (High,Low), (Low,Low), (Low,High) pairs read at x ~ U[-1, 1]; 3 * sample_count entries.
std::vector<CorrectionSample> sample_correction_pairs(const DeviceModelParams& params, std::size_t sample_count,
                                                      RandomStream& rng);

/// Least-squares c = sum(target * current) / sum(current^2).
double solve_correction_factor(std::span<const CorrectionSample> samples);

/**
 * Correction factor c in 1/A mapping paired current differences back to the
 * normalized product space. Requires sample_count >= 1000; throws
 * CalibrationError for degenerate devices.
 */
double fit_correction_factor(const DeviceModelParams& params, std::size_t sample_count, RandomStream& rng);

struct MappingOptions {
    ConverterSpec dac{8, 0.6};
    /// full_scale <= 0 selects the per-tile worst case rows * g_high_mean * v_read_max.
    ConverterSpec adc{8, 0.0};
    std::size_t tile_rows = kDefaultTileRows;
    std::size_t tile_cols = kDefaultTileCols;
    std::size_t correction_samples = 10000;
};

/**
 * A linear layer compiled onto stacked bit-level crossbars.
 *
 * Weights are stored input-major (in_features x out_features) so rows map to
 * crossbar rows. Tiles are indexed [bit_level][row_block][col_block]; bit
 * level 0 is the most significant.
 */
struct MappedLinear {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    int bits = 0;
    std::size_t tile_rows = kDefaultTileRows;
    std::size_t tile_cols = kDefaultTileCols;
    double input_scale = 1.0;   ///< raw activation -> [-1, 1]
    double weight_scale = 1.0;  ///< weight value of one integer level
    double correction_factor = 0.0;
    std::uint64_t seed = 0;
    DeviceModelParams params;
    ConverterSpec dac;
    IntMatrix levels;  ///< quantized weights, in x out
    std::vector<CrossbarTile> tiles;

    int bit_levels() const noexcept { return bits - 1; }
    int significance(int level) const noexcept { return 1 << (bits - 2 - level); }
    std::size_t row_blocks() const noexcept { return (in_features + tile_rows - 1) / tile_rows; }
    std::size_t col_blocks() const noexcept { return (out_features + tile_cols - 1) / tile_cols; }
    std::size_t tile_index(int level, std::size_t row_block, std::size_t col_block) const noexcept {
        return (static_cast<std::size_t>(level) * row_blocks() + row_block) * col_blocks() + col_block;
    }
    CrossbarTile& tile(int level, std::size_t rb, std::size_t cb) { return tiles[tile_index(level, rb, cb)]; }
    const CrossbarTile& tile(int level, std::size_t rb, std::size_t cb) const {
        return tiles[tile_index(level, rb, cb)];
    }
};

/**
 * Quantize, bit-decompose, tile and program `weights` (in x out). Tile t is
 * programmed from rng.child(t + 1); the correction factor is fitted on rng.child(0).
 */
MappedLinear map_linear(const RealMatrix& weights, const QuantScheme& scheme, double input_scale,
                        const DeviceModelParams& params, const MappingOptions& options, RandomStream& rng);

/**
 * Reset every cell with `reset_pulses` random pulses, then program the stored
 * levels again. Tile t draws from rng.child(t + 1), as in map_linear.
 */
void reprogram(MappedLinear& layer, int reset_pulses, RandomStream& rng);

/**
 * Analog forward pass: scale and DAC the input, run every tile, ADC each
 * column, decode, apply c, sum row blocks, shift-add bit levels, then undo
 * the input and weight scales.
 */
std::vector<double> forward(const MappedLinear& layer, std::span<const double> x, RandomStream& rng);
std::vector<double> forward(const MappedLinear& layer, std::span<const double> x, RandomStream& rng,
                            SaturationCounter& counter);

/**
 * Set each tile's ADC full scale to headroom * the largest noise-free column
 * current seen over `inputs` (batch x in_features). Tiles that never conduct
 * keep their current range.
 */
void calibrate_adc_ranges(MappedLinear& layer, const RealMatrix& inputs, double headroom);

} // namespace memsim
