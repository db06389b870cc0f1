#pragma once

#include <filesystem>
#include <iosfwd>

#include "memsim/mapping.hpp"
#include "memsim/qat.hpp"

namespace memsim {

/*
 * Checkpoint layout, all integers u64 and all reals f64, little-endian:
 *
 *   MappedLinear ("MEMXLIN1"):
 *     magic[8], version
 *     in_features, out_features, bits, tile_rows, tile_cols
 *     input_scale, weight_scale, correction_factor, seed
 *     dac.bits, dac.full_scale, adc.bits
 *     device params: g_low_mean, g_low_rel_std, g_high_mean, g_high_rel_std,
 *                    g_half_rel_std, nonlin_alpha, read_noise_rel_std, v_read_max
 *     levels: in_features * out_features signed integers (as i64), row-major
 *     tile_count, then per tile in [bit_level][row_block][col_block] order:
 *       rows, cols, adc.full_scale
 *       positive conductances, rows * cols f64, row-major
 *       negative conductances, rows * cols f64, row-major
 *       targets, 2 * rows * cols bytes (positive then negative)
 *
 *   TinyNet ("MEMXNET1"):
 *     magic[8], version, layer_count
 *     per layer: in, out, weights (in * out, row-major), bias (out)
 *     has_quant; if set: weight_bits, activation_bits, then per layer
 *     weight observer max, input observer max
 */

void write_mapped_linear(std::ostream& out, const MappedLinear& layer);
MappedLinear read_mapped_linear(std::istream& in);

void write_net(std::ostream& out, const TinyNet& net);
TinyNet read_net(std::istream& in);

void save_mapped_linear(const std::filesystem::path& path, const MappedLinear& layer);
MappedLinear load_mapped_linear(const std::filesystem::path& path);
void save_net(const std::filesystem::path& path, const TinyNet& net);
TinyNet load_net(const std::filesystem::path& path);

} // namespace memsim
