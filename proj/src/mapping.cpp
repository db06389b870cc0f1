#include "memsim/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "memsim/errors.hpp"
#include "memsim/log.hpp"

namespace memsim {

void QuantScheme::validate() const {
    if (bits < 2 || bits > 8) throw PreconditionError("weight bits must be in [2, 8], got " + std::to_string(bits));
    if (!(scale > 0.0) || !std::isfinite(scale)) throw PreconditionError("quantization scale must be positive");
}

QuantScheme QuantScheme::from_max_abs(double max_abs, int bits) {
    QuantScheme scheme{bits, 1.0};
    if (max_abs > 0.0) {
        scheme.scale = max_abs / scheme.max_level();
    } else {
        warn("all-zero tensor: quantization scale defaults to 1");
    }
    scheme.validate();
    return scheme;
}

QuantScheme QuantScheme::from_weights(const RealMatrix& weights, int bits) {
    double max_abs = 0.0;
    for (double w : weights.data()) max_abs = std::max(max_abs, std::abs(w));
    return from_max_abs(max_abs, bits);
}

IntMatrix quantize_weights(const RealMatrix& weights, const QuantScheme& scheme) {
    scheme.validate();
    const double levels = scheme.max_level();
    IntMatrix q(weights.rows(), weights.cols());
    auto out = q.data();
    auto in = weights.data();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (!std::isfinite(in[i])) throw RangeError("non-finite weight at flat index " + std::to_string(i));
        out[i] = static_cast<int>(std::clamp(std::round(in[i] / scheme.scale), -levels, levels));
    }
    return q;
}

std::vector<int> decompose_bits(int q, int bits) {
    if (bits < 2 || bits > 30) throw PreconditionError("bits must be in [2, 30]");
    const int max_level = (1 << (bits - 1)) - 1;
    if (q < -max_level || q > max_level) {
        throw RangeError("level " + std::to_string(q) + " outside [-" + std::to_string(max_level) + ", " +
                         std::to_string(max_level) + "]");
    }
    const int sign = q < 0 ? -1 : 1;
    const int magnitude = std::abs(q);
    std::vector<int> digits(static_cast<std::size_t>(bits - 1));
    for (int k = 0; k < bits - 1; ++k) {
        const int shift = bits - 2 - k;
        digits[static_cast<std::size_t>(k)] = ((magnitude >> shift) & 1) * sign;
    }
    return digits;
}

int compose_bits(std::span<const int> digits, int bits) {
    if (digits.size() != static_cast<std::size_t>(bits - 1)) {
        throw ShapeError("expected " + std::to_string(bits - 1) + " digits, got " + std::to_string(digits.size()));
    }
    int q = 0;
    for (std::size_t k = 0; k < digits.size(); ++k) {
        q += digits[k] * (1 << (bits - 2 - static_cast<int>(k)));
    }
    return q;
}

std::vector<CorrectionSample> sample_correction_pairs(const DeviceModelParams& params, std::size_t sample_count,
                                                      RandomStream& rng) {
    struct Pairing {
        CellTarget positive;
        CellTarget negative;
        double sign;
    };
    static constexpr Pairing pairings[] = {
        {CellTarget::High, CellTarget::Low, 1.0},
        {CellTarget::Low, CellTarget::Low, 0.0},
        {CellTarget::Low, CellTarget::High, -1.0},
    };

    std::vector<CorrectionSample> samples;
    samples.reserve(3 * sample_count);
    for (std::size_t k = 0; k < sample_count; ++k) {
        const double x = rng.uniform(-1.0, 1.0);
        const double v = x * params.v_read_max;
        for (const Pairing& p : pairings) {
            const ProgrammedCell pos = program_cell(params, p.positive, rng);
            const ProgrammedCell neg = program_cell(params, p.negative, rng);
            const double diff = read_current(pos, params, v, rng) - read_current(neg, params, v, rng);
            samples.push_back({p.sign * x, diff});
        }
    }
    return samples;
}

double solve_correction_factor(std::span<const CorrectionSample> samples) {
    double num = 0.0;
    double den = 0.0;
    for (const CorrectionSample& s : samples) {
        num += s.target * s.current;
        den += s.current * s.current;
    }
    if (!(den > 0.0)) throw CalibrationError("correction factor undefined: no current observed");
    return num / den;
}

double fit_correction_factor(const DeviceModelParams& params, std::size_t sample_count, RandomStream& rng) {
    if (sample_count < 1000) throw PreconditionError("correction fit needs at least 1000 samples");
    if (params.g_high_mean == params.g_low_mean) {
        throw CalibrationError("degenerate device: high and low conductance means coincide");
    }
    params.validate();
    const auto samples = sample_correction_pairs(params, sample_count, rng);
    const double c = solve_correction_factor(samples);
    if (!(c > 0.0) || !std::isfinite(c)) throw CalibrationError("fitted correction factor is not positive");
    return c;
}

namespace {

TernaryMatrix block_digits(const IntMatrix& levels, int bits, int level, std::size_t r0, std::size_t rows,
                           std::size_t c0, std::size_t cols) {
    TernaryMatrix digits(rows, cols);
    const int shift = bits - 2 - level;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const int q = levels(r0 + r, c0 + c);
            const int sign = q < 0 ? -1 : 1;
            digits(r, c) = ((std::abs(q) >> shift) & 1) * sign;
        }
    }
    return digits;
}

void program_all(MappedLinear& layer) {
    const std::size_t rb_count = layer.row_blocks();
    const std::size_t cb_count = layer.col_blocks();
    for (int level = 0; level < layer.bit_levels(); ++level) {
        for (std::size_t rb = 0; rb < rb_count; ++rb) {
            for (std::size_t cb = 0; cb < cb_count; ++cb) {
                CrossbarTile& t = layer.tile(level, rb, cb);
                t.program(block_digits(layer.levels, layer.bits, level, rb * layer.tile_rows, t.rows(),
                                       cb * layer.tile_cols, t.cols()));
            }
        }
    }
}

} // namespace

MappedLinear map_linear(const RealMatrix& weights, const QuantScheme& scheme, double input_scale,
                        const DeviceModelParams& params, const MappingOptions& options, RandomStream& rng) {
    if (weights.empty()) throw ShapeError("cannot map an empty weight matrix");
    if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw PreconditionError("input_scale must be positive");
    if (options.tile_rows == 0 || options.tile_cols == 0) throw PreconditionError("tile size must be positive");
    params.validate();
    options.dac.validate();

    MappedLinear layer;
    layer.in_features = weights.rows();
    layer.out_features = weights.cols();
    layer.bits = scheme.bits;
    layer.tile_rows = options.tile_rows;
    layer.tile_cols = options.tile_cols;
    layer.input_scale = input_scale;
    layer.weight_scale = scheme.scale;
    layer.seed = rng.seed();
    layer.params = params;
    layer.dac = options.dac;
    layer.levels = quantize_weights(weights, scheme);

    RandomStream c_rng = rng.child(0);
    layer.correction_factor = fit_correction_factor(params, options.correction_samples, c_rng);

    const std::size_t rb_count = layer.row_blocks();
    const std::size_t cb_count = layer.col_blocks();
    layer.tiles.reserve(static_cast<std::size_t>(layer.bit_levels()) * rb_count * cb_count);
    for (int level = 0; level < layer.bit_levels(); ++level) {
        for (std::size_t rb = 0; rb < rb_count; ++rb) {
            for (std::size_t cb = 0; cb < cb_count; ++cb) {
                const std::size_t rows = std::min(options.tile_rows, layer.in_features - rb * options.tile_rows);
                const std::size_t cols = std::min(options.tile_cols, layer.out_features - cb * options.tile_cols);
                const std::size_t index = layer.tiles.size();
                layer.tiles.emplace_back(rows, cols, params, options.dac, options.adc, rng.child(index + 1),
                                         options.tile_rows, options.tile_cols);
            }
        }
    }
    program_all(layer);
    return layer;
}

void reprogram(MappedLinear& layer, int reset_pulses, RandomStream& rng) {
    for (std::size_t t = 0; t < layer.tiles.size(); ++t) {
        layer.tiles[t].set_stream(rng.child(t + 1));
        layer.tiles[t].reset_random(reset_pulses);
    }
    layer.seed = rng.seed();
    program_all(layer);
}

namespace {

std::vector<double> row_voltages(const MappedLinear& layer, std::span<const double> x) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = dac(x[i] * layer.input_scale, layer.dac);
    return v;
}

std::vector<double> forward_impl(const MappedLinear& layer, std::span<const double> x, RandomStream& rng,
                                 SaturationCounter& counter) {
    if (x.size() != layer.in_features) {
        throw ShapeError("forward got " + std::to_string(x.size()) + " inputs, layer expects " +
                         std::to_string(layer.in_features));
    }
    const std::vector<double> voltages = row_voltages(layer, x);
    const std::size_t rb_count = layer.row_blocks();
    const std::size_t cb_count = layer.col_blocks();

    std::vector<double> shifted(layer.out_features, 0.0);
    std::vector<double> level_sum(layer.out_features);
    for (int level = 0; level < layer.bit_levels(); ++level) {
        std::fill(level_sum.begin(), level_sum.end(), 0.0);
        for (std::size_t rb = 0; rb < rb_count; ++rb) {
            const std::size_t r0 = rb * layer.tile_rows;
            for (std::size_t cb = 0; cb < cb_count; ++cb) {
                const CrossbarTile& t = layer.tile(level, rb, cb);
                const std::span<const double> v(voltages.data() + r0, t.rows());
                const std::vector<double> currents = t.vmm(v, rng);
                const std::size_t c0 = cb * layer.tile_cols;
                for (std::size_t j = 0; j < t.cols(); ++j) {
                    const int code = adc(currents[j], t.adc_spec(), counter);
                    level_sum[c0 + j] += layer.correction_factor * adc_decode(code, t.adc_spec());
                }
            }
        }
        const double significance = layer.significance(level);
        for (std::size_t j = 0; j < layer.out_features; ++j) shifted[j] += significance * level_sum[j];
    }

    const double descale = layer.weight_scale / layer.input_scale;
    for (double& y : shifted) y *= descale;
    return shifted;
}

} // namespace

std::vector<double> forward(const MappedLinear& layer, std::span<const double> x, RandomStream& rng) {
    SaturationCounter ignored;
    return forward_impl(layer, x, rng, ignored);
}

std::vector<double> forward(const MappedLinear& layer, std::span<const double> x, RandomStream& rng,
                            SaturationCounter& counter) {
    return forward_impl(layer, x, rng, counter);
}

void calibrate_adc_ranges(MappedLinear& layer, const RealMatrix& inputs, double headroom) {
    if (inputs.cols() != layer.in_features) throw ShapeError("calibration batch width does not match layer");
    if (!(headroom > 0.0)) throw PreconditionError("ADC headroom must be positive");
    std::vector<double> peak(layer.tiles.size(), 0.0);
    for (std::size_t b = 0; b < inputs.rows(); ++b) {
        const std::vector<double> voltages = row_voltages(layer, inputs.row(b));
        for (std::size_t t = 0; t < layer.tiles.size(); ++t) {
            const CrossbarTile& tile = layer.tiles[t];
            const std::size_t rb = (t / layer.col_blocks()) % layer.row_blocks();
            const std::span<const double> v(voltages.data() + rb * layer.tile_rows, tile.rows());
            for (double i : tile.expected_vmm(v)) peak[t] = std::max(peak[t], std::abs(i));
        }
    }
    for (std::size_t t = 0; t < layer.tiles.size(); ++t) {
        if (peak[t] > 0.0) layer.tiles[t].set_adc_full_scale(headroom * peak[t]);
    }
}

} // namespace memsim
