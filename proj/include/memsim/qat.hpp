#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "memsim/dataset.hpp"
#include "memsim/matrix.hpp"
#include "memsim/random.hpp"

namespace memsim {

enum class ObserverTarget : std::uint8_t { Weight, Activation };

/// Running max-abs statistic of a tensor. Never decays.
struct Observer {
    double running_max_abs = 0.0;
    ObserverTarget target = ObserverTarget::Weight;

    bool operator==(const Observer&) const = default;
};

/// max(running_max_abs, max|tensor|). Throws DivergenceError on non-finite input.
Observer observe(Observer obs, std::span<const double> tensor);

/// scale = running_max_abs / (2^(bits-1) - 1); zero when the observer is empty.
double observer_scale(const Observer& obs, int bits);

/**
 * Symmetric fake quantization: clamp(round(t / scale), -L, L) * scale, with
 * rounding half away from zero. An empty observer passes the tensor through
 * unchanged and warns.
 */
std::vector<double> fake_quant(std::span<const double> tensor, const Observer& obs, int bits);

/// Straight-through gradient: grad_out where |t| <= L * scale, zero outside.
std::vector<double> fake_quant_backward(std::span<const double> grad_out, std::span<const double> tensor,
                                        const Observer& obs, int bits);

struct DenseLayer {
    RealMatrix weight;  ///< in x out
    std::vector<double> bias;

    std::size_t in_features() const noexcept { return weight.rows(); }
    std::size_t out_features() const noexcept { return weight.cols(); }
};

/// Observers attached to every dense layer: one on the weights, one on the layer input.
struct QuantState {
    int weight_bits = 8;
    int activation_bits = 8;
    std::vector<Observer> weight_observers;
    std::vector<Observer> input_observers;

    bool operator==(const QuantState&) const = default;
};

/// Dense ReLU network with a softmax output. Biases stay full precision.
struct TinyNet {
    std::vector<DenseLayer> layers;
    std::optional<QuantState> quant;

    /// He-initialised network with sizes {input, hidden..., classes}.
    static TinyNet create(std::span<const std::size_t> sizes, RandomStream& rng);

    std::size_t input_dim() const { return layers.front().in_features(); }
    std::size_t output_dim() const { return layers.back().out_features(); }
};

/// Logits for one sample. Applies frozen fake quantization when the net carries QuantState.
std::vector<double> net_forward(const TinyNet& net, std::span<const double> x);

/// Accuracy in [0, 1] of the digital (optionally fake-quantized) network.
double evaluate_accuracy(const TinyNet& net, const Dataset& data);
double evaluate_loss(const TinyNet& net, const Dataset& data);

struct TrainConfig {
    int epochs = 30;
    std::size_t batch_size = 32;
    double peak_lr = 0.05;
    /// Fraction of all steps spent warming up linearly; the rest decays linearly to 0.
    double warmup_fraction = 0.1;
    std::uint64_t seed = 1;
};

/// Learning rate at a step under the linear warmup / linear decay schedule.
double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps);

struct EpochStat {
    int epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainResult {
    TinyNet net;
    std::vector<EpochStat> curve;
};

/// Plain full-precision training. Throws DivergenceError (with the seed) on a non-finite loss.
TrainResult train_float(TinyNet net, const TaskData& data, const TrainConfig& config);

/**
 * Quantization-aware training from the first step: every forward observes and
 * fake-quantizes each layer's weights (weight_bits) and input (8 bits);
 * gradients pass straight through inside the clamp range. Observers are
 * frozen in the returned net.
 */
TrainResult train_qat(TinyNet net, const TaskData& data, int weight_bits, const TrainConfig& config);

/**
 * Post-training quantization: weights are fake-quantized once from their
 * max-abs, then one calibration pass populates the 8-bit input observers.
 */
TinyNet ptq_quantize(const TinyNet& net, const RealMatrix& calibration_batch, int weight_bits);

/**
 * Gradients of the mean cross-entropy over `batch` with respect to every
 * weight matrix, with straight-through fake quantization when `net.quant` is
 * set. Exposed for gradient checking.
 */
std::vector<RealMatrix> weight_gradients(const TinyNet& net, const RealMatrix& batch, std::span<const int> labels);

/// Mean cross-entropy of `net` on a batch, evaluated with the weight matrices replaced by `weights`.
double batch_loss_with_weights(const TinyNet& net, std::span<const RealMatrix> weights, const RealMatrix& batch,
                               std::span<const int> labels);

} // namespace memsim
