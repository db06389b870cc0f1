#include "memsim/qat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "memsim/errors.hpp"
#include "memsim/log.hpp"

namespace memsim {

namespace {

int levels_for(int bits) {
    if (bits < 2 || bits > 16) throw PreconditionError("quantization bits must be in [2, 16]");
    return (1 << (bits - 1)) - 1;
}

double quantize_value(double t, double scale, int levels) {
    const double l = levels;
    return std::clamp(std::round(t / scale), -l, l) * scale;
}

} // namespace

Observer observe(Observer obs, std::span<const double> tensor) {
    double m = obs.running_max_abs;
    for (double t : tensor) {
        if (!std::isfinite(t)) throw DivergenceError("non-finite value reached an observer");
        m = std::max(m, std::abs(t));
    }
    obs.running_max_abs = m;
    return obs;
}

double observer_scale(const Observer& obs, int bits) {
    return obs.running_max_abs / levels_for(bits);
}

std::vector<double> fake_quant(std::span<const double> tensor, const Observer& obs, int bits) {
    const int levels = levels_for(bits);
    std::vector<double> out(tensor.begin(), tensor.end());
    if (!(obs.running_max_abs > 0.0)) {
        warn("fake_quant with an empty observer: passing tensor through");
        return out;
    }
    const double scale = obs.running_max_abs / levels;
    for (double& t : out) t = quantize_value(t, scale, levels);
    return out;
}

std::vector<double> fake_quant_backward(std::span<const double> grad_out, std::span<const double> tensor,
                                        const Observer& obs, int bits) {
    if (grad_out.size() != tensor.size()) throw ShapeError("gradient and tensor sizes differ");
    levels_for(bits);  // range check only; the pass-through band does not depend on the grid
    std::vector<double> grad(grad_out.begin(), grad_out.end());
    if (!(obs.running_max_abs > 0.0)) return grad;
    const double bound = obs.running_max_abs;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (std::abs(tensor[i]) > bound) grad[i] = 0.0;
    }
    return grad;
}

TinyNet TinyNet::create(std::span<const std::size_t> sizes, RandomStream& rng) {
    if (sizes.size() < 2) throw PreconditionError("network needs at least input and output sizes");
    TinyNet net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (sizes[l] == 0 || sizes[l + 1] == 0) throw PreconditionError("layer sizes must be positive");
        DenseLayer layer{RealMatrix(sizes[l], sizes[l + 1]), std::vector<double>(sizes[l + 1], 0.0)};
        const double std = std::sqrt(2.0 / static_cast<double>(sizes[l]));
        for (double& w : layer.weight.data()) w = rng.normal(0.0, std);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

// Weights as seen by the forward pass: fake-quantized when the net carries QuantState.
std::vector<RealMatrix> effective_weights(const TinyNet& net) {
    std::vector<RealMatrix> out;
    out.reserve(net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const RealMatrix& w = net.layers[l].weight;
        if (!net.quant) {
            out.push_back(w);
            continue;
        }
        out.emplace_back(w.rows(), w.cols(), fake_quant(w.data(), net.quant->weight_observers[l], net.quant->weight_bits));
    }
    return out;
}

void check_quant_state(const TinyNet& net) {
    if (net.quant && (net.quant->weight_observers.size() != net.layers.size() ||
                      net.quant->input_observers.size() != net.layers.size())) {
        throw ShapeError("quantization state does not cover every layer");
    }
}

// y = x * W + b for one sample
void affine(std::span<const double> x, const RealMatrix& w, std::span<const double> b, std::span<double> y) {
    std::copy(b.begin(), b.end(), y.begin());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        const auto row = w.row(i);
        for (std::size_t j = 0; j < w.cols(); ++j) y[j] += xi * row[j];
    }
}

std::vector<double> forward_with(const TinyNet& net, std::span<const RealMatrix> weights, std::span<const double> x) {
    if (x.size() != net.input_dim()) throw ShapeError("input width does not match network");
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (net.quant) act = fake_quant(act, net.quant->input_observers[l], net.quant->activation_bits);
        std::vector<double> z(net.layers[l].out_features());
        affine(act, weights[l], net.layers[l].bias, z);
        if (l + 1 < net.layers.size()) {
            for (double& v : z) v = std::max(v, 0.0);
        }
        act = std::move(z);
    }
    return act;
}

double cross_entropy(std::span<const double> logits, int label, std::span<double> prob_out) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        prob_out[k] = std::exp(logits[k] - m);
        sum += prob_out[k];
    }
    for (double& p : prob_out) p /= sum;
    return -(logits[static_cast<std::size_t>(label)] - m - std::log(sum));
}

int argmax(std::span<const double> v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

std::vector<double> net_forward(const TinyNet& net, std::span<const double> x) {
    check_quant_state(net);
    const auto weights = effective_weights(net);
    return forward_with(net, weights, x);
}

double evaluate_accuracy(const TinyNet& net, const Dataset& data) {
    check_quant_state(net);
    const auto weights = effective_weights(net);
    std::size_t correct = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        if (argmax(forward_with(net, weights, data.features.row(n))) == data.labels[n]) ++correct;
    }
    return data.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size());
}

double evaluate_loss(const TinyNet& net, const Dataset& data) {
    return batch_loss_with_weights(net, effective_weights(net), data.features, data.labels);
}

double batch_loss_with_weights(const TinyNet& net, std::span<const RealMatrix> weights, const RealMatrix& batch,
                               std::span<const int> labels) {
    check_quant_state(net);
    if (weights.size() != net.layers.size()) throw ShapeError("one weight matrix per layer required");
    if (batch.rows() != labels.size()) throw ShapeError("batch and label counts differ");
    std::vector<double> prob(net.output_dim());
    double total = 0.0;
    for (std::size_t n = 0; n < batch.rows(); ++n) {
        total += cross_entropy(forward_with(net, weights, batch.row(n)), labels[n], prob);
    }
    return batch.rows() == 0 ? 0.0 : total / static_cast<double>(batch.rows());
}

double scheduled_lr(const TrainConfig& config, std::size_t step, std::size_t total_steps) {
    if (total_steps == 0) return 0.0;
    const double t = (static_cast<double>(step) + 0.5) / static_cast<double>(total_steps);
    const double w = std::clamp(config.warmup_fraction, 0.0, 1.0);
    if (w > 0.0 && t < w) return config.peak_lr * t / w;
    if (w >= 1.0) return config.peak_lr;
    return config.peak_lr * std::max(0.0, (1.0 - t) / (1.0 - w));
}

namespace {

struct LayerCache {
    RealMatrix input;       // quantized input used in the product, batch x in
    RealMatrix raw_input;   // pre-quantization input
    RealMatrix weight;      // effective (quantized) weight
    RealMatrix pre_act;     // batch x out
};

struct BatchGrad {
    std::vector<RealMatrix> weight;
    std::vector<std::vector<double>> bias;
    double loss = 0.0;
};

// Forward + backward over a batch. When `update_observers` is set, QuantState
// observers are updated from this batch before quantizing (training mode).
BatchGrad batch_backprop(TinyNet& net, const RealMatrix& batch, std::span<const int> labels, bool update_observers) {
    const std::size_t count = batch.rows();
    const std::size_t depth = net.layers.size();
    std::vector<LayerCache> cache(depth);

    RealMatrix act = batch;
    for (std::size_t l = 0; l < depth; ++l) {
        DenseLayer& layer = net.layers[l];
        LayerCache& c = cache[l];
        c.raw_input = act;
        if (net.quant) {
            QuantState& q = *net.quant;
            if (update_observers) {
                q.input_observers[l] = observe(q.input_observers[l], act.data());
                q.weight_observers[l] = observe(q.weight_observers[l], layer.weight.data());
            }
            c.input = RealMatrix(act.rows(), act.cols(), fake_quant(act.data(), q.input_observers[l], q.activation_bits));
            c.weight = RealMatrix(layer.weight.rows(), layer.weight.cols(),
                                  fake_quant(layer.weight.data(), q.weight_observers[l], q.weight_bits));
        } else {
            c.input = act;
            c.weight = layer.weight;
        }
        c.pre_act = RealMatrix(count, layer.out_features());
        for (std::size_t n = 0; n < count; ++n) affine(c.input.row(n), c.weight, layer.bias, c.pre_act.row(n));
        act = c.pre_act;
        if (l + 1 < depth) {
            for (double& v : act.data()) v = std::max(v, 0.0);
        }
    }

    BatchGrad g;
    g.weight.resize(depth);
    g.bias.resize(depth);
    RealMatrix delta(count, net.output_dim());
    std::vector<double> prob(net.output_dim());
    for (std::size_t n = 0; n < count; ++n) {
        g.loss += cross_entropy(act.row(n), labels[n], prob);
        for (std::size_t k = 0; k < prob.size(); ++k) {
            delta(n, k) = (prob[k] - (static_cast<int>(k) == labels[n] ? 1.0 : 0.0)) / static_cast<double>(count);
        }
    }
    g.loss /= static_cast<double>(count);

    for (std::size_t l = depth; l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const LayerCache& c = cache[l];
        RealMatrix dw(layer.in_features(), layer.out_features());
        std::vector<double> db(layer.out_features(), 0.0);
        for (std::size_t n = 0; n < count; ++n) {
            const auto d = delta.row(n);
            const auto x = c.input.row(n);
            for (std::size_t j = 0; j < db.size(); ++j) db[j] += d[j];
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (x[i] == 0.0) continue;
                auto row = dw.row(i);
                for (std::size_t j = 0; j < d.size(); ++j) row[j] += x[i] * d[j];
            }
        }
        if (net.quant) {
            dw = RealMatrix(dw.rows(), dw.cols(),
                            fake_quant_backward(dw.data(), layer.weight.data(), net.quant->weight_observers[l],
                                                net.quant->weight_bits));
        }
        g.weight[l] = std::move(dw);
        g.bias[l] = std::move(db);

        if (l == 0) break;
        RealMatrix dx(count, layer.in_features(), 0.0);
        for (std::size_t n = 0; n < count; ++n) {
            const auto d = delta.row(n);
            auto out = dx.row(n);
            for (std::size_t i = 0; i < out.size(); ++i) {
                const auto row = c.weight.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < d.size(); ++j) s += row[j] * d[j];
                out[i] = s;
            }
        }
        if (net.quant) {
            dx = RealMatrix(dx.rows(), dx.cols(),
                            fake_quant_backward(dx.data(), c.raw_input.data(), net.quant->input_observers[l],
                                                net.quant->activation_bits));
        }
        // ReLU of the previous layer
        const RealMatrix& prev = cache[l - 1].pre_act;
        for (std::size_t k = 0; k < dx.size(); ++k) {
            if (prev.data()[k] <= 0.0) dx.data()[k] = 0.0;
        }
        delta = std::move(dx);
    }
    return g;
}

TrainResult train_impl(TinyNet net, const TaskData& data, const TrainConfig& config) {
    if (config.epochs < 1 || config.batch_size == 0) throw PreconditionError("training needs epochs >= 1 and batch >= 1");
    if (data.train.dim() != net.input_dim()) throw ShapeError("dataset width does not match network input");

    RandomStream rng(config.seed);
    RandomStream shuffle_rng = rng.child(7);
    const std::size_t n = data.train.size();
    const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const std::size_t total_steps = steps_per_epoch * static_cast<std::size_t>(config.epochs);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    TrainResult result;
    std::size_t step = 0;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++step) {
            const std::size_t count = std::min(config.batch_size, n - start);
            RealMatrix batch(count, data.train.dim());
            std::vector<int> labels(count);
            for (std::size_t b = 0; b < count; ++b) {
                const std::size_t src = order[start + b];
                std::copy(data.train.features.row(src).begin(), data.train.features.row(src).end(),
                          batch.row(b).begin());
                labels[b] = data.train.labels[src];
            }
            BatchGrad g;
            try {
                g = batch_backprop(net, batch, labels, true);
            } catch (const DivergenceError& e) {
                throw DivergenceError(e.what(), config.seed);
            }
            if (!std::isfinite(g.loss)) {
                throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch), config.seed);
            }
            loss_sum += g.loss * static_cast<double>(count);
            const double lr = scheduled_lr(config, step, total_steps);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                auto w = net.layers[l].weight.data();
                const auto dw = g.weight[l].data();
                for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * dw[k];
                auto& b = net.layers[l].bias;
                for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * g.bias[l][k];
            }
        }
        result.curve.push_back({epoch, loss_sum / static_cast<double>(n), evaluate_accuracy(net, data.test)});
    }
    result.net = std::move(net);
    return result;
}

} // namespace

std::vector<RealMatrix> weight_gradients(const TinyNet& net, const RealMatrix& batch, std::span<const int> labels) {
    check_quant_state(net);
    if (batch.rows() != labels.size()) throw ShapeError("batch and label counts differ");
    TinyNet copy = net;
    return batch_backprop(copy, batch, labels, false).weight;
}

TrainResult train_float(TinyNet net, const TaskData& data, const TrainConfig& config) {
    net.quant.reset();
    return train_impl(std::move(net), data, config);
}

TrainResult train_qat(TinyNet net, const TaskData& data, int weight_bits, const TrainConfig& config) {
    if (weight_bits < 2 || weight_bits > 8) throw PreconditionError("QAT weight bits must be in [2, 8]");
    QuantState q;
    q.weight_bits = weight_bits;
    q.activation_bits = 8;
    q.weight_observers.assign(net.layers.size(), Observer{0.0, ObserverTarget::Weight});
    q.input_observers.assign(net.layers.size(), Observer{0.0, ObserverTarget::Activation});
    net.quant = std::move(q);
    return train_impl(std::move(net), data, config);
}

TinyNet ptq_quantize(const TinyNet& net, const RealMatrix& calibration_batch, int weight_bits) {
    if (weight_bits < 2 || weight_bits > 8) throw PreconditionError("PTQ weight bits must be in [2, 8]");
    if (calibration_batch.cols() != net.input_dim()) throw ShapeError("calibration batch width does not match network");
    TinyNet out = net;
    QuantState q;
    q.weight_bits = weight_bits;
    q.activation_bits = 8;
    for (DenseLayer& layer : out.layers) {
        const Observer obs = observe(Observer{0.0, ObserverTarget::Weight}, layer.weight.data());
        layer.weight = RealMatrix(layer.weight.rows(), layer.weight.cols(), fake_quant(layer.weight.data(), obs, weight_bits));
        q.weight_observers.push_back(obs);
    }

    // calibration pass: quantized weights, full-precision activations
    q.input_observers.assign(out.layers.size(), Observer{0.0, ObserverTarget::Activation});
    for (std::size_t n = 0; n < calibration_batch.rows(); ++n) {
        std::vector<double> act(calibration_batch.row(n).begin(), calibration_batch.row(n).end());
        for (std::size_t l = 0; l < out.layers.size(); ++l) {
            q.input_observers[l] = observe(q.input_observers[l], act);
            std::vector<double> z(out.layers[l].out_features());
            affine(act, out.layers[l].weight, out.layers[l].bias, z);
            if (l + 1 < out.layers.size()) {
                for (double& v : z) v = std::max(v, 0.0);
            }
            act = std::move(z);
        }
    }
    out.quant = std::move(q);
    return out;
}

} // namespace memsim
