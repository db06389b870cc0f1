#include "memsim/c_api.h"

#include <exception>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_set>

#include "memsim/errors.hpp"
#include "memsim/mapping.hpp"
#include "memsim/qat.hpp"

struct memsim_layer {
    memsim::MappedLinear layer;
};

namespace {

thread_local std::string last_error;

std::mutex registry_mutex;
std::unordered_set<const memsim_layer*> live_handles;

bool is_live(const memsim_layer* h) {
    std::lock_guard lock(registry_mutex);
    return h != nullptr && live_handles.count(h) > 0;
}

int fail(int status, std::string message) {
    last_error = std::move(message);
    return status;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        last_error.clear();
        return MEMSIM_OK;
    } catch (const std::invalid_argument& e) {
        return fail(MEMSIM_INVALID_ARGUMENT, e.what());
    } catch (const std::out_of_range& e) {
        return fail(MEMSIM_INVALID_ARGUMENT, e.what());
    } catch (const std::exception& e) {
        return fail(MEMSIM_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(MEMSIM_INTERNAL_ERROR, "unknown error");
    }
}

memsim::DeviceModelParams to_params(const memsim_device_params& p) {
    memsim::DeviceModelParams out;
    out.g_low_mean = p.g_low_mean;
    out.g_low_rel_std = p.g_low_rel_std;
    out.g_high_mean = p.g_high_mean;
    out.g_high_rel_std = p.g_high_rel_std;
    out.g_half_rel_std = p.g_half_rel_std;
    out.nonlin_alpha = p.nonlin_alpha;
    out.read_noise_rel_std = p.read_noise_rel_std;
    out.v_read_max = p.v_read_max;
    return out;
}

} // namespace

extern "C" {

void memsim_default_device_params(memsim_device_params* out) {
    if (!out) return;
    const memsim::DeviceModelParams p;
    *out = {p.g_low_mean,     p.g_low_rel_std, p.g_high_mean,        p.g_high_rel_std,
            p.g_half_rel_std, p.nonlin_alpha,  p.read_noise_rel_std, p.v_read_max};
}

void memsim_default_layer_config(memsim_layer_config* out) {
    if (!out) return;
    const memsim::MappingOptions o;
    *out = {4, 0.0, 0.0, o.dac.bits, o.adc.bits, 0.0, o.tile_rows, o.tile_cols, o.correction_samples, 0};
}

int memsim_map_linear(const double* weights, size_t weights_len, size_t in_features, size_t out_features,
                      const memsim_layer_config* config, const memsim_device_params* params,
                      memsim_layer** out_handle) {
    if (!out_handle) return fail(MEMSIM_INVALID_ARGUMENT, "out_handle is NULL");
    *out_handle = nullptr;
    if (!weights || !config) return fail(MEMSIM_INVALID_ARGUMENT, "weights and config must not be NULL");
    if (in_features == 0 || out_features == 0 || weights_len != in_features * out_features) {
        return fail(MEMSIM_INVALID_ARGUMENT, "weights_len " + std::to_string(weights_len) + " does not match " +
                                                 std::to_string(in_features) + " x " + std::to_string(out_features));
    }
    return guarded([&] {
        const memsim::DeviceModelParams device = params ? to_params(*params) : memsim::DeviceModelParams{};
        memsim::RealMatrix w(in_features, out_features, std::vector<double>(weights, weights + weights_len));
        const memsim::QuantScheme scheme = config->weight_max_abs > 0.0
                                               ? memsim::QuantScheme::from_max_abs(config->weight_max_abs, config->bits)
                                               : memsim::QuantScheme::from_weights(w, config->bits);
        memsim::MappingOptions options;
        options.dac = {config->dac_bits, device.v_read_max};
        options.adc = {config->adc_bits, config->adc_full_scale};
        options.tile_rows = config->tile_rows;
        options.tile_cols = config->tile_cols;
        options.correction_samples = config->correction_samples;
        const double input_scale = config->input_max_abs > 0.0 ? 1.0 / config->input_max_abs : 1.0;
        memsim::RandomStream rng(config->seed);
        auto handle = std::make_unique<memsim_layer>(
            memsim_layer{memsim::map_linear(w, scheme, input_scale, device, options, rng)});
        std::lock_guard lock(registry_mutex);
        live_handles.insert(handle.get());
        *out_handle = handle.release();
    });
}

int memsim_forward(const memsim_layer* layer, const double* x, size_t batch, size_t in_features, uint64_t seed,
                   double* y, size_t y_len) {
    if (!is_live(layer)) return fail(MEMSIM_INVALID_HANDLE, "invalid or released layer handle");
    if ((!x && batch > 0) || (!y && batch > 0)) return fail(MEMSIM_INVALID_ARGUMENT, "NULL buffer");
    const memsim::MappedLinear& l = layer->layer;
    if (in_features != l.in_features) {
        return fail(MEMSIM_INVALID_ARGUMENT, "input width " + std::to_string(in_features) + " does not match layer " +
                                                 std::to_string(l.in_features));
    }
    if (y_len != batch * l.out_features) return fail(MEMSIM_INVALID_ARGUMENT, "output buffer has the wrong length");
    return guarded([&] {
        const memsim::RandomStream root(seed);
        for (size_t b = 0; b < batch; ++b) {
            memsim::RandomStream rng = root.child(b);
            const auto out = memsim::forward(l, std::span<const double>(x + b * in_features, in_features), rng);
            std::copy(out.begin(), out.end(), y + b * l.out_features);
        }
    });
}

int memsim_layer_dims(const memsim_layer* layer, size_t* in_features, size_t* out_features, int* bits) {
    if (!is_live(layer)) return fail(MEMSIM_INVALID_HANDLE, "invalid or released layer handle");
    if (in_features) *in_features = layer->layer.in_features;
    if (out_features) *out_features = layer->layer.out_features;
    if (bits) *bits = layer->layer.bits;
    return MEMSIM_OK;
}

int memsim_correction_factor(const memsim_layer* layer, double* c) {
    if (!is_live(layer)) return fail(MEMSIM_INVALID_HANDLE, "invalid or released layer handle");
    if (!c) return fail(MEMSIM_INVALID_ARGUMENT, "NULL output");
    *c = layer->layer.correction_factor;
    return MEMSIM_OK;
}

int memsim_reprogram(memsim_layer* layer, int num_pulses, uint64_t seed) {
    if (!is_live(layer)) return fail(MEMSIM_INVALID_HANDLE, "invalid or released layer handle");
    return guarded([&] {
        memsim::RandomStream rng(seed);
        memsim::reprogram(layer->layer, num_pulses, rng);
    });
}

int memsim_release(memsim_layer* layer) {
    {
        std::lock_guard lock(registry_mutex);
        if (!layer || live_handles.erase(layer) == 0) {
            return fail(MEMSIM_INVALID_HANDLE, "invalid or released layer handle");
        }
    }
    delete layer;
    return MEMSIM_OK;
}

int memsim_observe(const double* tensor, size_t len, double* running_max_abs) {
    if ((!tensor && len > 0) || !running_max_abs) return fail(MEMSIM_INVALID_ARGUMENT, "NULL buffer");
    return guarded([&] {
        memsim::Observer obs{*running_max_abs, memsim::ObserverTarget::Activation};
        obs = memsim::observe(obs, std::span<const double>(tensor, len));
        *running_max_abs = obs.running_max_abs;
    });
}

int memsim_fake_quant(const double* tensor, size_t len, double running_max_abs, int bits, double* out) {
    if ((!tensor || !out) && len > 0) return fail(MEMSIM_INVALID_ARGUMENT, "NULL buffer");
    return guarded([&] {
        const memsim::Observer obs{running_max_abs, memsim::ObserverTarget::Weight};
        const auto q = memsim::fake_quant(std::span<const double>(tensor, len), obs, bits);
        std::copy(q.begin(), q.end(), out);
    });
}

const char* memsim_last_error(void) { return last_error.c_str(); }

} // extern "C"
