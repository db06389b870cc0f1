/*
 * C-compatible function table for foreign-language hosts.
 *
 * Buffers are contiguous row-major 64-bit floats. Weights are laid out
 * in_features x out_features. No numerics happen on the host side: every
 * call forwards to the same core routines the CLI uses.
 *
 * All functions return MEMSIM_OK on success; otherwise memsim_last_error()
 * describes the failure for the calling thread.
 */
#ifndef MEMSIM_C_API_H
#define MEMSIM_C_API_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum memsim_status {
    MEMSIM_OK = 0,
    MEMSIM_INVALID_ARGUMENT = 1,
    MEMSIM_INVALID_HANDLE = 2,
    MEMSIM_INTERNAL_ERROR = 3
};

typedef struct memsim_device_params {
    double g_low_mean;
    double g_low_rel_std;
    double g_high_mean;
    double g_high_rel_std;
    double g_half_rel_std;
    double nonlin_alpha;
    double read_noise_rel_std;
    double v_read_max;
} memsim_device_params;

typedef struct memsim_layer_config {
    int bits;                 /* weight bits, 2..8 */
    double weight_max_abs;    /* observer max; <= 0 derives it from the weights */
    double input_max_abs;     /* largest expected |activation|; <= 0 means 1 */
    int dac_bits;
    int adc_bits;
    double adc_full_scale;    /* amperes; <= 0 selects the per-tile worst case */
    size_t tile_rows;
    size_t tile_cols;
    size_t correction_samples;
    uint64_t seed;            /* programming seed */
} memsim_layer_config;

typedef struct memsim_layer memsim_layer;

/* Calibrated default device parameters and layer configuration. */
void memsim_default_device_params(memsim_device_params* out);
void memsim_default_layer_config(memsim_layer_config* out);

/* params may be NULL for the calibrated defaults. weights_len must equal in_features * out_features. */
int memsim_map_linear(const double* weights, size_t weights_len, size_t in_features, size_t out_features,
                      const memsim_layer_config* config, const memsim_device_params* params,
                      memsim_layer** out_handle);

/* x is batch x in_features; y receives batch x out_features. Sample b draws read noise from stream (seed, b). */
int memsim_forward(const memsim_layer* layer, const double* x, size_t batch, size_t in_features, uint64_t seed,
                   double* y, size_t y_len);

int memsim_layer_dims(const memsim_layer* layer, size_t* in_features, size_t* out_features, int* bits);
int memsim_correction_factor(const memsim_layer* layer, double* c);

/* Reset every cell with num_pulses random pulses and program the stored weights again. */
int memsim_reprogram(memsim_layer* layer, int num_pulses, uint64_t seed);

/* Releasing NULL or an already released handle returns MEMSIM_INVALID_HANDLE. */
int memsim_release(memsim_layer* layer);

/* running_max_abs := max(running_max_abs, max|tensor|). */
int memsim_observe(const double* tensor, size_t len, double* running_max_abs);
int memsim_fake_quant(const double* tensor, size_t len, double running_max_abs, int bits, double* out);

const char* memsim_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* MEMSIM_C_API_H */
