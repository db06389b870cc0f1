#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "memsim/converter.hpp"
#include "memsim/dataset.hpp"
#include "memsim/device_model.hpp"
#include "memsim/qat.hpp"

namespace memsim {

enum class AdcRange : std::uint8_t {
    WorstCase,   ///< rows * g_high_mean * v_read_max per tile
    Calibrated,  ///< headroom * peak noise-free column current on a calibration batch
};

struct ExperimentConfig {
    DeviceModelParams device;
    ConverterSpec dac{8, 0.6};
    /// full_scale <= 0 means "derive from adc_range".
    ConverterSpec adc{8, 0.0};
    AdcRange adc_range = AdcRange::Calibrated;
    double adc_headroom = 1.0;
    std::size_t tile_rows = 128;
    std::size_t tile_cols = 128;

    std::vector<int> bits_sweep{3, 4, 5, 6, 7, 8};
    int instances = 10;
    int training_seeds = 3;
    int reset_pulses = 5;
    std::uint64_t master_seed = 2024;

    BlobSpec dataset;
    std::vector<std::size_t> hidden{64, 64};
    TrainConfig train;

    std::size_t cell_samples = 10000;
    std::size_t correction_samples = 10000;
    std::size_t calibration_batch = 256;
    int calibration_max_evals = 200;
    /// Worker threads for Monte Carlo instances; 0 = hardware concurrency.
    int threads = 0;

    std::filesystem::path output_dir = "out";

    /// Throws PreconditionError naming the first invalid field.
    void validate() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& config);

DeviceModelParams load_device_params(const std::filesystem::path& path);
void save_device_params(const std::filesystem::path& path, const DeviceModelParams& params);

} // namespace memsim
