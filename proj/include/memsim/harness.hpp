#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/converter.hpp"
#include "memsim/dataset.hpp"
#include "memsim/device_model.hpp"
#include "memsim/mapping.hpp"
#include "memsim/qat.hpp"

namespace memsim {

// ---- single-cell benchmark and device calibration ----

struct CellOperation {
    std::string name;      ///< e.g. "1.0 x 1"
    double input;          ///< normalized input in [0, 1]
    CellTarget positive;   ///< positive-bitline target; the negative cell is always Low
    double ref_mean;
    double ref_std;
};

/// The five reference single-cell operations and their published statistics.
const std::vector<CellOperation>& reference_cell_operations();

struct CellBenchRow {
    std::string operation;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct CellBenchResult {
    double correction_factor = 0.0;
    std::vector<CellBenchRow> rows;
};

/**
 * Simulate `sample_count` independent freshly programmed cell pairs per
 * reference operation and report c-corrected readout statistics. The
 * correction factor is fitted on rng.child(0); operation k uses rng.child(k + 1).
 */
CellBenchResult run_cell_benchmark(const DeviceModelParams& params, std::size_t sample_count,
                                   std::size_t correction_samples, const RandomStream& rng);

/// Tolerance windows from the reference table. Empty result means every window holds.
std::vector<std::string> check_cell_windows(const std::vector<CellBenchRow>& rows);

/// Squared relative deviation from the reference (mean, std) pairs.
double cell_objective(const std::vector<CellBenchRow>& rows);

struct CalibrationResult {
    DeviceModelParams params;
    double objective = 0.0;
    int evaluations = 0;
    CellBenchResult bench;
    std::vector<std::string> violations;
};

/**
 * Coordinate search over (g_high_rel_std, g_low_rel_std, g_half_rel_std,
 * nonlin_alpha) from `start`, using common random numbers so the objective is
 * deterministic. Bounded to `max_evals` benchmark evaluations.
 */
CalibrationResult calibrate_device(const DeviceModelParams& start, std::size_t sample_count,
                                   std::size_t correction_samples, int max_evals, const RandomStream& rng);

// ---- reports ----

struct Aggregate {
    double mean = 0.0;
    double std = 0.0;  ///< sample standard deviation (n - 1)
    double min = 0.0;
    double max = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

struct RunReport {
    std::string method;  ///< "float", "qat", "ptq" or "memristor"
    int bits = 0;        ///< 0 for the float baseline
    std::string metric;  ///< "accuracy" or "error"
    std::vector<double> per_instance;
    SaturationCounter saturation;
    double reference = 0.0;  ///< digital fake-quant metric for memristor reports
    double wall_clock_seconds = 0.0;

    Aggregate summary() const { return aggregate(per_instance); }
};

// ---- quantization sweep ----

struct QuantSweepResult {
    std::vector<RunReport> reports;  ///< float, then (qat, ptq) per bit width; per_instance = per training seed
    std::map<std::string, std::vector<EpochStat>> curves;  ///< keyed "<method>_b<bits>_s<seed>"
    std::map<int, std::vector<TinyNet>> qat_nets;          ///< bits -> one net per training seed
    std::vector<std::string> failures;                     ///< diverged cells, sweep continued
};

std::vector<std::size_t> layer_sizes(const ExperimentConfig& config);
/// Training seed for sweep seed index `s`.
std::uint64_t training_seed(const ExperimentConfig& config, int s);

QuantSweepResult run_quant_sweep(const ExperimentConfig& config, const TaskData& data);

// ---- memristor Monte Carlo evaluation ----

/// A network whose dense layers run on simulated crossbars; biases and ReLU stay digital.
struct MappedNet {
    std::vector<MappedLinear> layers;
    std::vector<std::vector<double>> biases;
};

/// Map every dense layer of a QAT/PTQ net using its frozen observers.
MappedNet map_network(const TinyNet& net, const ExperimentConfig& config, RandomStream& rng);

/// Apply the configured ADC range policy using the net's digital activations on `calibration`.
void configure_adc(MappedNet& mapped, const TinyNet& net, const ExperimentConfig& config,
                   const RealMatrix& calibration);

std::vector<double> mapped_forward(const MappedNet& mapped, std::span<const double> x, RandomStream& rng,
                                   SaturationCounter& counter);

/// Task error (1 - accuracy) of a mapped network on `data`.
double mapped_error(const MappedNet& mapped, const Dataset& data, RandomStream& rng, SaturationCounter& counter);

/**
 * For each bit width: reset and reprogram every cell for each device instance,
 * evaluate the test error with full analog simulation, and aggregate.
 * Instances run in parallel on independent child streams.
 */
std::vector<RunReport> run_memristor_eval(const ExperimentConfig& config, const std::map<int, TinyNet>& nets,
                                          const TaskData& data);

// ---- file output ----

/// Writes CSV (and plot-data) files under `dir`; returns the paths written, sorted.
std::vector<std::filesystem::path> write_cell_bench(const std::filesystem::path& dir, const CellBenchResult& bench);
std::vector<std::filesystem::path> write_quant_sweep(const std::filesystem::path& dir, const QuantSweepResult& sweep);
std::vector<std::filesystem::path> write_memristor_eval(const std::filesystem::path& dir,
                                                        const std::vector<RunReport>& reports);

/**
 * Rebuild summary and plot-data files purely from the per-instance CSVs in
 * `dir`. Returns the files written; none when there is nothing to report.
 */
std::vector<std::filesystem::path> emit_report(const std::filesystem::path& dir);

/// Fixed-format number used in every CSV so reruns are byte-identical.
std::string format_number(double v);

} // namespace memsim
