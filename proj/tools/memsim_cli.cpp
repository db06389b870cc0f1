// memsim: command-line driver for the crossbar experiments.
//
//   memsim calibrate      fit device variability to the reference cell statistics
//   memsim cell-bench     single-cell readout statistics
//   memsim quant-sweep    float / QAT / PTQ accuracy per weight bit width
//   memsim memristor-eval Monte Carlo evaluation of QAT nets on programmed crossbars
//   memsim report         plot-data files rebuilt from per-instance CSVs
//   memsim print-config   effective configuration as JSON
//
// Exit codes: 0 success, 1 validation or I/O error, 2 calibration outside tolerance.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "memsim/checkpoint.hpp"
#include "memsim/config.hpp"
#include "memsim/errors.hpp"
#include "memsim/harness.hpp"

namespace fs = std::filesystem;
using namespace memsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitTolerance = 2;

struct CommonOptions {
    std::string config_path;
    std::string output_dir;
    std::optional<std::uint64_t> seed;
    std::string device_path;
};

ExperimentConfig resolve_config(const CommonOptions& opts) {
    ExperimentConfig config = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
    if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
    if (opts.seed) config.master_seed = *opts.seed;
    if (!opts.device_path.empty()) config.device = load_device_params(opts.device_path);
    config.validate();
    return config;
}

void print_written(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) std::cout << "wrote " << p.string() << '\n';
}

void print_bench(const CellBenchResult& bench) {
    std::printf("correction factor c = %.2f 1/A\n", bench.correction_factor);
    std::printf("%-10s %12s %12s %12s %12s\n", "operation", "mean", "std", "min", "max");
    for (const CellBenchRow& r : bench.rows) {
        std::printf("%-10s %12.5g %12.5g %12.5g %12.5g\n", r.operation.c_str(), r.mean, r.std, r.min, r.max);
    }
}

int cmd_calibrate(const CommonOptions& opts, const std::string& out_path) {
    const ExperimentConfig config = resolve_config(opts);
    const RandomStream master(config.master_seed);
    // search from the uncalibrated starting point unless a device file was given
    const DeviceModelParams start = opts.device_path.empty() ? DeviceModelParams::starting_point() : config.device;
    const CalibrationResult cal = calibrate_device(start, config.cell_samples, config.correction_samples,
                                                   config.calibration_max_evals, master.child(2));
    std::printf("calibration: %d evaluations, objective %.6g\n", cal.evaluations, cal.objective);

    // check on fresh random numbers, not the ones the search was tuned on
    const CellBenchResult bench =
        run_cell_benchmark(cal.params, config.cell_samples, config.correction_samples, master.child(1));
    print_bench(bench);

    const fs::path target = out_path.empty() ? config.output_dir / "device_calibrated.json" : fs::path(out_path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    save_device_params(target, cal.params);
    std::cout << "wrote " << target.string() << '\n';
    print_written(write_cell_bench(config.output_dir, bench));

    const auto violations = check_cell_windows(bench.rows);
    for (const auto& v : violations) std::cerr << "tolerance violated: " << v << '\n';
    return violations.empty() ? kExitOk : kExitTolerance;
}

int cmd_cell_bench(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    const CellBenchResult bench = run_cell_benchmark(config.device, config.cell_samples, config.correction_samples,
                                                     RandomStream(config.master_seed).child(1));
    print_bench(bench);
    for (const auto& v : check_cell_windows(bench.rows)) std::cerr << "note: " << v << '\n';
    print_written(write_cell_bench(config.output_dir, bench));
    return kExitOk;
}

fs::path net_path(const ExperimentConfig& config, int bits, int seed_index) {
    return config.output_dir / "nets" / ("qat_b" + std::to_string(bits) + "_s" + std::to_string(seed_index) + ".ckpt");
}

int cmd_quant_sweep(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    if (config.bits_sweep.empty()) {
        std::cout << "bits_sweep is empty: nothing to do\n";
        return kExitOk;
    }
    const TaskData data = make_blobs(config.dataset);
    const QuantSweepResult sweep = run_quant_sweep(config, data);
    for (const RunReport& r : sweep.reports) {
        const Aggregate a = r.summary();
        std::printf("%-6s bits=%d  accuracy mean %.4f  std %.4f  (n=%zu)\n", r.method.c_str(), r.bits, a.mean, a.std,
                    r.per_instance.size());
    }
    print_written(write_quant_sweep(config.output_dir, sweep));
    fs::create_directories(config.output_dir / "nets");
    for (const auto& [bits, nets] : sweep.qat_nets) {
        for (std::size_t s = 0; s < nets.size(); ++s) {
            const fs::path p = net_path(config, bits, static_cast<int>(s));
            save_net(p, nets[s]);
            std::cout << "wrote " << p.string() << '\n';
        }
    }
    return sweep.failures.empty() ? kExitOk : kExitInvalid;
}

int cmd_memristor_eval(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    if (config.bits_sweep.empty()) {
        std::cout << "bits_sweep is empty: nothing to do\n";
        return kExitOk;
    }
    const TaskData data = make_blobs(config.dataset);
    std::map<int, TinyNet> nets;
    for (int bits : config.bits_sweep) {
        const fs::path p = net_path(config, bits, 0);
        if (fs::exists(p)) {
            nets[bits] = load_net(p);
            continue;
        }
        std::cout << "no checkpoint " << p.string() << ", training " << bits << "-bit QAT net\n";
        TrainConfig tc = config.train;
        tc.seed = training_seed(config, 0);
        RandomStream init_rng = RandomStream(tc.seed).child(1);
        nets[bits] = train_qat(TinyNet::create(layer_sizes(config), init_rng), data, bits, tc).net;
    }
    const auto reports = run_memristor_eval(config, nets, data);
    for (const RunReport& r : reports) {
        const Aggregate a = r.summary();
        std::printf("bits=%d  digital error %.4f  memristor error mean %.4f std %.4f min %.4f max %.4f  (%.1fs)\n",
                    r.bits, r.reference, a.mean, a.std, a.min, a.max, r.wall_clock_seconds);
    }
    print_written(write_memristor_eval(config.output_dir, reports));
    return kExitOk;
}

int cmd_report(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    const auto written = emit_report(config.output_dir);
    if (written.empty()) std::cout << "no per-instance results under " << config.output_dir.string() << '\n';
    print_written(written);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variability-aware memristor crossbar simulator"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opts.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("-o,--output", opts.output_dir, "Output directory (overrides config)");
        sub->add_option("-s,--seed", opts.seed, "Master seed (overrides config)");
        sub->add_option("-d,--device", opts.device_path, "Device parameter file (JSON)")->check(CLI::ExistingFile);
    };

    std::string calibrate_out;
    auto* calibrate = app.add_subcommand("calibrate", "Fit device variability to the reference cell statistics");
    add_common(calibrate);
    calibrate->add_option("--out", calibrate_out, "Where to write the calibrated device parameters");

    auto* cell_bench = app.add_subcommand("cell-bench", "Single-cell readout statistics");
    add_common(cell_bench);
    auto* quant_sweep = app.add_subcommand("quant-sweep", "Float / QAT / PTQ accuracy per weight bit width");
    add_common(quant_sweep);
    auto* memristor_eval = app.add_subcommand("memristor-eval", "Monte Carlo evaluation on programmed crossbars");
    add_common(memristor_eval);
    auto* report = app.add_subcommand("report", "Rebuild plot-data files from per-instance CSVs");
    add_common(report);
    auto* print_config = app.add_subcommand("print-config", "Print the effective configuration");
    add_common(print_config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    try {
        if (calibrate->parsed()) return cmd_calibrate(opts, calibrate_out);
        if (cell_bench->parsed()) return cmd_cell_bench(opts);
        if (quant_sweep->parsed()) return cmd_quant_sweep(opts);
        if (memristor_eval->parsed()) return cmd_memristor_eval(opts);
        if (report->parsed()) return cmd_report(opts);
        if (print_config->parsed()) {
            std::cout << config_to_json(resolve_config(opts));
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
    return kExitInvalid;
}
