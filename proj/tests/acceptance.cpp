// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "memsim/config.hpp"
#include "memsim/harness.hpp"
#include "memsim/mapping.hpp"
#include "oracles.hpp"

using namespace memsim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(MEMSIM_CLI_PATH) + " " + args + " > /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("memsim_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::vector<double>> read_cell_bench(const fs::path& p) {
    std::map<std::string, std::vector<double>> rows;
    std::istringstream in(read_file(p));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string name;
        std::getline(ls, name, ',');
        std::string f;
        std::vector<double> values;
        while (std::getline(ls, f, ',')) values.push_back(std::stod(f));
        rows[name] = values;  // mean, std, min, max, ref_mean, ref_std
    }
    return rows;
}

// Windows on (mean, std) per reference row, checked on the CSV the CLI wrote.
std::vector<std::string> window_failures(const std::map<std::string, std::vector<double>>& rows) {
    std::vector<std::string> fails;
    auto get = [&](const std::string& row, std::size_t k) {
        const auto it = rows.find(row);
        return it == rows.end() || it->second.size() <= k ? std::nan("") : it->second[k];
    };
    auto within = [&](const std::string& label, double v, double lo, double hi) {
        if (!(v >= lo && v <= hi)) fails.push_back(label + "=" + fmt("%.5g", v));
    };
    within("1x1 mean", get("1.0 x 1", 0), 0.97, 1.06);
    within("1x1 std", get("1.0 x 1", 1), 0.04, 0.09);
    within("0.1x1 mean", get("0.1 x 1", 0), 0.095, 0.104);
    within("0.1x1 std/mean", get("0.1 x 1", 1) / get("0.1 x 1", 0), 0.04, 0.09);
    if (!(std::abs(get("1.0 x 0", 0)) < 5e-3)) fails.push_back("1x0 |mean|=" + fmt("%.5g", get("1.0 x 0", 0)));
    within("1x0 std", get("1.0 x 0", 1), 0.03, 0.07);
    within("1x0.5 mean", get("1.0 x 0.5", 0), 0.43, 0.53);
    within("1x0.5 std", get("1.0 x 0.5", 1), 0.06, 0.13);
    return fails;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

Outcome cell_statistics() {
    const fs::path dir = scratch("cells");
    const auto t0 = Clock::now();
    const int cal = run_cli("calibrate -o " + dir.string());
    const double cal_time = seconds_since(t0);
    const auto t1 = Clock::now();
    const int bench = run_cli("cell-bench -d " + (dir / "device_calibrated.json").string() + " -s 31337 -o " +
                              (dir / "bench").string());
    const double bench_time = seconds_since(t1);
    if (cal != 0 || bench != 0) {
        return {false, "calibrate exit " + std::to_string(cal) + ", cell-bench exit " + std::to_string(bench)};
    }
    const auto fails = window_failures(read_cell_bench(dir / "bench" / "cell_bench.csv"));
    const bool fast = cal_time < 60.0 && bench_time < 60.0;
    std::string detail = "calibrate " + fmt("%.1fs", cal_time) + ", cell-bench on fresh seed " +
                         fmt("%.1fs", bench_time) + (fails.empty() ? ", all windows hold" : ", " + join(fails));
    return {fails.empty() && fast, detail};
}

Outcome correction_factor() {
    const auto t0 = Clock::now();
    DeviceModelParams ideal = DeviceModelParams{}.ideal();
    RandomStream r1(1);
    const double fit = fit_correction_factor(ideal, 10000, r1);
    const double closed = 1.0 / (ideal.v_read_max * ideal.delta_g());
    const double noiseless_err = std::abs(fit - closed) / closed;

    RandomStream r2(2);
    const double calibrated = fit_correction_factor(DeviceModelParams{}, 10000, r2);
    const double cal_err = std::abs(calibrated - 8020.0) / 8020.0;
    const double t = seconds_since(t0);
    return {noiseless_err < 0.01 && cal_err < 0.05 && t < 30.0,
            "noiseless fit " + fmt("%.2f", fit) + " vs closed form " + fmt("%.2f", closed) + " (" +
                fmt("%.2e", noiseless_err) + "), calibrated " + fmt("%.1f", calibrated) + " 1/A (" +
                fmt("%.2f%%", 100 * cal_err) + " from 8020), " + fmt("%.1fs", t)};
}

Outcome bit_stack() {
    long long checked = 0;
    for (int bits = 2; bits <= 8; ++bits) {
        const int l = (1 << (bits - 1)) - 1;
        for (int q = -l; q <= l; ++q) {
            const auto digits = decompose_bits(q, bits);
            // independent recomposition from the digit significances
            long long sum = 0;
            for (std::size_t k = 0; k < digits.size(); ++k) {
                if (digits[k] < -1 || digits[k] > 1) return {false, "non-ternary digit"};
                sum += digits[k] * (1LL << (bits - 2 - static_cast<int>(k)));
            }
            if (sum != q || compose_bits(digits, bits) != q) {
                return {false, "q=" + std::to_string(q) + " bits=" + std::to_string(bits)};
            }
            ++checked;
        }
    }
    return {true, std::to_string(checked) + " levels over bits 2..8 recompose exactly"};
}

MappingOptions tight_options(std::size_t tile, const DeviceModelParams& p) {
    MappingOptions o;
    o.tile_rows = tile;
    o.tile_cols = tile;
    o.adc.full_scale = oracle::tight_adc_full_scale(tile, p);
    return o;
}

RealMatrix random_matrix(std::size_t r, std::size_t c, RandomStream& rng) {
    RealMatrix m(r, c);
    for (double& v : m.data()) v = rng.normal(0.0, 0.1);
    return m;
}

std::vector<double> random_vector(std::size_t n, double scale, RandomStream& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-scale, scale);
    return v;
}

Outcome noiseless_oracle() {
    const auto t0 = Clock::now();
    const DeviceModelParams p = DeviceModelParams{}.ideal();
    RandomStream rng(2024);
    int failures = 0;
    double worst_ratio = 0.0;
    int large = 0;
    for (int k = 0; k < 100; ++k) {
        const bool full = k < 5;
        const std::size_t in = full ? 300 : 1 + rng.next_u64() % 300;
        const std::size_t out = full ? 300 : 1 + rng.next_u64() % 300;
        const int bits = 2 + static_cast<int>(rng.next_u64() % 7);
        large += in > 128 || out > 128;
        const RealMatrix w = random_matrix(in, out, rng);
        const QuantScheme s = QuantScheme::from_weights(w, bits);
        const double input_scale = 1.0 / rng.uniform(0.5, 4.0);
        RandomStream map_rng = rng.child(k);
        const MappedLinear layer = map_linear(w, s, input_scale, p, tight_options(128, p), map_rng);
        const auto x = random_vector(in, 1.2 / input_scale, rng);
        const auto y = forward(layer, x, rng);
        const auto ref = oracle::integer_matmul(w, x, bits, s.scale, input_scale, layer.dac.bits);
        for (std::size_t j = 0; j < out; ++j) {
            const double tol = oracle::partial_sum_tolerance(layer, j / layer.tile_cols);
            const double err = std::abs(y[j] - ref[j]);
            worst_ratio = std::max(worst_ratio, err / tol);
            if (err > tol) ++failures;
        }
    }
    const double t = seconds_since(t0);
    return {failures == 0 && t < 60.0,
            "100 cases (" + std::to_string(large) + " tiled, 5 at 300x300), worst error " +
                fmt("%.3f", worst_ratio) + " of the ADC-step tolerance, " + std::to_string(failures) +
                " outputs outside, " + fmt("%.1fs", t)};
}

Outcome tiling_invariance() {
    const DeviceModelParams p = DeviceModelParams{}.ideal();
    RandomStream rng(129);
    const std::pair<std::size_t, std::size_t> shapes[] = {{129, 129}, {128, 129}, {129, 128}, {255, 257}, {300, 300}};
    int failures = 0;
    double worst_ratio = 0.0;
    for (const auto& [in, out] : shapes) {
        const RealMatrix w = random_matrix(in, out, rng);
        const QuantScheme s = QuantScheme::from_weights(w, 4);
        RandomStream r1(7);
        RandomStream r2(7);
        const MappedLinear tiled = map_linear(w, s, 0.5, p, tight_options(128, p), r1);
        const MappedLinear whole = map_linear(w, s, 0.5, p, tight_options(std::max(in, out), p), r2);
        for (int trial = 0; trial < 5; ++trial) {
            const auto x = random_vector(in, 2.0, rng);
            const auto a = forward(tiled, x, rng);
            const auto b = forward(whole, x, rng);
            for (std::size_t j = 0; j < out; ++j) {
                const double tol =
                    oracle::partial_sum_tolerance(tiled, j / 128) + oracle::partial_sum_tolerance(whole, 0);
                const double err = std::abs(a[j] - b[j]);
                worst_ratio = std::max(worst_ratio, err / tol);
                if (err > tol) ++failures;
            }
        }
    }
    return {failures == 0, "129x129, 128x129, 129x128, 255x257, 300x300: worst difference " +
                               fmt("%.3f", worst_ratio) + " of the per-partial-sum tolerance"};
}

Outcome ste_check() {
    double worst = 0.0;
    std::size_t points = 0;
    for (int bits : {3, 4, 8}) {
        const auto r = oracle::ste_gradient_check(64, 16, 32, bits, 1000, 500 + bits);
        worst = std::max(worst, r.max_rel_error);
        if (r.points < 1000) return {false, "only " + std::to_string(r.points) + " in-range points"};
        points += r.points;
    }
    return {worst < 1e-4, std::to_string(points) + " in-range points (1000 each at 3, 4, 8 bits), worst relative error " +
                              fmt("%.2e", worst)};
}

struct SweepState {
    ExperimentConfig config;
    TaskData data;
    QuantSweepResult sweep;
    double seconds = 0.0;
};

const RunReport* find_report(const QuantSweepResult& s, const std::string& method, int bits) {
    for (const RunReport& r : s.reports) {
        if (r.method == method && r.bits == bits) return &r;
    }
    return nullptr;
}

Outcome qat_vs_ptq(SweepState& state) {
    state.config.bits_sweep = {3, 8};
    state.data = make_blobs(state.config.dataset);
    const auto t0 = Clock::now();
    state.sweep = run_quant_sweep(state.config, state.data);
    state.seconds = seconds_since(t0);
    const RunReport* flt = find_report(state.sweep, "float", 0);
    const RunReport* qat3 = find_report(state.sweep, "qat", 3);
    const RunReport* ptq3 = find_report(state.sweep, "ptq", 3);
    const RunReport* ptq8 = find_report(state.sweep, "ptq", 8);
    if (!flt || !qat3 || !ptq3 || !ptq8) return {false, "sweep is missing a report"};
    const double f = flt->summary().mean;
    const double q3 = qat3->summary().mean;
    const double p3 = ptq3->summary().mean;
    const double p8 = ptq8->summary().mean;
    const bool seeds = qat3->per_instance.size() == 3 && ptq3->per_instance.size() == 3;
    const bool pass = seeds && q3 > p3 && std::abs(p8 - f) <= 0.01 && state.seconds < 600.0;
    return {pass, "3 seeds: QAT-3 " + fmt("%.4f", q3) + " vs PTQ-3 " + fmt("%.4f", p3) + "; PTQ-8 " +
                      fmt("%.4f", p8) + " vs float " + fmt("%.4f", f) + "; " + fmt("%.1fs", state.seconds)};
}

Outcome monte_carlo(const SweepState& state) {
    const auto it = state.sweep.qat_nets.find(3);
    if (it == state.sweep.qat_nets.end() || it->second.empty()) return {false, "no 3-bit QAT net"};
    ExperimentConfig config = state.config;
    config.bits_sweep = {3};
    config.instances = 10;
    const auto t0 = Clock::now();
    const auto reports = run_memristor_eval(config, {{3, it->second.front()}}, state.data);
    const double t = seconds_since(t0) + state.seconds;
    const RunReport& r = reports.front();
    const Aggregate a = r.summary();
    const double spread = (a.max - a.mean) / a.mean;
    const double degradation = (a.mean - r.reference) / r.reference;
    const bool pass = r.per_instance.size() == 10 && spread <= 0.05 && degradation <= 0.30 && t < 900.0;
    return {pass, "10 instances: error mean " + fmt("%.4f", a.mean) + " max " + fmt("%.4f", a.max) + ", spread " +
                      fmt("%.3f", spread) + "; digital " + fmt("%.4f", r.reference) + ", degradation " +
                      fmt("%.1f%%", 100 * degradation) + "; " + fmt("%.1fs", t) + " incl. training"};
}

Outcome determinism() {
    ExperimentConfig c;
    c.dataset.test_size = 2000;
    c.bits_sweep = {3, 5};
    c.instances = 3;
    c.training_seeds = 2;
    c.train.epochs = 5;
    c.cell_samples = 5000;
    const fs::path root = scratch("determinism");
    {
        std::ofstream out(root / "config.json");
        out << config_to_json(c);
    }
    std::vector<fs::path> dirs{root / "a", root / "b"};
    for (const fs::path& d : dirs) {
        const std::string common = "-c " + (root / "config.json").string() + " -o " + d.string();
        for (const char* cmd : {"cell-bench", "quant-sweep", "memristor-eval", "report"}) {
            if (run_cli(std::string(cmd) + " " + common) != 0) return {false, std::string(cmd) + " failed"};
        }
    }
    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
        if (entry.path().extension() != ".csv") continue;
        const fs::path other = dirs[1] / fs::relative(entry.path(), dirs[0]);
        if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
            return {false, "differs: " + fs::relative(entry.path(), dirs[0]).string()};
        }
        ++files;
    }
    int files_b = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dirs[1])) files_b += entry.path().extension() == ".csv";
    return {files > 0 && files == files_b,
            std::to_string(files) + " CSV files byte-identical across two CLI runs"};
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    SweepState sweep;
    const std::vector<Criterion> criteria{
        {"cell statistics", cell_statistics},
        {"correction factor", correction_factor},
        {"bit-stack round trip", bit_stack},
        {"noiseless oracle equivalence", noiseless_oracle},
        {"tiling invariance", tiling_invariance},
        {"straight-through gradient", ste_check},
        {"QAT vs PTQ ordering", [&] { return qat_vs_ptq(sweep); }},
        {"Monte Carlo spread", [&] { return monte_carlo(sweep); }},
        {"determinism", determinism},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
