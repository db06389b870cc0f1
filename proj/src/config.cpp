#include "memsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "memsim/errors.hpp"

namespace memsim {

using nlohmann::json;

namespace {

// Reject keys we do not know so a typo cannot silently fall back to a default.
void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw PreconditionError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) throw PreconditionError("config: unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

json device_json(const DeviceModelParams& p) {
    return json{{"g_low_mean", p.g_low_mean},         {"g_low_rel_std", p.g_low_rel_std},
                {"g_high_mean", p.g_high_mean},       {"g_high_rel_std", p.g_high_rel_std},
                {"g_half_rel_std", p.g_half_rel_std}, {"nonlin_alpha", p.nonlin_alpha},
                {"read_noise_rel_std", p.read_noise_rel_std}, {"v_read_max", p.v_read_max}};
}

DeviceModelParams parse_device(const json& j, DeviceModelParams p) {
    check_keys(j,
               {"g_low_mean", "g_low_rel_std", "g_high_mean", "g_high_rel_std", "g_half_rel_std", "nonlin_alpha",
                "read_noise_rel_std", "v_read_max"},
               "device");
    read_opt(j, "g_low_mean", p.g_low_mean);
    read_opt(j, "g_low_rel_std", p.g_low_rel_std);
    read_opt(j, "g_high_mean", p.g_high_mean);
    read_opt(j, "g_high_rel_std", p.g_high_rel_std);
    read_opt(j, "g_half_rel_std", p.g_half_rel_std);
    read_opt(j, "nonlin_alpha", p.nonlin_alpha);
    read_opt(j, "read_noise_rel_std", p.read_noise_rel_std);
    read_opt(j, "v_read_max", p.v_read_max);
    return p;
}

const char* range_name(AdcRange r) { return r == AdcRange::Calibrated ? "calibrated" : "worst_case"; }

} // namespace

void ExperimentConfig::validate() const {
    try {
        device.validate();
        dac.validate();
    } catch (const PreconditionError& e) {
        throw PreconditionError(std::string("config: ") + e.what());
    }
    if (adc.bits < 2 || adc.bits > 30) throw PreconditionError("config: adc.bits must be in [2, 30]");
    if (!(adc_headroom > 0.0)) throw PreconditionError("config: adc.headroom must be positive");
    if (tile_rows == 0 || tile_cols == 0) throw PreconditionError("config: tile size must be positive");
    for (int b : bits_sweep) {
        if (b < 2 || b > 8) throw PreconditionError("config: bits_sweep entries must be in [2, 8]");
    }
    if (instances < 1) throw PreconditionError("config: instances must be >= 1");
    if (training_seeds < 1) throw PreconditionError("config: training_seeds must be >= 1");
    if (reset_pulses < 1) throw PreconditionError("config: reset_pulses must be >= 1");
    if (cell_samples < 1) throw PreconditionError("config: cell_samples must be >= 1");
    if (correction_samples < 1000) throw PreconditionError("config: correction_samples must be >= 1000");
    if (calibration_batch < 1) throw PreconditionError("config: calibration_batch must be >= 1");
    if (calibration_max_evals < 1) throw PreconditionError("config: calibration_max_evals must be >= 1");
    if (train.epochs < 1 || train.batch_size < 1 || !(train.peak_lr > 0.0)) {
        throw PreconditionError("config: train needs epochs >= 1, batch_size >= 1, peak_lr > 0");
    }
    if (threads < 0) throw PreconditionError("config: threads must be >= 0");
    if (dataset.dim == 0 || dataset.classes < 2 || dataset.train_size == 0 || dataset.test_size == 0) {
        throw PreconditionError("config: dataset needs dim >= 1, classes >= 2 and non-empty splits");
    }
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw PreconditionError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    try {
        check_keys(j,
                   {"device", "dac", "adc", "tile", "bits_sweep", "instances", "training_seeds", "reset_pulses",
                    "master_seed", "dataset", "network", "train", "cell_samples", "correction_samples",
                    "calibration_batch", "calibration_max_evals", "threads", "output_dir"},
                   "");
        if (j.contains("device")) c.device = parse_device(j.at("device"), c.device);
        if (j.contains("dac")) {
            const json& d = j.at("dac");
            check_keys(d, {"bits", "full_scale"}, "dac");
            read_opt(d, "bits", c.dac.bits);
            read_opt(d, "full_scale", c.dac.full_scale);
        }
        if (j.contains("adc")) {
            const json& a = j.at("adc");
            check_keys(a, {"bits", "full_scale", "range", "headroom"}, "adc");
            read_opt(a, "bits", c.adc.bits);
            read_opt(a, "full_scale", c.adc.full_scale);
            read_opt(a, "headroom", c.adc_headroom);
            if (a.contains("range")) {
                const auto r = a.at("range").get<std::string>();
                if (r == "worst_case") {
                    c.adc_range = AdcRange::WorstCase;
                } else if (r == "calibrated") {
                    c.adc_range = AdcRange::Calibrated;
                } else {
                    throw PreconditionError("config: adc.range must be 'worst_case' or 'calibrated'");
                }
            }
        }
        if (j.contains("tile")) {
            const json& t = j.at("tile");
            check_keys(t, {"rows", "cols"}, "tile");
            read_opt(t, "rows", c.tile_rows);
            read_opt(t, "cols", c.tile_cols);
        }
        read_opt(j, "bits_sweep", c.bits_sweep);
        read_opt(j, "instances", c.instances);
        read_opt(j, "training_seeds", c.training_seeds);
        read_opt(j, "reset_pulses", c.reset_pulses);
        read_opt(j, "master_seed", c.master_seed);
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            check_keys(d,
                       {"dim", "classes", "clusters_per_class", "center_std", "cluster_std", "train_size",
                        "test_size", "seed"},
                       "dataset");
            read_opt(d, "dim", c.dataset.dim);
            read_opt(d, "classes", c.dataset.classes);
            read_opt(d, "clusters_per_class", c.dataset.clusters_per_class);
            read_opt(d, "center_std", c.dataset.center_std);
            read_opt(d, "cluster_std", c.dataset.cluster_std);
            read_opt(d, "train_size", c.dataset.train_size);
            read_opt(d, "test_size", c.dataset.test_size);
            read_opt(d, "seed", c.dataset.seed);
        }
        if (j.contains("network")) {
            check_keys(j.at("network"), {"hidden"}, "network");
            read_opt(j.at("network"), "hidden", c.hidden);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            check_keys(t, {"epochs", "batch_size", "peak_lr", "warmup_fraction"}, "train");
            read_opt(t, "epochs", c.train.epochs);
            read_opt(t, "batch_size", c.train.batch_size);
            read_opt(t, "peak_lr", c.train.peak_lr);
            read_opt(t, "warmup_fraction", c.train.warmup_fraction);
        }
        read_opt(j, "cell_samples", c.cell_samples);
        read_opt(j, "correction_samples", c.correction_samples);
        read_opt(j, "calibration_batch", c.calibration_batch);
        read_opt(j, "calibration_max_evals", c.calibration_max_evals);
        read_opt(j, "threads", c.threads);
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw PreconditionError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["device"] = device_json(c.device);
    j["dac"] = {{"bits", c.dac.bits}, {"full_scale", c.dac.full_scale}};
    j["adc"] = {{"bits", c.adc.bits},
                {"full_scale", c.adc.full_scale},
                {"range", range_name(c.adc_range)},
                {"headroom", c.adc_headroom}};
    j["tile"] = {{"rows", c.tile_rows}, {"cols", c.tile_cols}};
    j["bits_sweep"] = c.bits_sweep;
    j["instances"] = c.instances;
    j["training_seeds"] = c.training_seeds;
    j["reset_pulses"] = c.reset_pulses;
    j["master_seed"] = c.master_seed;
    j["dataset"] = {{"dim", c.dataset.dim},
                    {"classes", c.dataset.classes},
                    {"clusters_per_class", c.dataset.clusters_per_class},
                    {"center_std", c.dataset.center_std},
                    {"cluster_std", c.dataset.cluster_std},
                    {"train_size", c.dataset.train_size},
                    {"test_size", c.dataset.test_size},
                    {"seed", c.dataset.seed}};
    j["network"] = {{"hidden", c.hidden}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"peak_lr", c.train.peak_lr},
                  {"warmup_fraction", c.train.warmup_fraction}};
    j["cell_samples"] = c.cell_samples;
    j["correction_samples"] = c.correction_samples;
    j["calibration_batch"] = c.calibration_batch;
    j["calibration_max_evals"] = c.calibration_max_evals;
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir.string();
    return j.dump(2) + "\n";
}

DeviceModelParams load_device_params(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open device parameters " + path.string());
    try {
        json j = json::parse(in);
        if (j.contains("device")) j = j.at("device");
        DeviceModelParams p = parse_device(j, DeviceModelParams{});
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw PreconditionError(path.string() + ": " + e.what());
    }
}

void save_device_params(const std::filesystem::path& path, const DeviceModelParams& params) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << json{{"device", device_json(params)}}.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

} // namespace memsim
