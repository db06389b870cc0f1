#include "memsim/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

constexpr std::uint64_t kVersion = 1;
constexpr std::array<char, 8> kLinearMagic{'M', 'E', 'M', 'X', 'L', 'I', 'N', '1'};
constexpr std::array<char, 8> kNetMagic{'M', 'E', 'M', 'X', 'N', 'E', 'T', '1'};
// guards against allocating absurd sizes from a corrupt header
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void u64(std::uint64_t v) {
        std::array<char, 8> bytes{};
        for (int k = 0; k < 8; ++k) bytes[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xff);
        out_.write(bytes.data(), 8);
    }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::uint64_t u64() {
        std::array<unsigned char, 8> bytes{};
        in_.read(reinterpret_cast<char*>(bytes.data()), 8);
        if (!in_) throw std::runtime_error("checkpoint truncated");
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(k)]) << (8 * k);
        return v;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t count(const char* what) {
        const std::uint64_t v = u64();
        if (v > kMaxElements) throw std::runtime_error(std::string("checkpoint field '") + what + "' is implausible");
        return static_cast<std::size_t>(v);
    }
    void raw(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error("checkpoint truncated");
    }

private:
    std::istream& in_;
};

void expect_magic(Reader& r, const std::array<char, 8>& magic) {
    std::array<char, 8> got{};
    r.raw(got.data(), got.size());
    if (got != magic) throw std::runtime_error("not a " + std::string(magic.data(), 8) + " checkpoint");
    if (const auto v = r.u64(); v != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
}

void write_params(Writer& w, const DeviceModelParams& p) {
    for (double v : {p.g_low_mean, p.g_low_rel_std, p.g_high_mean, p.g_high_rel_std, p.g_half_rel_std, p.nonlin_alpha,
                     p.read_noise_rel_std, p.v_read_max}) {
        w.f64(v);
    }
}

DeviceModelParams read_params(Reader& r) {
    DeviceModelParams p;
    p.g_low_mean = r.f64();
    p.g_low_rel_std = r.f64();
    p.g_high_mean = r.f64();
    p.g_high_rel_std = r.f64();
    p.g_half_rel_std = r.f64();
    p.nonlin_alpha = r.f64();
    p.read_noise_rel_std = r.f64();
    p.v_read_max = r.f64();
    return p;
}

} // namespace

void write_mapped_linear(std::ostream& out, const MappedLinear& layer) {
    Writer w(out);
    w.raw(kLinearMagic.data(), kLinearMagic.size());
    w.u64(kVersion);
    w.u64(layer.in_features);
    w.u64(layer.out_features);
    w.u64(static_cast<std::uint64_t>(layer.bits));
    w.u64(layer.tile_rows);
    w.u64(layer.tile_cols);
    w.f64(layer.input_scale);
    w.f64(layer.weight_scale);
    w.f64(layer.correction_factor);
    w.u64(layer.seed);
    w.u64(static_cast<std::uint64_t>(layer.dac.bits));
    w.f64(layer.dac.full_scale);
    w.u64(static_cast<std::uint64_t>(layer.tiles.empty() ? 8 : layer.tiles.front().adc_spec().bits));
    write_params(w, layer.params);
    for (int q : layer.levels.data()) w.i64(q);

    w.u64(layer.tiles.size());
    for (const CrossbarTile& t : layer.tiles) {
        w.u64(t.rows());
        w.u64(t.cols());
        w.f64(t.adc_spec().full_scale);
        for (const CellPair& p : t.cells().data()) w.f64(p.positive.g_actual);
        for (const CellPair& p : t.cells().data()) w.f64(p.negative.g_actual);
        std::string targets;
        targets.reserve(2 * t.cells().size());
        for (const CellPair& p : t.cells().data()) targets.push_back(static_cast<char>(p.positive.target));
        for (const CellPair& p : t.cells().data()) targets.push_back(static_cast<char>(p.negative.target));
        w.raw(targets.data(), targets.size());
    }
    if (!out) throw std::runtime_error("failed writing mapped layer checkpoint");
}

MappedLinear read_mapped_linear(std::istream& in) {
    Reader r(in);
    expect_magic(r, kLinearMagic);
    MappedLinear layer;
    layer.in_features = r.count("in_features");
    layer.out_features = r.count("out_features");
    layer.bits = static_cast<int>(r.count("bits"));
    layer.tile_rows = r.count("tile_rows");
    layer.tile_cols = r.count("tile_cols");
    layer.input_scale = r.f64();
    layer.weight_scale = r.f64();
    layer.correction_factor = r.f64();
    layer.seed = r.u64();
    layer.dac.bits = static_cast<int>(r.count("dac.bits"));
    layer.dac.full_scale = r.f64();
    const int adc_bits = static_cast<int>(r.count("adc.bits"));
    layer.params = read_params(r);
    if (layer.in_features * layer.out_features > kMaxElements) throw std::runtime_error("checkpoint dims implausible");
    layer.levels = IntMatrix(layer.in_features, layer.out_features);
    for (int& q : layer.levels.data()) q = static_cast<int>(r.i64());

    const std::size_t tile_count = r.count("tile_count");
    if (tile_count != static_cast<std::size_t>(layer.bit_levels()) * layer.row_blocks() * layer.col_blocks()) {
        throw std::runtime_error("checkpoint tile count does not match its dimensions");
    }
    layer.tiles.reserve(tile_count);
    for (std::size_t t = 0; t < tile_count; ++t) {
        const std::size_t rows = r.count("rows");
        const std::size_t cols = r.count("cols");
        const ConverterSpec adc{adc_bits, r.f64()};
        CrossbarTile tile(rows, cols, layer.params, layer.dac, adc, RandomStream(layer.seed).child(t + 1),
                          layer.tile_rows, layer.tile_cols);
        auto cells = tile.cells().data();
        for (CellPair& p : cells) p.positive.g_actual = r.f64();
        for (CellPair& p : cells) p.negative.g_actual = r.f64();
        std::string targets(2 * cells.size(), '\0');
        r.raw(targets.data(), targets.size());
        for (std::size_t k = 0; k < cells.size(); ++k) {
            cells[k].positive.target = static_cast<CellTarget>(targets[k]);
            cells[k].negative.target = static_cast<CellTarget>(targets[cells.size() + k]);
        }
        layer.tiles.push_back(std::move(tile));
    }
    return layer;
}

void write_net(std::ostream& out, const TinyNet& net) {
    Writer w(out);
    w.raw(kNetMagic.data(), kNetMagic.size());
    w.u64(kVersion);
    w.u64(net.layers.size());
    for (const DenseLayer& layer : net.layers) {
        w.u64(layer.in_features());
        w.u64(layer.out_features());
        for (double v : layer.weight.data()) w.f64(v);
        for (double v : layer.bias) w.f64(v);
    }
    w.u64(net.quant ? 1 : 0);
    if (net.quant) {
        w.u64(static_cast<std::uint64_t>(net.quant->weight_bits));
        w.u64(static_cast<std::uint64_t>(net.quant->activation_bits));
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            w.f64(net.quant->weight_observers[l].running_max_abs);
            w.f64(net.quant->input_observers[l].running_max_abs);
        }
    }
    if (!out) throw std::runtime_error("failed writing network checkpoint");
}

TinyNet read_net(std::istream& in) {
    Reader r(in);
    expect_magic(r, kNetMagic);
    TinyNet net;
    const std::size_t depth = r.count("layer_count");
    for (std::size_t l = 0; l < depth; ++l) {
        const std::size_t rows = r.count("in");
        const std::size_t cols = r.count("out");
        if (rows * cols > kMaxElements) throw std::runtime_error("checkpoint layer implausibly large");
        DenseLayer layer{RealMatrix(rows, cols), std::vector<double>(cols)};
        for (double& v : layer.weight.data()) v = r.f64();
        for (double& v : layer.bias) v = r.f64();
        net.layers.push_back(std::move(layer));
    }
    if (r.u64() != 0) {
        QuantState q;
        q.weight_bits = static_cast<int>(r.count("weight_bits"));
        q.activation_bits = static_cast<int>(r.count("activation_bits"));
        for (std::size_t l = 0; l < depth; ++l) {
            q.weight_observers.push_back({r.f64(), ObserverTarget::Weight});
            q.input_observers.push_back({r.f64(), ObserverTarget::Activation});
        }
        net.quant = std::move(q);
    }
    return net;
}

void save_mapped_linear(const std::filesystem::path& path, const MappedLinear& layer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_mapped_linear(out, layer);
}

MappedLinear load_mapped_linear(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_mapped_linear(in);
}

void save_net(const std::filesystem::path& path, const TinyNet& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_net(out, net);
}

TinyNet load_net(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_net(in);
}

} // namespace memsim
