#include <doctest.h>

#include <sstream>
#include <string>

#include "memsim/checkpoint.hpp"
#include "memsim/dataset.hpp"
#include "memsim/errors.hpp"
#include "memsim/mapping.hpp"
#include "memsim/qat.hpp"

using namespace memsim;

namespace {

MappedLinear sample_layer() {
    RandomStream rng(1);
    RealMatrix w(150, 20);
    for (double& v : w.data()) v = rng.normal(0.0, 0.1);
    MappingOptions o;
    o.correction_samples = 1000;
    RandomStream map_rng(2);
    return map_linear(w, QuantScheme::from_weights(w, 4), 0.5, DeviceModelParams{}, o, map_rng);
}

} // namespace

TEST_CASE("mapped layer round-trips bit-exactly") {
    MappedLinear layer = sample_layer();
    layer.tiles[1].set_adc_full_scale(1.25e-4);
    std::stringstream buf;
    write_mapped_linear(buf, layer);
    const MappedLinear back = read_mapped_linear(buf);

    CHECK(back.in_features == layer.in_features);
    CHECK(back.out_features == layer.out_features);
    CHECK(back.bits == layer.bits);
    CHECK(back.input_scale == layer.input_scale);
    CHECK(back.weight_scale == layer.weight_scale);
    CHECK(back.correction_factor == layer.correction_factor);
    CHECK(back.seed == layer.seed);
    CHECK(back.params == layer.params);
    CHECK(back.levels == layer.levels);
    REQUIRE(back.tiles.size() == layer.tiles.size());
    CHECK(back.tiles[1].adc_spec() == layer.tiles[1].adc_spec());
    for (std::size_t t = 0; t < layer.tiles.size(); ++t) {
        const auto& a = layer.tiles[t].cells();
        const auto& b = back.tiles[t].cells();
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a.data()[k].positive.g_actual == b.data()[k].positive.g_actual);
            CHECK(a.data()[k].negative.target == b.data()[k].negative.target);
        }
    }

    std::vector<double> x(150);
    RandomStream xr(3);
    for (double& v : x) v = xr.uniform(-2.0, 2.0);
    RandomStream ra(4);
    RandomStream rb(4);
    CHECK(forward(layer, x, ra) == forward(back, x, rb));
}

TEST_CASE("network round-trips with its quantization state") {
    BlobSpec spec;
    spec.train_size = 300;
    spec.test_size = 100;
    const TaskData data = make_blobs(spec);
    RandomStream rng(5);
    const std::size_t sizes[] = {8, 12, 4};
    TrainConfig tc;
    tc.epochs = 2;
    const TinyNet net = train_qat(TinyNet::create(sizes, rng), data, 3, tc).net;

    std::stringstream buf;
    write_net(buf, net);
    const TinyNet back = read_net(buf);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        CHECK(back.layers[l].weight == net.layers[l].weight);
        CHECK(back.layers[l].bias == net.layers[l].bias);
    }
    REQUIRE(back.quant.has_value());
    CHECK(*back.quant == *net.quant);
    CHECK(evaluate_accuracy(back, data.test) == evaluate_accuracy(net, data.test));

    SUBCASE("float nets carry no quantization state") {
        TinyNet plain = net;
        plain.quant.reset();
        std::stringstream b2;
        write_net(b2, plain);
        CHECK(!read_net(b2).quant.has_value());
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    const MappedLinear layer = sample_layer();
    std::stringstream buf;
    write_mapped_linear(buf, layer);
    const std::string bytes = buf.str();

    SUBCASE("wrong magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        std::stringstream in(bad);
        CHECK_THROWS(read_mapped_linear(in));
    }
    SUBCASE("truncated") {
        std::stringstream in(bytes.substr(0, bytes.size() / 2));
        CHECK_THROWS(read_mapped_linear(in));
    }
    SUBCASE("a layer file is not a network file") {
        std::stringstream in(bytes);
        CHECK_THROWS(read_net(in));
    }
    SUBCASE("missing file") {
        CHECK_THROWS(load_mapped_linear("/nonexistent/layer.ckpt"));
    }
}
