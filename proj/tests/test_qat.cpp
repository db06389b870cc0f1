#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "memsim/dataset.hpp"
#include "memsim/errors.hpp"
#include "memsim/log.hpp"
#include "memsim/qat.hpp"
#include "oracles.hpp"

using namespace memsim;

namespace {

TaskData small_task() {
    BlobSpec spec;
    spec.train_size = 1200;
    spec.test_size = 400;
    return make_blobs(spec);
}

TrainConfig quick_config() {
    TrainConfig c;
    c.epochs = 6;
    c.seed = 77;
    return c;
}

TinyNet fresh_net(std::uint64_t seed) {
    RandomStream rng(seed);
    const std::size_t sizes[] = {8, 16, 4};
    return TinyNet::create(sizes, rng);
}

} // namespace

TEST_CASE("observer examples") {
    Observer obs;
    const std::vector<double> a{0.5, -2.0, 1.0};
    obs = observe(obs, a);
    CHECK(obs.running_max_abs == 2.0);
    const std::vector<double> b{0.1, -0.3};
    obs = observe(obs, b);
    CHECK(obs.running_max_abs == 2.0);
    const std::vector<double> c{3.5};
    obs = observe(obs, c);
    CHECK(obs.running_max_abs == 3.5);

    const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(observe(obs, bad), DivergenceError);
    const std::vector<double> inf{std::numeric_limits<double>::infinity()};
    CHECK_THROWS_AS(observe(obs, inf), DivergenceError);
}

TEST_CASE("3-bit fake quantization lands on the grid") {
    const Observer obs{0.1, ObserverTarget::Weight};
    const double step = 0.1 / 3.0;
    CHECK(observer_scale(obs, 3) == doctest::Approx(step));
    RandomStream rng(1);
    std::vector<double> t(500);
    for (double& v : t) v = rng.uniform(-0.2, 0.2);
    const auto q = fake_quant(t, obs, 3);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double k = q[i] / step;
        CHECK(std::abs(k - std::round(k)) < 1e-9);
        CHECK(std::abs(k) <= 3.0 + 1e-9);
        if (std::abs(t[i]) <= 0.1) CHECK(std::abs(q[i] - t[i]) <= 0.5 * step + 1e-15);
    }
    SUBCASE("idempotent on the grid") {
        const auto qq = fake_quant(q, obs, 3);
        for (std::size_t i = 0; i < q.size(); ++i) CHECK(qq[i] == doctest::Approx(q[i]).epsilon(1e-12));
    }
    SUBCASE("odd-symmetric, zero preserved") {
        std::vector<double> neg(t.size());
        for (std::size_t i = 0; i < t.size(); ++i) neg[i] = -t[i];
        const auto qn = fake_quant(neg, obs, 3);
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(qn[i] == -q[i]);
        CHECK(fake_quant(std::vector<double>{0.0}, obs, 3)[0] == 0.0);
    }
}

TEST_CASE("empty observer passes through and warns") {
    std::vector<std::string> messages;
    const WarningSink previous = set_warning_sink([&](const std::string& m) { messages.push_back(m); });
    const std::vector<double> t{0.3, -0.7};
    const auto q = fake_quant(t, Observer{}, 4);
    set_warning_sink(previous);
    CHECK(q == t);
    CHECK(messages.size() == 1);
}

TEST_CASE("straight-through gradient masks out-of-range entries") {
    const Observer obs{1.0, ObserverTarget::Activation};
    const std::vector<double> t{-1.5, -1.0, 0.2, 1.0, 1.01};
    const std::vector<double> g{1.0, 2.0, 3.0, 4.0, 5.0};
    const auto out = fake_quant_backward(g, t, obs, 8);
    CHECK(out == std::vector<double>{0.0, 2.0, 3.0, 4.0, 0.0});
    CHECK_THROWS_AS(fake_quant_backward(std::vector<double>{1.0}, t, obs, 8), ShapeError);
}

TEST_CASE("straight-through weight gradients match finite differences") {
    for (int bits : {3, 5, 8}) {
        const oracle::SteCheck check = oracle::ste_gradient_check(24, 8, 16, bits, 150, 100 + bits);
        CHECK(check.points == 150);
        CHECK(check.max_rel_error < 1e-4);
    }
}

TEST_CASE("weights outside the observer range get no gradient") {
    RandomStream rng(3);
    const std::size_t sizes[] = {6, 3};
    TinyNet net = TinyNet::create(sizes, rng);
    RealMatrix batch(4, 6);
    for (double& v : batch.data()) v = rng.uniform(-1.0, 1.0);
    const std::vector<int> labels{0, 1, 2, 0};
    QuantState q;
    q.weight_bits = 4;
    double max_abs = 0.0;
    for (double w : net.layers[0].weight.data()) max_abs = std::max(max_abs, std::abs(w));
    q.weight_observers = {Observer{0.5 * max_abs, ObserverTarget::Weight}};
    q.input_observers = {observe({0.0, ObserverTarget::Activation}, batch.data())};
    net.quant = q;
    const RealMatrix g = weight_gradients(net, batch, labels)[0];
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (std::abs(net.layers[0].weight.data()[k]) > 0.5 * max_abs) CHECK(g.data()[k] == 0.0);
    }
}

TEST_CASE("learning rate schedule warms up then decays") {
    TrainConfig c;
    c.peak_lr = 0.1;
    c.warmup_fraction = 0.1;
    const std::size_t total = 1000;
    CHECK(scheduled_lr(c, 0, total) < 0.01);
    CHECK(scheduled_lr(c, 99, total) == doctest::Approx(0.1).epsilon(0.01));
    CHECK(scheduled_lr(c, 500, total) < scheduled_lr(c, 200, total));
    CHECK(scheduled_lr(c, 999, total) < 0.001);
    for (std::size_t s = 0; s < total; ++s) CHECK(scheduled_lr(c, s, total) <= 0.1 + 1e-12);
}

TEST_CASE("float training is deterministic and learns") {
    const TaskData data = small_task();
    const TinyNet init = fresh_net(5);
    const double before = evaluate_loss(init, data.test);
    const TrainResult a = train_float(init, data, quick_config());
    const TrainResult b = train_float(init, data, quick_config());
    CHECK(a.net.layers[0].weight == b.net.layers[0].weight);
    CHECK(a.curve.size() == 6);
    CHECK(evaluate_loss(a.net, data.test) < before);
    CHECK(evaluate_accuracy(a.net, data.test) > 0.6);
}

TEST_CASE("QAT produces frozen observers and on-grid effective weights") {
    const TaskData data = small_task();
    const TrainResult r = train_qat(fresh_net(6), data, 3, quick_config());
    REQUIRE(r.net.quant.has_value());
    const QuantState& q = *r.net.quant;
    CHECK(q.weight_bits == 3);
    CHECK(q.activation_bits == 8);
    for (std::size_t l = 0; l < r.net.layers.size(); ++l) {
        CHECK(q.weight_observers[l].running_max_abs > 0.0);
        CHECK(q.input_observers[l].running_max_abs > 0.0);
        const double step = observer_scale(q.weight_observers[l], 3);
        for (double w : fake_quant(r.net.layers[l].weight.data(), q.weight_observers[l], 3)) {
            CHECK(std::abs(w / step - std::round(w / step)) < 1e-9);
        }
    }
    CHECK(evaluate_accuracy(r.net, data.test) > 0.6);
    CHECK_THROWS_AS(train_qat(fresh_net(6), data, 1, quick_config()), PreconditionError);
}

TEST_CASE("PTQ is idempotent and tracks the float net at 8 bits") {
    const TaskData data = small_task();
    const TrainResult f = train_float(fresh_net(7), data, quick_config());
    const RealMatrix calib = slice_rows(data.train.features, 0, 256);
    const TinyNet once = ptq_quantize(f.net, calib, 4);
    const TinyNet twice = ptq_quantize(once, calib, 4);
    for (std::size_t l = 0; l < once.layers.size(); ++l) {
        const auto a = once.layers[l].weight.data();
        const auto b = twice.layers[l].weight.data();
        for (std::size_t k = 0; k < a.size(); ++k) CHECK(b[k] == doctest::Approx(a[k]).epsilon(1e-12));
    }
    const TinyNet eight = ptq_quantize(f.net, calib, 8);
    CHECK(std::abs(evaluate_accuracy(eight, data.test) - evaluate_accuracy(f.net, data.test)) <= 0.01);
    CHECK_THROWS_AS(ptq_quantize(f.net, RealMatrix(4, 3), 4), ShapeError);
}

TEST_CASE("net forward checks the input width") {
    const TinyNet net = fresh_net(8);
    CHECK(net.input_dim() == 8);
    CHECK(net.output_dim() == 4);
    CHECK(net_forward(net, std::vector<double>(8, 0.1)).size() == 4);
    CHECK_THROWS_AS(net_forward(net, std::vector<double>(7, 0.1)), ShapeError);
}
