#include <doctest.h>

#include <cmath>

#include "memsim/converter.hpp"
#include "memsim/errors.hpp"
#include "memsim/random.hpp"

using namespace memsim;

TEST_CASE("dac examples") {
    const ConverterSpec spec{8, 0.6};
    CHECK(spec.max_level() == 127);
    CHECK(dac_code(0.5, spec) == 64);
    CHECK(dac(0.5, spec) == doctest::Approx(0.302362).epsilon(1e-6));
    CHECK(dac(1.0, spec) == 0.6);
    CHECK(dac(-1.0, spec) == -0.6);
    CHECK(dac(0.0, spec) == 0.0);
    SUBCASE("inputs beyond the range clamp") {
        CHECK(dac(3.0, spec) == 0.6);
        CHECK(dac(-3.0, spec) == -0.6);
    }
}

TEST_CASE("adc examples") {
    const ConverterSpec spec{8, 1e-3};
    SaturationCounter counter;
    CHECK(adc(1.5e-3, spec, counter) == 127);
    CHECK(counter.saturated == 1);
    CHECK(adc(-2e-3, spec, counter) == -127);
    CHECK(counter.saturated == 2);
    CHECK(adc(0.5e-3, spec, counter) == 64);
    CHECK(adc(1e-3, spec, counter) == 127);
    CHECK(counter.saturated == 2);
    CHECK(counter.conversions == 4);
    CHECK(counter.ratio() == doctest::Approx(0.5));
}

TEST_CASE("counters merge by summation") {
    SaturationCounter a{10, 1};
    const SaturationCounter b{30, 3};
    a.merge(b);
    CHECK(a.conversions == 40);
    CHECK(a.saturated == 4);
    CHECK(SaturationCounter{}.ratio() == 0.0);
}

TEST_CASE("converters are odd-symmetric") {
    RandomStream rng(8);
    for (int bits : {2, 3, 5, 8, 12}) {
        const ConverterSpec spec{bits, 1.0};
        for (int k = 0; k < 2000; ++k) {
            const double x = rng.uniform(-1.5, 1.5);
            CHECK(dac_code(-x, spec) == -dac_code(x, spec));
            CHECK(adc(-x, spec) == -adc(x, spec));
        }
        // exact half-steps round away from zero on both sides
        const double half = 0.5 / spec.max_level();
        CHECK(dac_code(half, spec) == 1);
        CHECK(dac_code(-half, spec) == -1);
    }
}

TEST_CASE("in-range quantization error is at most half a step") {
    RandomStream rng(9);
    for (int bits : {2, 4, 8}) {
        const ConverterSpec spec{bits, 2.5e-4};
        for (int k = 0; k < 2000; ++k) {
            const double i = rng.uniform(-spec.full_scale, spec.full_scale);
            const double err = std::abs(adc_decode(adc(i, spec), spec) - i);
            CHECK(err <= 0.5 * spec.step() * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("adc recovers every dac code through an ideal conductance") {
    const ConverterSpec d{8, 0.6};
    const double g = 208e-6;
    const ConverterSpec a{8, d.full_scale * g};
    for (int code = -d.max_level(); code <= d.max_level(); ++code) {
        const double v = dac(static_cast<double>(code) / d.max_level(), d);
        CHECK(adc(v * g, a) == code);
    }
}

TEST_CASE("converter validation") {
    CHECK_THROWS_AS((ConverterSpec{1, 1.0}.validate()), PreconditionError);
    CHECK_THROWS_AS((ConverterSpec{8, 0.0}.validate()), PreconditionError);
    CHECK_THROWS_AS((ConverterSpec{8, -1.0}.validate()), PreconditionError);
    CHECK_NOTHROW((ConverterSpec{2, 1.0}.validate()));
}
