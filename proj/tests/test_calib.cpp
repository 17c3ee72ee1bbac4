#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "sole/calib.hpp"
#include "sole/error.hpp"
#include "sole/random.hpp"

using namespace sole::calib;

namespace {

std::string error_code(auto&& f) {
    try {
        f();
    } catch (const sole::Error& e) {
        return e.code();
    }
    return "none";
}

}  // namespace

TEST_CASE("calibrate_minmax examples") {
    std::vector<double> a{0.0, 100.0, 255.0};
    auto p = calibrate_minmax(a);
    CHECK(p.scale == 1.0);
    CHECK(p.zp == 0);

    std::vector<double> b{-1.0, 0.3, 1.0};
    p = calibrate_minmax(b);
    CHECK(p.scale == doctest::Approx(2.0 / 255));
    CHECK(p.zp == 128);

    std::vector<double> c(5, 3.25);
    p = calibrate_minmax(c);
    CHECK(p.scale == 1.0);
    CHECK(p.zp == 128);

    CHECK(error_code([] { calibrate_minmax(std::vector<double>{}); }) == "empty-tensor");
    CHECK(error_code([] { calibrate_minmax(std::vector<double>{1.0, std::nan("")}); }) == "non-finite");
}

TEST_CASE("calibrate_pow2 examples") {
    CHECK(calibrate_pow2(std::vector<double>{0.0, -3.0, -8.0}, 3) == 4);
    CHECK(calibrate_pow2(std::vector<double>{0.0, -128.0}, 2) == 0);
    CHECK(calibrate_pow2(std::vector<double>{2.0, 2.0, 2.0}, 3) == 8);
    CHECK(calibrate_pow2(std::vector<double>{0.0, -500.0}, 2) == 0);
    // Rows are independent: only within-row differences count.
    CHECK(calibrate_pow2(std::vector<double>{100.0, 99.0, -100.0, -101.0}, 2) == 7);
    CHECK(error_code([] { calibrate_pow2(std::vector<double>{1.0, 2.0, 3.0}, 2); }) == "shape-error");
}

TEST_CASE("calibrate_ptf: identical channels share the smallest alpha") {
    sole::CounterRng rng(1);
    const std::size_t c = 6, rows = 200;
    std::vector<double> x(rows * c);
    for (std::size_t r = 0; r < rows; ++r) {
        const double v = rng.normal();
        for (std::size_t k = 0; k < c; ++k) x[r * c + k] = v;
    }
    const auto p = calibrate_ptf(x, c);
    for (auto a : p.alphas) CHECK(a == 0);
}

TEST_CASE("calibrate_ptf: a channel scaled by 8 gets alpha 3") {
    sole::CounterRng rng(2);
    const std::size_t rows = 500;
    std::vector<double> x(rows * 2);
    for (std::size_t r = 0; r < rows; ++r) {
        const double v = rng.normal();
        x[r * 2] = v;
        x[r * 2 + 1] = 8.0 * v;
    }
    const auto p = calibrate_ptf(x, 2);
    CHECK(p.alphas[0] == 0);
    CHECK(p.alphas[1] == 3);
}

TEST_CASE("calibrate_ptf matches an exhaustive argmin with smaller-alpha ties") {
    sole::CounterRng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t c = 1 + rng.below(5), rows = 50;
        std::vector<double> spread(c);
        for (auto& s : spread) s = std::exp2(4.0 * rng.uniform());
        std::vector<double> x(rows * c);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = spread[i % c] * rng.normal();
        const auto p = calibrate_ptf(x, c);
        REQUIRE(p.alphas.size() == c);
        for (std::size_t k = 0; k < c; ++k) {
            double best = std::numeric_limits<double>::infinity();
            int arg = -1;
            for (int a = 0; a <= 3; ++a) {
                const double mse = ptf_channel_mse(x, c, k, a, p.scale, p.zp, 8);
                if (mse < best) {
                    best = mse;
                    arg = a;
                }
            }
            CHECK(p.alphas[k] == arg);
            CHECK(p.alphas[k] <= 3);
        }
        CHECK(calibrate_ptf(x, c).alphas == p.alphas);  // deterministic
    }
    std::vector<double> x{0.5, 1.0, 2.0};
    CHECK(calibrate_ptf(x, 3, 8, 0).alphas == std::vector<std::uint8_t>{0, 0, 0});
    CHECK(error_code([] { calibrate_ptf(std::vector<double>{}, 1); }) == "empty-tensor");
}

TEST_CASE("quantize/dequantize") {
    PTFParams p;
    p.alphas = {0, 1, 3};
    p.scale = 0.05;
    p.zp = 120;
    const std::vector<double> zero(3, 0.0);
    CHECK(quantize(zero, p) == std::vector<std::uint8_t>(3, 120));

    // Grid points round trip exactly.
    const std::vector<std::uint8_t> grid{0, 17, 255};
    CHECK(quantize(dequantize(grid, p), p) == grid);

    sole::CounterRng rng(8);
    std::vector<double> x(300);
    for (auto& v : x) v = 0.5 * rng.normal();
    const auto q = quantize(x, p);
    const auto back = dequantize(q, p);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = std::ldexp(p.scale, p.alphas[i % 3]);
        const double lo = (0 - p.zp) * step, hi = (255 - p.zp) * step;
        if (x[i] > lo && x[i] < hi) CHECK(std::abs(back[i] - x[i]) <= 0.5 * step + 1e-12);
    }
    CHECK(quantize(dequantize(q, p), p) == q);
    CHECK(error_code([&] { quantize(std::vector<double>(4, 0.0), p); }) == "shape-error");
}

TEST_CASE("quantize_pow2 saturates to int8") {
    const std::vector<double> x{0.0, -1.0, 0.03125, 100.0, -100.0};
    CHECK(quantize_pow2(x, 4) == std::vector<std::int32_t>{0, -16, 1, 127, -128});
}

TEST_CASE("PTF JSON document") {
    PTFParams p;
    p.alphas = {0, 2, 3};
    p.scale = 0.125;
    p.zp = 7;
    const auto text = p.to_json();
    CHECK(text.find("\"alphas\"") != std::string::npos);
    const auto back = PTFParams::from_json(text);
    CHECK(back.alphas == p.alphas);
    CHECK(back.scale == p.scale);
    CHECK(back.zp == p.zp);
    CHECK(back.bits == 8);
    CHECK(error_code([] { PTFParams::from_json("{\"scale\": 1}"); }) == "bad-json");
    CHECK(error_code([] { PTFParams::from_json(R"({"scale":-1,"zp":0,"bits":8,"alphas":[0]})"); }) == "bad-config");
}
