#include <doctest.h>

#include <cmath>
#include <numbers>

#include "capmix/synthgen.hpp"
#include "testutil.hpp"

using namespace capmix;

namespace {

GeneratorConfig correlated_2d(size_t length, double noise) {
    // Dim1 = 0.5 * Dim0 + 1, the running example for correlation structure.
    GeneratorConfig cfg = default_generator_config(length, 2);
    cfg.noise_std = noise;
    cfg.shapelet.mixing = Matrix(2, 2);
    cfg.shapelet.mixing.at(0, 0) = 1.0;
    cfg.shapelet.mixing.at(1, 0) = 0.5;
    cfg.shapelet.offset = {0.0, 1.0};
    return cfg;
}

double pearson(const TimeSeries& s, size_t a, size_t b, size_t lo, size_t hi) {
    double ma = 0.0, mb = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        ma += s.values.at(i, a);
        mb += s.values.at(i, b);
    }
    const double n = static_cast<double>(hi - lo);
    ma /= n;
    mb /= n;
    double cab = 0.0, caa = 0.0, cbb = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        const double da = s.values.at(i, a) - ma;
        const double db = s.values.at(i, b) - mb;
        cab += da * db;
        caa += da * da;
        cbb += db * db;
    }
    return cab / std::sqrt(caa * cbb);
}

// 2x2 covariance over [lo, hi)
std::array<double, 4> cov2(const TimeSeries& s, size_t lo, size_t hi) {
    double m0 = 0.0, m1 = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        m0 += s.values.at(i, 0);
        m1 += s.values.at(i, 1);
    }
    const double n = static_cast<double>(hi - lo);
    m0 /= n;
    m1 /= n;
    std::array<double, 4> c{0, 0, 0, 0};
    for (size_t i = lo; i < hi; ++i) {
        const double d0 = s.values.at(i, 0) - m0;
        const double d1 = s.values.at(i, 1) - m1;
        c[0] += d0 * d0 / n;
        c[1] += d0 * d1 / n;
        c[2] += d1 * d0 / n;
        c[3] += d1 * d1 / n;
    }
    return c;
}

}  // namespace

TEST_CASE("noise-free sine channel matches the analytic waveform") {
    GeneratorConfig cfg = default_generator_config(100, 1);
    cfg.season.omega = 1.0;  // one cycle across the series
    const auto series = generate(cfg);
    for (size_t i = 0; i < 100; ++i) {
        const double expected = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 100.0);
        CHECK(std::fabs(series.values.at(i, 0) - expected) < 1e-9);
    }
}

TEST_CASE("mixing row Dim1 = 0.5*Dim0 + 1 gives correlation 1 without noise") {
    const auto series = generate(correlated_2d(256, 0.0));
    CHECK(std::fabs(pearson(series, 0, 1, 0, 256) - 1.0) < 1e-6);
    for (size_t i = 0; i < 256; ++i)
        CHECK(series.values.at(i, 1) ==
              doctest::Approx(0.5 * series.values.at(i, 0) + 1.0).epsilon(1e-12));
}

TEST_CASE("generation is deterministic given the seed") {
    GeneratorConfig cfg = correlated_2d(300, 0.3);
    cfg.seed = 99;
    const auto a = generate(cfg);
    const auto b = generate(cfg);
    CHECK(a.values == b.values);
}

TEST_CASE("square and sawtooth families stay within amplitude bounds") {
    for (const WaveFamily family : {WaveFamily::Square, WaveFamily::Sawtooth}) {
        GeneratorConfig cfg = default_generator_config(64, 1);
        cfg.shapelet.family = family;
        cfg.season.period = 16;
        const auto series = generate(cfg);
        for (size_t i = 0; i < 64; ++i) {
            CHECK(series.values.at(i, 0) <= 1.0 + 1e-12);
            CHECK(series.values.at(i, 0) >= -1.0 - 1e-12);
        }
    }
}

TEST_CASE("trend segments integrate piecewise") {
    GeneratorConfig cfg = default_generator_config(10, 1);
    cfg.shapelet.amplitude = {1.0};
    cfg.season.omega = 1.0;
    cfg.season.period = 0;
    cfg.trend.segments = {{0, {1.0}}, {4, {-2.0}}};
    const auto series = generate(cfg);
    // subtract the sine part to isolate the trend
    for (size_t i = 0; i < 10; ++i) {
        const double wave = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 10.0);
        const double trend = series.values.at(i, 0) - wave;
        const double expected =
            i <= 4 ? static_cast<double>(i) : 4.0 - 2.0 * static_cast<double>(i - 4);
        CHECK(trend == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("global injection crosses three sigma") {
    GeneratorConfig cfg = correlated_2d(512, 0.05);
    cfg.seed = 5;
    const auto clean = generate(cfg);

    double mu = 0.0;
    for (size_t i = 0; i < 512; ++i) mu += clean.values.at(i, 0);
    mu /= 512.0;
    double var = 0.0;
    for (size_t i = 0; i < 512; ++i) {
        const double d = clean.values.at(i, 0) - mu;
        var += d * d;
    }
    const double sigma = std::sqrt(var / 512.0);

    const auto injected =
        inject_ground_truth(clean, {{AnomalyKind::Global, 100, 1, 4.0}}, cfg, 1);
    CHECK(std::fabs(injected.values.at(100, 0) - mu) / sigma >= 3.0);
    CHECK((*injected.labels)[100] == 1);
    CHECK((*injected.labels)[99] == 0);
}

TEST_CASE("global injection requires magnitude >= 3") {
    GeneratorConfig cfg = correlated_2d(256, 0.0);
    const auto clean = generate(cfg);
    CHECK_THROWS_AS(inject_ground_truth(clean, {{AnomalyKind::Global, 10, 1, 2.0}}, cfg, 1),
                    std::invalid_argument);
}

TEST_CASE("correlation injection changes the span covariance") {
    GeneratorConfig cfg = correlated_2d(512, 0.0);
    const auto clean = generate(cfg);
    const auto injected =
        inject_ground_truth(clean, {{AnomalyKind::Correlation, 128, 128, 1.0}}, cfg, 1);

    const auto clean_cov = cov2(clean, 128, 256);
    const auto inj_cov = cov2(injected, 128, 256);
    double frob = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        const double d = clean_cov[i] - inj_cov[i];
        frob += d * d;
    }
    CHECK(std::sqrt(frob) > 0.0);
    // the correlation flips sign on the span
    CHECK(pearson(injected, 0, 1, 128, 256) < -0.9);
}

TEST_CASE("empty spec list is the identity") {
    GeneratorConfig cfg = correlated_2d(128, 0.2);
    const auto clean = generate(cfg);
    const auto injected = inject_ground_truth(clean, {}, cfg, 3);
    CHECK(injected.values == clean.values);
}

TEST_CASE("overlapping specs are rejected") {
    GeneratorConfig cfg = correlated_2d(256, 0.0);
    const auto clean = generate(cfg);
    const std::vector<GtAnomalySpec> specs = {{AnomalyKind::Trend, 10, 50, 2.0},
                                              {AnomalyKind::Shape, 40, 30, 1.0}};
    CHECK_THROWS_AS(inject_ground_truth(clean, specs, cfg, 1), std::invalid_argument);
}

TEST_CASE("labels are 1 exactly on injected spans") {
    GeneratorConfig cfg = correlated_2d(600, 0.1);
    cfg.seed = 8;
    const auto clean = generate(cfg);
    const std::vector<GtAnomalySpec> specs = {{AnomalyKind::Shape, 50, 40, 1.0},
                                              {AnomalyKind::Global, 200, 2, 4.0},
                                              {AnomalyKind::Trend, 400, 60, 3.0}};
    const auto injected = inject_ground_truth(clean, specs, cfg, 2);
    std::vector<int> expected(600, 0);
    for (const auto& sp : specs)
        for (size_t i = sp.start; i < sp.start + sp.length; ++i) expected[i] = 1;
    CHECK(*injected.labels == expected);
}

TEST_CASE("seasonal injection with magnitude 2 doubles the FFT peak") {
    GeneratorConfig cfg = default_generator_config(512, 1);
    cfg.season.omega = 1.0;
    cfg.season.period = 32;  // clean peak at bin span/32
    const auto clean = generate(cfg);
    const auto injected =
        inject_ground_truth(clean, {{AnomalyKind::Seasonal, 128, 128, 2.0}}, cfg, 1);

    std::vector<double> clean_span(128), injected_span(128);
    for (size_t i = 0; i < 128; ++i) {
        clean_span[i] = clean.values.at(128 + i, 0);
        injected_span[i] = injected.values.at(128 + i, 0);
    }
    const size_t clean_peak = testutil::dft_peak_bin(clean_span);
    const size_t injected_peak = testutil::dft_peak_bin(injected_span);
    CHECK(clean_peak == 4);  // 128 / 32
    CHECK(injected_peak == 2 * clean_peak);
}

TEST_CASE("shape injection swaps the waveform family on the span") {
    GeneratorConfig cfg = default_generator_config(256, 1);
    cfg.season.period = 32;
    const auto clean = generate(cfg);
    const auto injected = inject_ground_truth(clean, {{AnomalyKind::Shape, 64, 64, 1.0}}, cfg, 1);
    // outside the span nothing moved
    for (size_t i = 0; i < 64; ++i) CHECK(injected.values.at(i, 0) == clean.values.at(i, 0));
    // inside, the sine became a square wave of the same frequency
    bool any_difference = false;
    for (size_t i = 64; i < 128; ++i) {
        CHECK(std::fabs(std::fabs(injected.values.at(i, 0)) - 1.0) < 1e-9);
        if (std::fabs(injected.values.at(i, 0) - clean.values.at(i, 0)) > 1e-6)
            any_difference = true;
    }
    CHECK(any_difference);
}

TEST_CASE("contextual injection crosses local sigma but stays inside global 3 sigma") {
    GeneratorConfig cfg = default_generator_config(1024, 1);
    cfg.season.period = 256;  // slow wave: local sigma well below global sigma
    const auto clean = generate(cfg);
    const auto injected =
        inject_ground_truth(clean, {{AnomalyKind::Contextual, 500, 1, 3.5}}, cfg, 1);

    double mu = 0.0;
    for (size_t i = 0; i < 1024; ++i) mu += clean.values.at(i, 0);
    mu /= 1024.0;
    double var = 0.0;
    for (size_t i = 0; i < 1024; ++i) {
        const double d = clean.values.at(i, 0) - mu;
        var += d * d;
    }
    const double sigma = std::sqrt(var / 1024.0);
    CHECK(std::fabs(injected.values.at(500, 0) - mu) <= 3.0 * sigma);

    double lmu = 0.0;
    for (size_t i = 468; i <= 532; ++i) lmu += clean.values.at(i, 0);
    lmu /= 65.0;
    double lvar = 0.0;
    for (size_t i = 468; i <= 532; ++i) {
        const double d = clean.values.at(i, 0) - lmu;
        lvar += d * d;
    }
    const double lsigma = std::sqrt(lvar / 65.0);
    CHECK(std::fabs(injected.values.at(500, 0) - lmu) > 3.0 * lsigma);
}
