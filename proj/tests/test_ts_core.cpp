#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "capmix/ts_core.hpp"
#include "testutil.hpp"

using namespace capmix;

TEST_CASE("standardize matches hand computation on [1,2,3]") {
    const auto series = testutil::make_series({{1.0}, {2.0}, {3.0}});
    const auto [out, stats] = standardize(series);
    CHECK(stats.mean[0] == doctest::Approx(2.0));
    CHECK(stats.stddev[0] == doctest::Approx(0.81649658092772603));
    CHECK(out.values.at(0, 0) == doctest::Approx(-1.2247448713915889));
    CHECK(out.values.at(1, 0) == doctest::Approx(0.0));
    CHECK(out.values.at(2, 0) == doctest::Approx(1.2247448713915889));
}

TEST_CASE("standardize: constant dimension falls back to std 1") {
    const auto series = testutil::make_series({{5.0}, {5.0}, {5.0}});
    const auto [out, stats] = standardize(series);
    CHECK(stats.stddev[0] == 1.0);
    for (size_t r = 0; r < 3; ++r) CHECK(out.values.at(r, 0) == 0.0);
}

TEST_CASE("standardize is idempotent and invertible") {
    Rng rng(7);
    TimeSeries series;
    series.values = Matrix(40, 3);
    for (double& v : series.values.data) v = 2.0 + 3.0 * rng.normal();
    const auto [z1, stats] = standardize(series);

    SUBCASE("fresh stats give mean 0 / std 1") {
        for (size_t c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (size_t r = 0; r < 40; ++r) mean += z1.values.at(r, c);
            mean /= 40.0;
            CHECK(std::fabs(mean) < 1e-9);
            double sq = 0.0;
            for (size_t r = 0; r < 40; ++r) sq += z1.values.at(r, c) * z1.values.at(r, c);
            CHECK(std::fabs(std::sqrt(sq / 40.0) - 1.0) < 1e-9);
        }
    }
    SUBCASE("re-standardizing is the identity within 1e-9") {
        const auto z2 = standardize(z1).first;
        for (size_t i = 0; i < z1.values.data.size(); ++i)
            CHECK(std::fabs(z1.values.data[i] - z2.values.data[i]) < 1e-9);
    }
    SUBCASE("inverse transform reconstructs the input within 1e-9") {
        const auto back = destandardize(z1, stats);
        for (size_t i = 0; i < series.values.data.size(); ++i)
            CHECK(std::fabs(series.values.data[i] - back.values.data[i]) < 1e-9);
    }
}

TEST_CASE("standardize rejects an empty series") {
    TimeSeries series;
    series.values = Matrix(0, 1);
    CHECK_THROWS_AS(standardize(series), std::invalid_argument);
}

TEST_CASE("slide_windows enumerates starts and labels") {
    SUBCASE("l=10, t=4, stride=2 gives starts 0,2,4,6") {
        TimeSeries series = testutil::make_series(
            {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}});
        const auto windows = slide_windows(series, {4, 2});
        REQUIRE(windows.size() == 4);
        for (size_t i = 0; i < 4; ++i) {
            CHECK(windows[i].start == 2 * i);
            CHECK(windows[i].data.at(0, 0) == static_cast<double>(2 * i));
        }
    }
    SUBCASE("l == t gives exactly one window") {
        TimeSeries series = testutil::make_series({{1}, {2}, {3}});
        CHECK(slide_windows(series, {3, 1}).size() == 1);
        CHECK(slide_windows(series, {3, 3}).size() == 1);
    }
    SUBCASE("any anomalous point marks the window") {
        TimeSeries series = testutil::make_series({{0}, {0}, {1}, {0}}, {0, 0, 1, 0});
        const auto windows = slide_windows(series, {2, 2});
        REQUIRE(windows.size() == 2);
        CHECK(windows[0].label == 0.0);
        CHECK(windows[1].label == 1.0);
    }
    SUBCASE("t > l is rejected") {
        TimeSeries series = testutil::make_series({{1}, {2}});
        CHECK_THROWS_AS(slide_windows(series, {3, 1}), std::invalid_argument);
    }
}

TEST_CASE("window count formula holds exhaustively for l <= 32") {
    for (size_t l = 1; l <= 32; ++l) {
        TimeSeries series;
        series.values = Matrix(l, 1, 1.0);
        for (size_t t = 1; t <= l; ++t)
            for (size_t stride = 1; stride <= t; ++stride) {
                const auto windows = slide_windows(series, {t, stride});
                const size_t expected = (l - t) / stride + 1;
                REQUIRE(windows.size() == expected);
                for (size_t i = 0; i < windows.size(); ++i)
                    REQUIRE(windows[i].start == i * stride);
            }
    }
}

TEST_CASE("anomaly_segments finds maximal runs") {
    CHECK(anomaly_segments({0, 1, 1, 0, 1}) == std::vector<Segment>{{1, 3}, {4, 5}});
    CHECK(anomaly_segments({0, 0, 0}).empty());
    CHECK(anomaly_segments({1, 1, 1, 1}) == std::vector<Segment>{{0, 4}});
    CHECK(anomaly_segments({}).empty());
    CHECK_THROWS_AS(anomaly_segments({0, 2, 1}), std::invalid_argument);
}

TEST_CASE("anomaly_segments round-trips on random vectors") {
    Rng rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const size_t n = 1 + rng.below(30);
        std::vector<int> labels(n);
        for (int& v : labels) v = rng.uniform() < 0.4 ? 1 : 0;
        std::vector<int> rebuilt(n, 0);
        for (const auto& seg : anomaly_segments(labels))
            for (size_t i = seg.start; i < seg.end; ++i) rebuilt[i] = 1;
        REQUIRE(rebuilt == labels);
    }
}

TEST_CASE("series csv round-trips exactly") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "capmix_ts_csv";
    fs::create_directories(dir);
    const std::string path = (dir / "series.csv").string();

    Rng rng(3);
    TimeSeries series;
    series.values = Matrix(17, 2);
    for (double& v : series.values.data) v = rng.normal() * 1e3;
    series.labels = std::vector<int>(17, 0);
    (*series.labels)[5] = 1;

    write_series_csv(series, path);
    const auto back = read_series_csv(path);
    CHECK(back.values == series.values);  // %.17g writes are read back bit-exactly
    CHECK(*back.labels == *series.labels);

    SUBCASE("header validation") {
        std::ofstream bad(path);
        bad << "time,dim_1\n0,1\n";
        bad.close();
        CHECK_THROWS_AS(read_series_csv(path), std::invalid_argument);
    }
    SUBCASE("non-finite values are rejected") {
        std::ofstream bad(path);
        bad << "time,dim_0\n0,nan\n";
        bad.close();
        CHECK_THROWS_AS(read_series_csv(path), std::invalid_argument);
    }
    SUBCASE("label column must be 0/1") {
        std::ofstream bad(path);
        bad << "time,dim_0,label\n0,1.5,2\n";
        bad.close();
        CHECK_THROWS_AS(read_series_csv(path), std::invalid_argument);
    }
}
