#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "capmix/augment.hpp"
#include "testutil.hpp"

using namespace capmix;

TEST_CASE("plan_patch honors the bounds over many draws") {
    AugmentConfig cfg;
    cfg.min_patch = 8;
    cfg.trend_bound = 0.5;
    cfg.trend_dims = 2;
    Rng rng(123);
    size_t min_r = 1000;
    size_t max_cut_end = 0, max_paste_end = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto plan = plan_patch(rng, 16, 64, 3, cfg);
        min_r = std::min(min_r, plan.length);
        max_cut_end = std::max(max_cut_end, plan.cut_pos + plan.length);
        max_paste_end = std::max(max_paste_end, plan.paste_pos + plan.length);
        REQUIRE(plan.source_index < 16);
        REQUIRE(plan.dims.size() == 2);
        REQUIRE(plan.dims[0] != plan.dims[1]);
        for (double m : plan.slopes) REQUIRE(std::fabs(m) <= 0.5);
    }
    CHECK(min_r >= 8);
    CHECK(max_cut_end <= 64);
    CHECK(max_paste_end <= 64);
}

TEST_CASE("plan_patch boundary: min_patch = t-1 forces r and positions") {
    AugmentConfig cfg;
    cfg.min_patch = 7;  // t = 8
    cfg.trend_dims = 1;
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const auto plan = plan_patch(rng, 4, 8, 1, cfg);
        REQUIRE(plan.length >= 7);
        REQUIRE(plan.cut_pos <= 8 - plan.length);
        REQUIRE(plan.paste_pos <= 8 - plan.length);
        REQUIRE(plan.dims == std::vector<size_t>{0});
    }
}

TEST_CASE("plan_patch replays identically from the same seed") {
    AugmentConfig cfg;
    cfg.min_patch = 4;
    cfg.trend_dims = 2;
    Rng a(77), b(77);
    for (int i = 0; i < 50; ++i) {
        const auto pa = plan_patch(a, 8, 32, 4, cfg);
        const auto pb = plan_patch(b, 8, 32, 4, cfg);
        REQUIRE(pa.length == pb.length);
        REQUIRE(pa.cut_pos == pb.cut_pos);
        REQUIRE(pa.paste_pos == pb.paste_pos);
        REQUIRE(pa.source_index == pb.source_index);
        REQUIRE(pa.dims == pb.dims);
        REQUIRE(pa.slopes == pb.slopes);
    }
}

TEST_CASE("apply_cutaddpaste self-paste with zero slopes is the identity") {
    Rng rng(9);
    const Window w = testutil::random_window(rng, 12, 2);
    PatchPlan plan;
    plan.length = 5;
    plan.cut_pos = 3;
    plan.paste_pos = 3;
    plan.source_index = 0;
    plan.dims = {0, 1};
    plan.slopes = {0.0, 0.0};
    const Window out = apply_cutaddpaste(w, w, plan);
    CHECK(out.data == w.data);
}

TEST_CASE("apply_cutaddpaste equals the piecewise oracle on random pairs") {
    Rng rng(31);
    for (int rep = 0; rep < 300; ++rep) {
        const size_t t = 6 + rng.below(20);
        const size_t d = 1 + rng.below(4);
        AugmentConfig cfg;
        cfg.trend_bound = 0.8;
        cfg.trend_dims = std::min<size_t>(2, d);
        cfg.min_patch = std::min<size_t>(3, t - 1);
        const Window dest = testutil::random_window(rng, t, d);
        const Window source = testutil::random_window(rng, t, d);
        const auto plan = plan_patch(rng, 2, t, d, cfg);
        const Window out = apply_cutaddpaste(dest, source, plan);
        const Matrix expected = testutil::cutaddpaste_piecewise(dest.data, source.data, plan);
        REQUIRE(out.data == expected);  // bit-exact
    }
}

TEST_CASE("apply_cutaddpaste breaks the dimension correlation") {
    // Dim1 = 0.5 * Dim0 + 1 on both windows; a slope on one dim breaks it.
    const size_t t = 32;
    Window dest, source;
    dest.data = Matrix(t, 2);
    source.data = Matrix(t, 2);
    for (size_t i = 0; i < t; ++i) {
        const double a = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 16.0);
        const double b = std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / 16.0);
        dest.data.at(i, 0) = a;
        dest.data.at(i, 1) = 0.5 * a + 1.0;
        source.data.at(i, 0) = b;
        source.data.at(i, 1) = 0.5 * b + 1.0;
    }
    PatchPlan plan;
    plan.length = 16;
    plan.cut_pos = 4;
    plan.paste_pos = 8;
    plan.source_index = 1;
    plan.dims = {1};
    plan.slopes = {0.4};
    const Window out = apply_cutaddpaste(dest, source, plan);

    const auto cov = [](const Matrix& m) {
        double m0 = 0.0, m1 = 0.0;
        for (size_t i = 0; i < m.rows; ++i) {
            m0 += m.at(i, 0);
            m1 += m.at(i, 1);
        }
        m0 /= static_cast<double>(m.rows);
        m1 /= static_cast<double>(m.rows);
        std::array<double, 4> c{0, 0, 0, 0};
        for (size_t i = 0; i < m.rows; ++i) {
            const double d0 = m.at(i, 0) - m0;
            const double d1 = m.at(i, 1) - m1;
            c[0] += d0 * d0;
            c[1] += d0 * d1;
            c[2] += d1 * d0;
            c[3] += d1 * d1;
        }
        return c;
    };
    const auto ca = cov(dest.data);
    const auto cb = cov(out.data);
    double frob = 0.0;
    for (size_t i = 0; i < 4; ++i) frob += (ca[i] - cb[i]) * (ca[i] - cb[i]);
    CHECK(std::sqrt(frob) > 0.0);
}

TEST_CASE("pasting a double-frequency patch moves the span's FFT peak") {
    // seasonality break: the patch carries omega' = 2 * omega
    const size_t t = 64;
    Window dest, source;
    dest.data = Matrix(t, 1);
    source.data = Matrix(t, 1);
    for (size_t i = 0; i < t; ++i) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i) / 32.0;
        dest.data.at(i, 0) = std::sin(phase);
        source.data.at(i, 0) = std::sin(2.0 * phase);
    }
    PatchPlan plan;
    plan.length = 32;
    plan.cut_pos = 0;
    plan.paste_pos = 16;
    plan.source_index = 1;
    plan.dims = {};
    plan.slopes = {};
    const Window out = apply_cutaddpaste(dest, source, plan);

    std::vector<double> patch(32);
    for (size_t i = 0; i < 32; ++i) patch[i] = out.data.at(16 + i, 0);
    CHECK(testutil::dft_peak_bin(patch) == 2);  // 2 cycles in the patch
    std::vector<double> clean(32);
    for (size_t i = 0; i < 32; ++i) clean[i] = dest.data.at(16 + i, 0);
    CHECK(testutil::dft_peak_bin(clean) == 1);
}

TEST_CASE("trend escalation grows linearly and crosses 3 sigma for large r") {
    // standardized flat destination: the patch end sits at slope * r
    const size_t t = 64;
    Window dest, source;
    dest.data = Matrix(t, 1, 0.0);
    source.data = Matrix(t, 1, 0.0);
    const double rho = 0.5;
    for (const size_t r : {8UL, 16UL, 32UL, 64UL}) {
        PatchPlan plan;
        plan.length = r;
        plan.cut_pos = 0;
        plan.paste_pos = 0;
        plan.source_index = 1;
        plan.dims = {0};
        plan.slopes = {rho};
        const Window out = apply_cutaddpaste(dest, source, plan);
        const double end = out.data.at(r - 1, 0);
        CHECK(end == doctest::Approx(rho * static_cast<double>(r)));
    }
    // for r = 8 the end value is 4 > 3 already at slope 0.5 on unit-variance data
    CHECK(rho * 8.0 > 3.0);
}

TEST_CASE("apply_cutaddpaste validates shapes") {
    Rng rng(1);
    const Window a = testutil::random_window(rng, 8, 2);
    const Window b = testutil::random_window(rng, 8, 3);
    PatchPlan plan;
    plan.length = 4;
    plan.dims = {0};
    plan.slopes = {0.1};
    CHECK_THROWS_AS(apply_cutaddpaste(a, b, plan), std::invalid_argument);
}

TEST_CASE("cutaddpaste_batch sizes follow floor(v*B)") {
    Rng rng(42);
    std::vector<Window> batch;
    for (int i = 0; i < 8; ++i) batch.push_back(testutil::random_window(rng, 16, 2));
    AugmentConfig cfg;
    cfg.min_patch = 4;
    cfg.trend_dims = 1;

    SUBCASE("v = 1 keeps the whole batch") {
        cfg.anomaly_ratio = 1.0;
        const auto out = cutaddpaste_batch(batch, cfg, rng);
        CHECK(out.windows.size() == 8);
        for (const auto& w : out.windows) CHECK(w.label == 1.0);
    }
    SUBCASE("v = 0.5, B = 8 keeps exactly 4") {
        cfg.anomaly_ratio = 0.5;
        const auto out = cutaddpaste_batch(batch, cfg, rng);
        CHECK(out.windows.size() == 4);
        std::set<size_t> origins(out.origins.begin(), out.origins.end());
        CHECK(origins.size() == 4);  // without replacement
    }
    SUBCASE("B < 2 is rejected") {
        const std::vector<Window> tiny(batch.begin(), batch.begin() + 1);
        CHECK_THROWS_AS(cutaddpaste_batch(tiny, cfg, rng), std::invalid_argument);
    }
}

TEST_CASE("augmented windows differ from their origin on at least the patch") {
    Rng rng(17);
    std::vector<Window> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(testutil::random_window(rng, 24, 2));
    AugmentConfig cfg;
    cfg.min_patch = 6;
    cfg.trend_bound = 0.5;
    cfg.trend_dims = 1;
    cfg.anomaly_ratio = 1.0;
    const auto out = cutaddpaste_batch(batch, cfg, rng);
    for (size_t k = 0; k < out.windows.size(); ++k) {
        const auto& origin = batch[out.origins[k]];
        size_t diffs = 0;
        for (size_t i = 0; i < origin.data.data.size(); ++i)
            if (origin.data.data[i] != out.windows[k].data.data[i]) ++diffs;
        // the slope makes every selected-dim patch row differ, even on self-paste
        CHECK(diffs >= cfg.min_patch);
    }
}

// ---------------------------------------------------------------------------
// DTW
// ---------------------------------------------------------------------------

TEST_CASE("dtw basics") {
    const auto a = testutil::make_window({{1}, {2}, {3}});
    const auto b = testutil::make_window({{1}, {3}});
    CHECK(dtw(a.data, a.data) == 0.0);
    CHECK(dtw(a.data, b.data) == doctest::Approx(1.0));
    CHECK(dtw(b.data, a.data) == doctest::Approx(1.0));
    CHECK_THROWS_AS(dtw(Matrix(0, 1), a.data), std::invalid_argument);
}

TEST_CASE("dtw equals path enumeration for short sequences over {0,1,2}") {
    // exhaustive over all univariate pairs with lengths <= 4; the acceptance
    // suite extends this to length 6
    for (size_t la = 1; la <= 4; ++la)
        for (size_t lb = 1; lb <= 4; ++lb) {
            size_t na = 1, nb = 1;
            for (size_t i = 0; i < la; ++i) na *= 3;
            for (size_t i = 0; i < lb; ++i) nb *= 3;
            for (size_t ca = 0; ca < na; ++ca)
                for (size_t cb = 0; cb < nb; ++cb) {
                    Matrix a(la, 1), b(lb, 1);
                    size_t ra = ca, rb = cb;
                    for (size_t i = 0; i < la; ++i) {
                        a.at(i, 0) = static_cast<double>(ra % 3);
                        ra /= 3;
                    }
                    for (size_t i = 0; i < lb; ++i) {
                        b.at(i, 0) = static_cast<double>(rb % 3);
                        rb /= 3;
                    }
                    REQUIRE(dtw(a, b) == testutil::dtw_enumeration(a, b));
                }
        }
}

TEST_CASE("dtw properties on random multivariate pairs") {
    Rng rng(7);
    for (int rep = 0; rep < 100; ++rep) {
        const size_t d = 1 + rng.below(3);
        const auto a = testutil::random_window(rng, 2 + rng.below(8), d);
        const auto b = testutil::random_window(rng, 2 + rng.below(8), d);
        const double dab = dtw(a.data, b.data);
        REQUIRE(dab >= 0.0);
        REQUIRE(dab == dtw(b.data, a.data));
        REQUIRE(dtw(a.data, a.data) == 0.0);
    }
}

// ---------------------------------------------------------------------------
// Normality stats and label revision
// ---------------------------------------------------------------------------

TEST_CASE("normality_stats degenerate cases") {
    SUBCASE("identical windows give zero spread") {
        const auto w = testutil::make_window({{1, 2}, {3, 4}});
        const auto stats = normality_stats({w, w, w});
        CHECK(stats.center == w.data);
        CHECK(stats.mean_dist == 0.0);
        CHECK(stats.std_dist == 0.0);
    }
    SUBCASE("w and -w center at zero") {
        const auto w = testutil::make_window({{1}, {-2}, {3}});
        auto neg = w;
        for (double& v : neg.data.data) v = -v;
        const auto stats = normality_stats({w, neg});
        for (double v : stats.center.data) CHECK(v == 0.0);
    }
    SUBCASE("fewer than two windows is rejected") {
        const auto w = testutil::make_window({{1}});
        CHECK_THROWS_AS(normality_stats({w}), std::invalid_argument);
    }
}

TEST_CASE("normality_stats matches a direct recomputation") {
    const auto w1 = testutil::make_window({{0}, {0}, {0}});
    const auto w2 = testutil::make_window({{3}, {3}, {3}});
    const auto w3 = testutil::make_window({{0}, {3}, {0}});
    const std::vector<Window> windows = {w1, w2, w3};
    const auto stats = normality_stats(windows);

    Matrix center(3, 1);
    center.at(0, 0) = 1.0;
    center.at(1, 0) = 2.0;
    center.at(2, 0) = 1.0;
    CHECK(stats.center == center);

    std::vector<double> dists;
    for (const auto& w : windows) dists.push_back(testutil::dtw_enumeration(w.data, center));
    const double mu = (dists[0] + dists[1] + dists[2]) / 3.0;
    double var = 0.0;
    for (double v : dists) var += (v - mu) * (v - mu);
    CHECK(stats.mean_dist == doctest::Approx(mu).epsilon(1e-12));
    CHECK(stats.std_dist == doctest::Approx(std::sqrt(var / 3.0)).epsilon(1e-12));
}

TEST_CASE("revise_labels branches") {
    const auto base = testutil::make_window({{0}, {0}, {0}, {0}});
    NormalityStats stats;
    stats.center = base.data;
    stats.mean_dist = 2.0;
    stats.std_dist = 1.0;

    SUBCASE("gamma = 1 labels everything 1") {
        RevisionConfig cfg{1.0};
        auto far = testutil::make_window({{100}, {100}, {100}, {100}}, 1.0);
        auto near = base;
        near.label = 1.0;
        const auto out = revise_labels({far, near}, stats, cfg);
        CHECK(out[0].label == 1.0);
        CHECK(out[1].label == 1.0);
    }
    SUBCASE("a window equal to the center gets the soft label") {
        RevisionConfig cfg{2.0};
        auto w = base;
        w.label = 1.0;
        const auto out = revise_labels({w}, stats, cfg);
        CHECK(out[0].label == 0.5);
    }
    SUBCASE("hand-evaluated branches at gamma = 2") {
        RevisionConfig cfg{2.0};
        // threshold = 2 + 2*1 = 4; dtw of a constant-c window to zero is c*4
        auto inside = testutil::make_window({{0.5}, {0.5}, {0.5}, {0.5}}, 1.0);   // dist 2
        auto border = testutil::make_window({{1.0}, {1.0}, {1.0}, {1.0}}, 1.0);   // dist 4
        auto outside = testutil::make_window({{2.0}, {2.0}, {2.0}, {2.0}}, 1.0);  // dist 8
        const auto out = revise_labels({inside, border, outside}, stats, cfg);
        CHECK(out[0].label == 0.5);
        CHECK(out[1].label == 0.5);  // strict inequality: the border stays soft
        CHECK(out[2].label == 1.0);
    }
}

TEST_CASE("revise_labels emits only {1, 1/gamma}") {
    Rng rng(23);
    std::vector<Window> train;
    for (int i = 0; i < 10; ++i) train.push_back(testutil::random_window(rng, 8, 2));
    const auto stats = normality_stats(train);
    std::vector<Window> pseudo;
    for (int i = 0; i < 30; ++i) {
        auto w = testutil::random_window(rng, 8, 2);
        for (double& v : w.data.data) v *= 3.0 * rng.uniform();
        w.label = 1.0;
        pseudo.push_back(std::move(w));
    }
    RevisionConfig cfg{2.5};
    const auto out = revise_labels(pseudo, stats, cfg);
    for (const auto& w : out) CHECK((w.label == 1.0 || w.label == 1.0 / 2.5));
}
