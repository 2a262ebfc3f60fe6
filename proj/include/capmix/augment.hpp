#pragma once
#include <cstddef>
#include <vector>

#include "capmix/rng.hpp"
#include "capmix/ts_core.hpp"

namespace capmix {

struct AugmentConfig {
    size_t min_patch = 8;      // zeta, 0 < zeta < t
    double trend_bound = 0.5;  // rho, > 0
    size_t trend_dims = 1;     // e, 1 <= e <= d
    double anomaly_ratio = 0.5;  // v, 0 < v <= 1

    void validate(size_t window_len, size_t dims) const;
};

// Shipped defaults: zeta = ceil(t/4), e = ceil(d/2), rho = 0.5, v = 0.5.
AugmentConfig default_augment_config(size_t window_len, size_t dims);

// The randomized decisions defining one injection.
struct PatchPlan {
    size_t length = 0;        // r, zeta <= r <= t
    size_t cut_pos = 0;       // k_cut, cut_pos + r <= t
    size_t paste_pos = 0;     // k_paste, paste_pos + r <= t
    size_t source_index = 0;  // j in {0, ..., B-1}
    std::vector<size_t> dims;    // e selected dims ({0} when d = 1)
    std::vector<double> slopes;  // signed trend slope per selected dim, |m| <= rho
};

// r = max(zeta, floor(u*t)); positions uniform over {0, ..., t-r}; dims drawn
// without replacement; slope = sign * U(0, rho) per selected dim.
PatchPlan plan_patch(Rng& rng, size_t batch_size, size_t window_len, size_t dims,
                     const AugmentConfig& cfg);

// Pastes source[cut_pos, cut_pos+r) over dest[paste_pos, paste_pos+r) and adds
// slope * (offset_in_patch + 1) on each selected dim. Everything outside the
// patch is dest unchanged.
Window apply_cutaddpaste(const Window& dest, const Window& source, const PatchPlan& plan);

struct AugmentedBatch {
    std::vector<Window> windows;   // floor(v*B) pseudo-anomalies, label 1
    std::vector<PatchPlan> plans;  // aligned with windows
    std::vector<size_t> origins;   // index of the destination window in the input batch
};

// Augments every window with an independent plan, then keeps a uniform random
// subset of floor(v*B) windows with raw label 1. Requires B >= 2.
AugmentedBatch cutaddpaste_batch(const std::vector<Window>& batch, const AugmentConfig& cfg,
                                 Rng& rng);

// Dependent multivariate DTW: dynamic programming over the full grid with
// per-step Euclidean cost, boundary anchored, steps {(1,0),(0,1),(1,1)}.
double dtw(const Matrix& a, const Matrix& b);

struct NormalityStats {
    Matrix center;          // C_n: elementwise mean of the training windows
    double mean_dist = 0.0;  // mu_d over dtw(X_i, C_n)
    double std_dist = 0.0;   // sigma_d (population)
};

NormalityStats normality_stats(const std::vector<Window>& train_windows);

struct RevisionConfig {
    double gamma = 2.0;  // clamped to >= 1
};

// Far-from-center pseudo-anomalies keep hard label 1; the rest get soft 1/gamma.
std::vector<Window> revise_labels(const std::vector<Window>& pseudo, const NormalityStats& stats,
                                  const RevisionConfig& cfg);

}  // namespace capmix
