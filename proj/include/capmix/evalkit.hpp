#pragma once
#include <cstdint>
#include <vector>

#include "capmix/ts_core.hpp"

namespace capmix {

// (s - mean) / population std; a constant input maps to all zeros with a
// warning.
std::vector<double> zscore_scores(const std::vector<double>& raw);

// 1 iff score > tau (strict).
std::vector<int> detect(const std::vector<double>& scores, double tau);

// Segment-level counts for the revised point-adjusted metric.
struct RpaCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Prf prf_from_counts(const RpaCounts& counts);

// Expands window predictions to points (a point is predicted anomalous when
// any covering window is), then counts TP = true segments containing at
// least one predicted point, FN = true segments containing none, and FP =
// the number of predicted points lying outside every true segment. Counting
// false positives per point rather than per run keeps blanket predictions
// from scoring well. Callers evaluating at window granularity pass the
// window ordinals as starts with window_len 1.
RpaCounts rpa_counts(const std::vector<int>& window_predictions,
                     const std::vector<size_t>& window_starts, size_t window_len,
                     const std::vector<Segment>& true_segments, size_t series_len);

struct ThresholdConfig {
    double tau_min = -3.0;
    double tau_max = 3.0;
    double step = 0.05;

    void validate() const;
};

struct ThresholdResult {
    double tau = 0.0;
    double f1 = 0.0;
};

// Grid search over [tau_min, tau_max] maximizing RPA F1; ties break toward
// the larger tau (fewer alarms). Inputs are expected to be z-scored.
ThresholdResult threshold_search(const std::vector<double>& zscores,
                                 const std::vector<size_t>& window_starts, size_t window_len,
                                 const std::vector<Segment>& true_segments, size_t series_len,
                                 const ThresholdConfig& cfg);

// sum_i (e_i / E) * F1_i with E = sum of the anomaly counts e_i.
double weighted_f1(const std::vector<double>& per_subset_f1,
                   const std::vector<double>& anomaly_counts);

// For series with exactly one true segment: hit iff the argmax-score window
// (earliest on ties) overlaps it.
bool ucr_top1(const std::vector<double>& scores, const std::vector<size_t>& window_starts,
              size_t window_len, const std::vector<Segment>& true_segments);

// i.i.d. U(0,1) scores, deterministic per seed.
std::vector<double> ras_baseline(size_t n, uint64_t seed);

// Mean nearest-neighbor DTW distance from each pseudo-anomaly to the real
// anomaly set, a proxy for the synthetic/real distribution gap. The normal
// windows are validated so callers can compute the reference gap by swapping
// them into the first argument.
double shift_diagnostic(const std::vector<Window>& pseudo_windows,
                        const std::vector<Window>& real_anomaly_windows,
                        const std::vector<Window>& normal_windows);

}  // namespace capmix
