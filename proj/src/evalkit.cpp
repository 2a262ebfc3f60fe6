#include "capmix/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "capmix/augment.hpp"
#include "capmix/log.hpp"
#include "capmix/rng.hpp"

namespace capmix {

std::vector<double> zscore_scores(const std::vector<double>& raw) {
    if (raw.size() < 2) throw std::invalid_argument("zscore_scores: need at least 2 scores");
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= static_cast<double>(raw.size());
    double sq = 0.0;
    for (double v : raw) {
        const double d = v - mean;
        sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(raw.size()));
    std::vector<double> out(raw.size(), 0.0);
    if (std_dev <= 0.0) {
        log_warn("zscore_scores: constant scores, emitting zeros");
        return out;
    }
    for (size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean) / std_dev;
    return out;
}

std::vector<int> detect(const std::vector<double>& scores, double tau) {
    std::vector<int> out(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > tau ? 1 : 0;
    return out;
}

Prf prf_from_counts(const RpaCounts& counts) {
    Prf out;
    const double tp = static_cast<double>(counts.tp);
    if (counts.tp + counts.fp > 0) out.precision = tp / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0) out.recall = tp / static_cast<double>(counts.tp + counts.fn);
    if (out.precision + out.recall > 0.0)
        out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

RpaCounts rpa_counts(const std::vector<int>& window_predictions,
                     const std::vector<size_t>& window_starts, size_t window_len,
                     const std::vector<Segment>& true_segments, size_t series_len) {
    if (window_predictions.size() != window_starts.size())
        throw std::invalid_argument("rpa_counts: prediction/start size mismatch");

    std::vector<int> point_pred(series_len, 0);
    for (size_t w = 0; w < window_predictions.size(); ++w) {
        if (window_predictions[w] == 0) continue;
        const size_t lo = window_starts[w];
        const size_t hi = std::min(series_len, lo + window_len);
        for (size_t i = lo; i < hi; ++i) point_pred[i] = 1;
    }

    std::vector<int> in_truth(series_len, 0);
    for (const auto& seg : true_segments)
        for (size_t i = seg.start; i < std::min(seg.end, series_len); ++i) in_truth[i] = 1;

    RpaCounts counts;
    for (const auto& seg : true_segments) {
        bool touched = false;
        for (size_t i = seg.start; i < std::min(seg.end, series_len); ++i)
            if (point_pred[i]) {
                touched = true;
                break;
            }
        if (touched)
            ++counts.tp;
        else
            ++counts.fn;
    }
    for (size_t i = 0; i < series_len; ++i)
        if (point_pred[i] && !in_truth[i]) ++counts.fp;
    return counts;
}

void ThresholdConfig::validate() const {
    if (!(tau_min < tau_max)) throw std::invalid_argument("ThresholdConfig: tau_min < tau_max");
    if (step <= 0.0) throw std::invalid_argument("ThresholdConfig: step must be > 0");
}

ThresholdResult threshold_search(const std::vector<double>& zscores,
                                 const std::vector<size_t>& window_starts, size_t window_len,
                                 const std::vector<Segment>& true_segments, size_t series_len,
                                 const ThresholdConfig& cfg) {
    cfg.validate();
    ThresholdResult best{cfg.tau_min, -1.0};
    const double limit = cfg.tau_max + cfg.step * 1e-9;
    for (double tau = cfg.tau_min; tau <= limit; tau += cfg.step) {
        const auto preds = detect(zscores, tau);
        const auto counts = rpa_counts(preds, window_starts, window_len, true_segments, series_len);
        const double f1 = prf_from_counts(counts).f1;
        if (f1 >= best.f1) {  // ties break toward the larger tau
            best.f1 = f1;
            best.tau = tau;
        }
    }
    return best;
}

double weighted_f1(const std::vector<double>& per_subset_f1,
                   const std::vector<double>& anomaly_counts) {
    if (per_subset_f1.size() != anomaly_counts.size() || per_subset_f1.empty())
        throw std::invalid_argument("weighted_f1: size mismatch");
    double total = 0.0;
    for (double e : anomaly_counts) {
        if (e < 0.0) throw std::invalid_argument("weighted_f1: negative anomaly count");
        total += e;
    }
    if (total <= 0.0) throw std::invalid_argument("weighted_f1: anomaly counts sum to zero");
    double acc = 0.0;
    for (size_t i = 0; i < per_subset_f1.size(); ++i)
        acc += anomaly_counts[i] / total * per_subset_f1[i];
    return acc;
}

bool ucr_top1(const std::vector<double>& scores, const std::vector<size_t>& window_starts,
              size_t window_len, const std::vector<Segment>& true_segments) {
    if (true_segments.size() != 1)
        throw std::invalid_argument("ucr_top1: expected exactly one true segment");
    if (scores.size() != window_starts.size() || scores.empty())
        throw std::invalid_argument("ucr_top1: score/start size mismatch");
    size_t best = 0;
    for (size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;  // earliest window wins ties
    const size_t lo = window_starts[best];
    const size_t hi = lo + window_len;
    const auto& seg = true_segments[0];
    return lo < seg.end && seg.start < hi;
}

std::vector<double> ras_baseline(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> out(n);
    for (double& v : out) v = rng.uniform();
    return out;
}

double shift_diagnostic(const std::vector<Window>& pseudo_windows,
                        const std::vector<Window>& real_anomaly_windows,
                        const std::vector<Window>& normal_windows) {
    if (pseudo_windows.empty() || real_anomaly_windows.empty() || normal_windows.empty())
        throw std::invalid_argument("shift_diagnostic: all three window sets must be non-empty");
    double acc = 0.0;
    for (const auto& p : pseudo_windows) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& r : real_anomaly_windows)
            nearest = std::min(nearest, dtw(p.data, r.data));
        acc += nearest;
    }
    return acc / static_cast<double>(pseudo_windows.size());
}

}  // namespace capmix
