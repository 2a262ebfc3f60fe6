#include "capmix/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace capmix {

void AugmentConfig::validate(size_t window_len, size_t dims) const {
    if (min_patch < 1 || min_patch >= window_len)
        throw std::invalid_argument("AugmentConfig: require 0 < min_patch < window length");
    if (trend_bound <= 0.0) throw std::invalid_argument("AugmentConfig: trend_bound must be > 0");
    if (trend_dims < 1 || trend_dims > dims)
        throw std::invalid_argument("AugmentConfig: require 1 <= trend_dims <= dims");
    if (anomaly_ratio <= 0.0 || anomaly_ratio > 1.0)
        throw std::invalid_argument("AugmentConfig: require 0 < anomaly_ratio <= 1");
}

AugmentConfig default_augment_config(size_t window_len, size_t dims) {
    AugmentConfig cfg;
    cfg.min_patch = (window_len + 3) / 4;
    if (cfg.min_patch < 1) cfg.min_patch = 1;
    if (cfg.min_patch >= window_len) cfg.min_patch = window_len - 1;
    cfg.trend_dims = (dims + 1) / 2;
    return cfg;
}

PatchPlan plan_patch(Rng& rng, size_t batch_size, size_t window_len, size_t dims,
                     const AugmentConfig& cfg) {
    cfg.validate(window_len, dims);
    if (batch_size < 1) throw std::invalid_argument("plan_patch: empty batch");

    PatchPlan plan;
    const size_t draw = static_cast<size_t>(rng.uniform() * static_cast<double>(window_len));
    plan.length = std::max(cfg.min_patch, draw);
    plan.cut_pos = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(window_len - plan.length)));
    plan.paste_pos = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(window_len - plan.length)));
    plan.source_index = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(batch_size - 1)));

    if (dims == 1) {
        plan.dims = {0};
    } else {
        plan.dims = rng.sample_without_replacement(dims, cfg.trend_dims);
    }
    plan.slopes.reserve(plan.dims.size());
    for (size_t i = 0; i < plan.dims.size(); ++i) {
        const double factor = rng.uniform() * cfg.trend_bound;
        const double sign = rng.pick_sign();
        plan.slopes.push_back(sign * factor);
    }
    return plan;
}

Window apply_cutaddpaste(const Window& dest, const Window& source, const PatchPlan& plan) {
    const size_t t = dest.data.rows, d = dest.data.cols;
    if (source.data.rows != t || source.data.cols != d)
        throw std::invalid_argument("apply_cutaddpaste: window shape mismatch");
    if (plan.length < 1 || plan.cut_pos + plan.length > t || plan.paste_pos + plan.length > t)
        throw std::invalid_argument("apply_cutaddpaste: plan out of bounds");
    if (plan.dims.size() != plan.slopes.size())
        throw std::invalid_argument("apply_cutaddpaste: dims/slopes size mismatch");
    for (size_t dim : plan.dims)
        if (dim >= d) throw std::invalid_argument("apply_cutaddpaste: dim index out of range");

    Window out = dest;
    for (size_t b = plan.paste_pos; b < plan.paste_pos + plan.length; ++b) {
        const size_t src_row = plan.cut_pos + (b - plan.paste_pos);
        for (size_t c = 0; c < d; ++c) out.data.at(b, c) = source.data.at(src_row, c);
    }
    for (size_t k = 0; k < plan.dims.size(); ++k) {
        const size_t c = plan.dims[k];
        for (size_t b = plan.paste_pos; b < plan.paste_pos + plan.length; ++b)
            out.data.at(b, c) += plan.slopes[k] * static_cast<double>(b - plan.paste_pos + 1);
    }
    return out;
}

AugmentedBatch cutaddpaste_batch(const std::vector<Window>& batch, const AugmentConfig& cfg,
                                 Rng& rng) {
    const size_t B = batch.size();
    if (B < 2) throw std::invalid_argument("cutaddpaste_batch: need at least 2 windows");
    const size_t t = batch[0].data.rows, d = batch[0].data.cols;
    for (const auto& w : batch)
        if (w.data.rows != t || w.data.cols != d)
            throw std::invalid_argument("cutaddpaste_batch: ragged batch");

    std::vector<Window> augmented(B);
    std::vector<PatchPlan> plans(B);
    for (size_t i = 0; i < B; ++i) {
        plans[i] = plan_patch(rng, B, t, d, cfg);
        augmented[i] = apply_cutaddpaste(batch[i], batch[plans[i].source_index], plans[i]);
    }

    const size_t keep = static_cast<size_t>(cfg.anomaly_ratio * static_cast<double>(B));
    const auto chosen = rng.sample_without_replacement(B, keep);

    AugmentedBatch out;
    out.windows.reserve(keep);
    out.plans.reserve(keep);
    out.origins.reserve(keep);
    for (size_t idx : chosen) {
        Window w = std::move(augmented[idx]);
        w.label = 1.0;
        out.windows.push_back(std::move(w));
        out.plans.push_back(std::move(plans[idx]));
        out.origins.push_back(idx);
    }
    return out;
}

double dtw(const Matrix& a, const Matrix& b) {
    if (a.rows == 0 || b.rows == 0) throw std::invalid_argument("dtw: empty input");
    if (a.cols != b.cols) throw std::invalid_argument("dtw: dimensionality mismatch");
    const size_t n = a.rows, m = b.rows, d = a.cols;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
    prev[0] = 0.0;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = inf;
        for (size_t j = 1; j <= m; ++j) {
            double sq = 0.0;
            for (size_t c = 0; c < d; ++c) {
                const double dv = a.at(i - 1, c) - b.at(j - 1, c);
                sq += dv * dv;
            }
            const double cost = std::sqrt(sq);
            cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

NormalityStats normality_stats(const std::vector<Window>& train_windows) {
    const size_t n = train_windows.size();
    if (n < 2) throw std::invalid_argument("normality_stats: need at least 2 windows");
    const size_t t = train_windows[0].data.rows, d = train_windows[0].data.cols;
    for (const auto& w : train_windows)
        if (w.data.rows != t || w.data.cols != d)
            throw std::invalid_argument("normality_stats: ragged windows");

    NormalityStats stats;
    stats.center = Matrix(t, d);
    for (const auto& w : train_windows)
        for (size_t i = 0; i < t * d; ++i) stats.center.data[i] += w.data.data[i];
    for (double& v : stats.center.data) v /= static_cast<double>(n);

    std::vector<double> dists(n);
    for (size_t i = 0; i < n; ++i) dists[i] = dtw(train_windows[i].data, stats.center);
    double sum = 0.0;
    for (double v : dists) sum += v;
    stats.mean_dist = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : dists) {
        const double dv = v - stats.mean_dist;
        sq += dv * dv;
    }
    stats.std_dist = std::sqrt(sq / static_cast<double>(n));
    return stats;
}

std::vector<Window> revise_labels(const std::vector<Window>& pseudo, const NormalityStats& stats,
                                  const RevisionConfig& cfg) {
    const double gamma = std::max(cfg.gamma, 1.0);
    const double threshold = stats.mean_dist + gamma * stats.std_dist;

    std::vector<Window> out = pseudo;
    for (auto& w : out) {
        const double dist = dtw(w.data, stats.center);
        w.label = dist > threshold ? 1.0 : 1.0 / gamma;
    }
    return out;
}

}  // namespace capmix
