#include "capmix/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "capmix/rng.hpp"

namespace capmix {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wave_value(WaveFamily family, double theta) {
    switch (family) {
        case WaveFamily::Sine:
            return std::sin(theta);
        case WaveFamily::Square:
            return std::sin(theta) >= 0.0 ? 1.0 : -1.0;
        case WaveFamily::Sawtooth: {
            const double frac = theta / kTwoPi - std::floor(theta / kTwoPi);
            return 2.0 * frac - 1.0;
        }
    }
    return 0.0;
}

WaveFamily next_family(WaveFamily f) {
    switch (f) {
        case WaveFamily::Sine: return WaveFamily::Square;
        case WaveFamily::Square: return WaveFamily::Sawtooth;
        case WaveFamily::Sawtooth: return WaveFamily::Sine;
    }
    return WaveFamily::Sine;
}

struct CleanModel {
    const GeneratorConfig& cfg;
    double base_freq;  // cycles per sample

    explicit CleanModel(const GeneratorConfig& c)
        : cfg(c),
          base_freq(c.season.omega /
                    static_cast<double>(c.season.period ? c.season.period : c.length)) {}

    double trend_at(size_t i, size_t dim) const {
        double acc = 0.0;
        const auto& segs = cfg.trend.segments;
        for (size_t k = 0; k < segs.size(); ++k) {
            if (i <= segs[k].start) break;
            const size_t seg_end = (k + 1 < segs.size()) ? segs[k + 1].start : cfg.length;
            const size_t covered = std::min(i, seg_end) - segs[k].start;
            acc += segs[k].slope[dim] * static_cast<double>(covered);
        }
        return acc;
    }

    // Structural value at timestamp i for output dimension `dim`, with the
    // waveform family, frequency, and mixing row optionally overridden.
    double value(size_t i, size_t dim, WaveFamily family, double freq,
                 const double* mixing_row) const {
        const size_t d = cfg.dims;
        double mixed = 0.0;
        for (size_t c = 0; c < d; ++c) {
            const double w = mixing_row ? mixing_row[c] : cfg.shapelet.mixing.at(dim, c);
            if (w == 0.0) continue;
            const double theta = kTwoPi * freq * static_cast<double>(i) + cfg.shapelet.phase[c];
            mixed += w * cfg.shapelet.amplitude[c] * wave_value(family, theta);
        }
        return mixed + cfg.shapelet.offset[dim] + trend_at(i, dim);
    }

    double value(size_t i, size_t dim) const {
        return value(i, dim, cfg.shapelet.family, base_freq, nullptr);
    }
};

struct DimStats {
    std::vector<double> mean, stddev;
};

DimStats series_stats(const TimeSeries& s) {
    DimStats st;
    const size_t l = s.length(), d = s.dims();
    st.mean.assign(d, 0.0);
    st.stddev.assign(d, 0.0);
    for (size_t c = 0; c < d; ++c) {
        double sum = 0.0;
        for (size_t r = 0; r < l; ++r) sum += s.values.at(r, c);
        st.mean[c] = sum / static_cast<double>(l);
        double sq = 0.0;
        for (size_t r = 0; r < l; ++r) {
            const double dv = s.values.at(r, c) - st.mean[c];
            sq += dv * dv;
        }
        st.stddev[c] = std::sqrt(sq / static_cast<double>(l));
        if (st.stddev[c] <= 0.0) st.stddev[c] = 1.0;
    }
    return st;
}

}  // namespace

std::string wave_family_name(WaveFamily f) {
    switch (f) {
        case WaveFamily::Sine: return "sine";
        case WaveFamily::Square: return "square";
        case WaveFamily::Sawtooth: return "sawtooth";
    }
    return "sine";
}

WaveFamily wave_family_from_name(const std::string& name) {
    if (name == "sine") return WaveFamily::Sine;
    if (name == "square") return WaveFamily::Square;
    if (name == "sawtooth") return WaveFamily::Sawtooth;
    throw std::invalid_argument("unknown wave family '" + name + "'");
}

std::string anomaly_kind_name(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::Shape: return "shape";
        case AnomalyKind::Correlation: return "correlation";
        case AnomalyKind::Seasonal: return "seasonal";
        case AnomalyKind::Trend: return "trend";
        case AnomalyKind::Global: return "global";
        case AnomalyKind::Contextual: return "contextual";
    }
    return "global";
}

AnomalyKind anomaly_kind_from_name(const std::string& name) {
    if (name == "shape") return AnomalyKind::Shape;
    if (name == "correlation") return AnomalyKind::Correlation;
    if (name == "seasonal") return AnomalyKind::Seasonal;
    if (name == "trend") return AnomalyKind::Trend;
    if (name == "global") return AnomalyKind::Global;
    if (name == "contextual") return AnomalyKind::Contextual;
    throw std::invalid_argument("unknown anomaly kind '" + name + "'");
}

void GeneratorConfig::validate() const {
    if (length < 1 || dims < 1)
        throw std::invalid_argument("GeneratorConfig: length and dims must be >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("GeneratorConfig: noise_std must be >= 0");
    if (season.omega <= 0.0) throw std::invalid_argument("GeneratorConfig: omega must be > 0");
    if (shapelet.amplitude.size() != dims || shapelet.phase.size() != dims ||
        shapelet.offset.size() != dims)
        throw std::invalid_argument("GeneratorConfig: shapelet vectors must have one entry per dim");
    for (double a : shapelet.amplitude)
        if (a <= 0.0) throw std::invalid_argument("GeneratorConfig: amplitudes must be > 0");
    if (shapelet.mixing.rows != dims || shapelet.mixing.cols != dims)
        throw std::invalid_argument("GeneratorConfig: mixing must be dims x dims");
    for (size_t r = 0; r < dims; ++r) {
        bool nonzero = false;
        for (size_t c = 0; c < dims; ++c)
            if (shapelet.mixing.at(r, c) != 0.0) nonzero = true;
        if (!nonzero) throw std::invalid_argument("GeneratorConfig: mixing row " +
                                                  std::to_string(r) + " is all zero");
    }
    size_t prev_start = 0;
    bool first = true;
    for (const auto& seg : trend.segments) {
        if (seg.slope.size() != dims)
            throw std::invalid_argument("GeneratorConfig: trend slope must have one entry per dim");
        if (!first && seg.start <= prev_start)
            throw std::invalid_argument("GeneratorConfig: trend segment starts must strictly increase");
        prev_start = seg.start;
        first = false;
    }
}

GeneratorConfig default_generator_config(size_t length, size_t dims) {
    GeneratorConfig cfg;
    cfg.length = length;
    cfg.dims = dims;
    cfg.shapelet.amplitude.assign(dims, 1.0);
    cfg.shapelet.phase.assign(dims, 0.0);
    cfg.shapelet.offset.assign(dims, 0.0);
    cfg.shapelet.mixing = Matrix(dims, dims);
    for (size_t i = 0; i < dims; ++i) cfg.shapelet.mixing.at(i, i) = 1.0;
    return cfg;
}

TimeSeries generate(const GeneratorConfig& cfg) {
    cfg.validate();
    const CleanModel model(cfg);
    Rng rng(cfg.seed);

    TimeSeries out;
    out.name = "synthetic";
    out.values = Matrix(cfg.length, cfg.dims);
    out.labels = std::vector<int>(cfg.length, 0);
    for (size_t i = 0; i < cfg.length; ++i)
        for (size_t c = 0; c < cfg.dims; ++c) {
            double v = model.value(i, c);
            if (cfg.noise_std > 0.0) v += cfg.noise_std * rng.normal();
            out.values.at(i, c) = v;
        }
    return out;
}

TimeSeries inject_ground_truth(const TimeSeries& series, const std::vector<GtAnomalySpec>& specs,
                               const GeneratorConfig& cfg, uint64_t seed) {
    series.validate();
    cfg.validate();
    if (series.dims() != cfg.dims)
        throw std::invalid_argument("inject_ground_truth: series/config dimension mismatch");
    const size_t l = series.length(), d = series.dims();

    // bounds / overlap validation
    std::vector<size_t> order(specs.size());
    for (size_t i = 0; i < specs.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return specs[a].start < specs[b].start; });
    size_t prev_end = 0;
    for (size_t idx = 0; idx < order.size(); ++idx) {
        const auto& sp = specs[order[idx]];
        if (sp.length < 1) throw std::invalid_argument("inject_ground_truth: spec length must be >= 1");
        if (sp.start + sp.length > l)
            throw std::invalid_argument("inject_ground_truth: spec " + std::to_string(order[idx]) +
                                        " exceeds series bounds");
        if (sp.magnitude <= 0.0)
            throw std::invalid_argument("inject_ground_truth: magnitude must be > 0");
        if ((sp.kind == AnomalyKind::Global || sp.kind == AnomalyKind::Contextual) &&
            sp.magnitude < 3.0)
            throw std::invalid_argument("inject_ground_truth: point anomalies need magnitude >= 3");
        if (idx > 0 && sp.start < prev_end)
            throw std::invalid_argument("inject_ground_truth: spec " + std::to_string(order[idx]) +
                                        " overlaps a previous spec");
        prev_end = sp.start + sp.length;
    }

    const CleanModel model(cfg);
    const DimStats stats = series_stats(series);
    Rng rng(seed);

    TimeSeries out = series;
    if (!out.labels) out.labels = std::vector<int>(l, 0);

    for (const auto& sp : specs) {
        const size_t s = sp.start, e = sp.start + sp.length;
        switch (sp.kind) {
            case AnomalyKind::Shape: {
                const WaveFamily fam = next_family(cfg.shapelet.family);
                for (size_t i = s; i < e; ++i)
                    for (size_t c = 0; c < d; ++c) {
                        const double residual = series.values.at(i, c) - model.value(i, c);
                        out.values.at(i, c) =
                            model.value(i, c, fam, model.base_freq, nullptr) + residual;
                    }
                break;
            }
            case AnomalyKind::Seasonal: {
                const double freq = model.base_freq * sp.magnitude;
                for (size_t i = s; i < e; ++i)
                    for (size_t c = 0; c < d; ++c) {
                        const double residual = series.values.at(i, c) - model.value(i, c);
                        out.values.at(i, c) =
                            model.value(i, c, cfg.shapelet.family, freq, nullptr) + residual;
                    }
                break;
            }
            case AnomalyKind::Correlation: {
                const size_t row = d > 1 ? 1 : 0;
                std::vector<double> perturbed(d);
                for (size_t c = 0; c < d; ++c)
                    perturbed[c] = -sp.magnitude * cfg.shapelet.mixing.at(row, c);
                for (size_t i = s; i < e; ++i) {
                    const double residual = series.values.at(i, row) - model.value(i, row);
                    out.values.at(i, row) =
                        model.value(i, row, cfg.shapelet.family, model.base_freq,
                                    perturbed.data()) +
                        residual;
                }
                break;
            }
            case AnomalyKind::Trend: {
                for (size_t i = s; i < e; ++i) {
                    const double ramp = static_cast<double>(i - s + 1) /
                                        static_cast<double>(sp.length);
                    for (size_t c = 0; c < d; ++c)
                        out.values.at(i, c) += sp.magnitude * stats.stddev[c] * ramp;
                }
                break;
            }
            case AnomalyKind::Global: {
                for (size_t i = s; i < e; ++i) {
                    const double sign = rng.pick_sign();
                    for (size_t c = 0; c < d; ++c)
                        out.values.at(i, c) = stats.mean[c] + sign * sp.magnitude * stats.stddev[c];
                }
                break;
            }
            case AnomalyKind::Contextual: {
                constexpr size_t kContext = 32;
                for (size_t i = s; i < e; ++i) {
                    const double tie_sign = rng.pick_sign();
                    for (size_t c = 0; c < d; ++c) {
                        const size_t lo = i > kContext ? i - kContext : 0;
                        const size_t hi = std::min(l, i + kContext + 1);
                        double mu = 0.0;
                        for (size_t r = lo; r < hi; ++r) mu += series.values.at(r, c);
                        mu /= static_cast<double>(hi - lo);
                        double var = 0.0;
                        for (size_t r = lo; r < hi; ++r) {
                            const double dv = series.values.at(r, c) - mu;
                            var += dv * dv;
                        }
                        double sd = std::sqrt(var / static_cast<double>(hi - lo));
                        if (sd <= 0.0) sd = 1e-3 * stats.stddev[c];
                        // offset away from the current value for the sharpest
                        // local break; the rng only settles exact ties
                        const double here = series.values.at(i, c) - mu;
                        const double sign = here > 0.0 ? -1.0 : (here < 0.0 ? 1.0 : tie_sign);
                        double v = mu + sign * sp.magnitude * sd;
                        // stay inside the global 3-sigma band
                        const double cap = 2.99 * stats.stddev[c];
                        if (v - stats.mean[c] > cap) v = stats.mean[c] + cap;
                        if (v - stats.mean[c] < -cap) v = stats.mean[c] - cap;
                        out.values.at(i, c) = v;
                    }
                }
                break;
            }
        }
        for (size_t i = s; i < e; ++i) (*out.labels)[i] = 1;
    }
    return out;
}

}  // namespace capmix
