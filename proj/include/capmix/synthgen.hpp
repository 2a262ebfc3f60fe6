#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "capmix/ts_core.hpp"

namespace capmix {

enum class WaveFamily { Sine, Square, Sawtooth };

std::string wave_family_name(WaveFamily f);
WaveFamily wave_family_from_name(const std::string& name);

// Base waveforms and the linear map that couples dimensions. Each dimension c
// draws a base channel amplitude[c] * wave(theta + phase[c]); the mixing rows
// then recombine the base channels, and offset shifts each output dimension.
struct ShapeletSpec {
    WaveFamily family = WaveFamily::Sine;
    std::vector<double> amplitude;  // per dim, > 0
    std::vector<double> phase;      // per dim
    Matrix mixing;                  // d x d, rows non-zero
    std::vector<double> offset;     // per dim, added after mixing
};

// omega cycles per `period` samples; period 0 means the whole series.
struct SeasonSpec {
    double omega = 1.0;
    size_t period = 0;
};

struct TrendSegment {
    size_t start = 0;
    std::vector<double> slope;  // per dim
};

// Piecewise-linear continuous trend starting at 0; each segment's slope
// applies from its start until the next segment begins.
struct TrendSpec {
    std::vector<TrendSegment> segments;
};

enum class AnomalyKind { Shape, Correlation, Seasonal, Trend, Global, Contextual };

std::string anomaly_kind_name(AnomalyKind k);
AnomalyKind anomaly_kind_from_name(const std::string& name);

struct GtAnomalySpec {
    AnomalyKind kind = AnomalyKind::Global;
    size_t start = 0;
    size_t length = 1;
    double magnitude = 4.0;
};

struct GeneratorConfig {
    size_t length = 1000;
    size_t dims = 1;
    double noise_std = 0.0;
    uint64_t seed = 0;
    ShapeletSpec shapelet;
    SeasonSpec season;
    TrendSpec trend;

    void validate() const;
};

// Convenience: sine shapelet with identity mixing, unit amplitudes, zero
// phases/offsets, and no trend segments.
GeneratorConfig default_generator_config(size_t length, size_t dims);

// values = mixing * base(2*pi*omega*T/period) + offset + trend(T) + noise,
// labels all zero. Deterministic given (cfg, cfg.seed).
TimeSeries generate(const GeneratorConfig& cfg);

// Mutates each spec's span:
//   shape       waveform family swapped (sine -> square -> sawtooth -> sine)
//   correlation the second mixing row rescaled to -magnitude * row
//   seasonal    frequency scaled by magnitude
//   trend       additive ramp reaching magnitude * sigma at span end
//   global      points set to mean +/- magnitude * sigma (magnitude >= 3)
//   contextual  points crossing 3 local sigma while clamped inside 3 global
//               sigma (magnitude >= 3); local context is 32 points per side
// Pattern kinds regenerate the span from cfg while preserving the residual
// between the input and the clean structural model, so noise carries over.
// Labels are set to 1 exactly on the injected spans.
TimeSeries inject_ground_truth(const TimeSeries& series, const std::vector<GtAnomalySpec>& specs,
                               const GeneratorConfig& cfg, uint64_t seed);

}  // namespace capmix
