#pragma once
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace capmix {

// Row-major matrix; rows index timestamps, columns index dimensions.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

// A multivariate series of length() timestamps with dims() dimensions and
// optional per-point binary labels.
struct TimeSeries {
    Matrix values;  // length x dims
    std::optional<std::vector<int>> labels;
    std::string name;

    size_t length() const { return values.rows; }
    size_t dims() const { return values.cols; }

    // Throws std::invalid_argument on shape/label/finite violations.
    void validate() const;
};

struct WindowConfig {
    size_t length = 32;  // t
    size_t stride = 16;  // delta, 1 <= stride <= length

    void validate(size_t series_length) const;
};

// One sliding-window sample. label is 1 when any covered point is anomalous;
// revision may later assign soft values in (0, 1].
struct Window {
    Matrix data;  // length x dims
    size_t start = 0;
    double label = 0.0;
};

// Per-dimension standardization parameters. Zero-variance dimensions are
// recorded with stddev 1 (see standardize()).
struct StandardizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

// Per-dimension z-scoring with population standard deviation. When stats is
// absent they are computed from the series; pass training stats at test time.
std::pair<TimeSeries, StandardizationStats>
standardize(const TimeSeries& series, const std::optional<StandardizationStats>& stats = std::nullopt);

// Inverse of standardize() under the same stats.
TimeSeries destandardize(const TimeSeries& series, const StandardizationStats& stats);

// Segments the series into floor((l - t) / stride) + 1 windows starting at
// multiples of the stride; a trailing remainder shorter than t is dropped.
std::vector<Window> slide_windows(const TimeSeries& series, const WindowConfig& cfg);

// Half-open index range [start, end).
struct Segment {
    size_t start = 0;
    size_t end = 0;

    bool operator==(const Segment&) const = default;
};

// Maximal runs of 1s in a 0/1 vector, in order.
std::vector<Segment> anomaly_segments(const std::vector<int>& labels);

// CSV interchange: header `time,dim_0,...,dim_{d-1}[,label]`, one row per
// timestamp, UTF-8, `.` decimal point. The time column is ignored beyond
// establishing row order.
TimeSeries read_series_csv(const std::string& path);
void write_series_csv(const TimeSeries& series, const std::string& path);

// Round-trip-exact formatting used by every CSV writer.
std::string format_double(double v);

}  // namespace capmix
