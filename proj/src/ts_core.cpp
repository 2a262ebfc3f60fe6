#include "capmix/ts_core.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "capmix/log.hpp"

namespace capmix {

void TimeSeries::validate() const {
    if (values.rows < 1 || values.cols < 1)
        throw std::invalid_argument("TimeSeries: need at least 1 timestamp and 1 dimension");
    if (values.data.size() != values.rows * values.cols)
        throw std::invalid_argument("TimeSeries: value buffer does not match shape");
    for (double v : values.data)
        if (!std::isfinite(v)) throw std::invalid_argument("TimeSeries: non-finite value");
    if (labels) {
        if (labels->size() != values.rows)
            throw std::invalid_argument("TimeSeries: label length does not match series length");
        for (int y : *labels)
            if (y != 0 && y != 1) throw std::invalid_argument("TimeSeries: labels must be 0 or 1");
    }
}

void WindowConfig::validate(size_t series_length) const {
    if (stride < 1 || stride > length)
        throw std::invalid_argument("WindowConfig: require 1 <= stride <= length");
    if (length > series_length)
        throw std::invalid_argument("WindowConfig: window length exceeds series length");
}

std::pair<TimeSeries, StandardizationStats>
standardize(const TimeSeries& series, const std::optional<StandardizationStats>& stats) {
    series.validate();
    const size_t l = series.length(), d = series.dims();

    StandardizationStats s;
    if (stats) {
        if (stats->mean.size() != d || stats->stddev.size() != d)
            throw std::invalid_argument("standardize: stats dimensionality mismatch");
        s = *stats;
    } else {
        s.mean.assign(d, 0.0);
        s.stddev.assign(d, 0.0);
        for (size_t c = 0; c < d; ++c) {
            double sum = 0.0;
            for (size_t r = 0; r < l; ++r) sum += series.values.at(r, c);
            s.mean[c] = sum / static_cast<double>(l);
            double sq = 0.0;
            for (size_t r = 0; r < l; ++r) {
                const double dv = series.values.at(r, c) - s.mean[c];
                sq += dv * dv;
            }
            s.stddev[c] = std::sqrt(sq / static_cast<double>(l));  // population std
            if (s.stddev[c] <= 0.0) {
                log_warn("standardize: dimension " + std::to_string(c) +
                         " has zero variance, using std 1");
                s.stddev[c] = 1.0;
            }
        }
    }

    TimeSeries out = series;
    for (size_t c = 0; c < d; ++c) {
        if (s.stddev[c] <= 0.0)
            throw std::invalid_argument("standardize: non-positive stddev in supplied stats");
        const double inv = 1.0 / s.stddev[c];
        for (size_t r = 0; r < l; ++r)
            out.values.at(r, c) = (series.values.at(r, c) - s.mean[c]) * inv;
    }
    return {std::move(out), std::move(s)};
}

TimeSeries destandardize(const TimeSeries& series, const StandardizationStats& stats) {
    series.validate();
    const size_t d = series.dims();
    if (stats.mean.size() != d || stats.stddev.size() != d)
        throw std::invalid_argument("destandardize: stats dimensionality mismatch");
    TimeSeries out = series;
    for (size_t c = 0; c < d; ++c)
        for (size_t r = 0; r < series.length(); ++r)
            out.values.at(r, c) = series.values.at(r, c) * stats.stddev[c] + stats.mean[c];
    return out;
}

std::vector<Window> slide_windows(const TimeSeries& series, const WindowConfig& cfg) {
    series.validate();
    cfg.validate(series.length());
    const size_t l = series.length(), d = series.dims(), t = cfg.length;
    const size_t n = (l - t) / cfg.stride + 1;

    std::vector<Window> windows;
    windows.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Window w;
        w.start = i * cfg.stride;
        w.data = Matrix(t, d);
        for (size_t r = 0; r < t; ++r)
            for (size_t c = 0; c < d; ++c) w.data.at(r, c) = series.values.at(w.start + r, c);
        w.label = 0.0;
        if (series.labels) {
            for (size_t r = 0; r < t; ++r)
                if ((*series.labels)[w.start + r] == 1) {
                    w.label = 1.0;  // any anomalous point marks the window
                    break;
                }
        }
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<Segment> anomaly_segments(const std::vector<int>& labels) {
    std::vector<Segment> segments;
    size_t i = 0;
    while (i < labels.size()) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("anomaly_segments: labels must be 0 or 1");
        if (labels[i] == 1) {
            size_t j = i;
            while (j < labels.size() && labels[j] == 1) ++j;
            segments.push_back({i, j});
            i = j;
        } else {
            ++i;
        }
    }
    return segments;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_value(const std::string& s, size_t row) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("csv: unparsable value '" + s + "' at row " +
                                    std::to_string(row));
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size())
        throw std::invalid_argument("csv: trailing junk in value '" + s + "' at row " +
                                    std::to_string(row));
    if (!std::isfinite(v))
        throw std::invalid_argument("csv: non-finite value at row " + std::to_string(row));
    return v;
}

}  // namespace

TimeSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("csv: empty file " + path);
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "time")
        throw std::invalid_argument("csv: header must start with 'time'");

    bool has_label = !header.empty() && header.back() == "label";
    const size_t d = header.size() - 1 - (has_label ? 1 : 0);
    if (d < 1) throw std::invalid_argument("csv: no data columns");
    for (size_t c = 0; c < d; ++c)
        if (header[1 + c] != "dim_" + std::to_string(c))
            throw std::invalid_argument("csv: expected column dim_" + std::to_string(c) +
                                        ", found '" + header[1 + c] + "'");

    std::vector<double> values;
    std::vector<int> labels;
    size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("csv: row " + std::to_string(rows) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(header.size()));
        for (size_t c = 0; c < d; ++c) values.push_back(parse_value(fields[1 + c], rows));
        if (has_label) {
            const double y = parse_value(fields.back(), rows);
            if (y != 0.0 && y != 1.0)
                throw std::invalid_argument("csv: label must be 0 or 1 at row " +
                                            std::to_string(rows));
            labels.push_back(static_cast<int>(y));
        }
        ++rows;
    }
    if (rows == 0) throw std::invalid_argument("csv: no data rows in " + path);

    TimeSeries series;
    series.name = path;
    series.values.rows = rows;
    series.values.cols = d;
    series.values.data = std::move(values);
    if (has_label) series.labels = std::move(labels);
    series.validate();
    return series;
}

void write_series_csv(const TimeSeries& series, const std::string& path) {
    series.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot write " + path);

    out << "time";
    for (size_t c = 0; c < series.dims(); ++c) out << ",dim_" << c;
    if (series.labels) out << ",label";
    out << "\n";
    for (size_t r = 0; r < series.length(); ++r) {
        out << r;
        for (size_t c = 0; c < series.dims(); ++c) out << ',' << format_double(series.values.at(r, c));
        if (series.labels) out << ',' << (*series.labels)[r];
        out << "\n";
    }
    if (!out) throw std::runtime_error("csv: write failed for " + path);
}

}  // namespace capmix
