#pragma once

// Min-max normalization, supervised windowing and the fixed train/test
// date protocol shared by every experiment.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "signals.hpp"

namespace coinseer {

struct MinMax {
    double min = 0;
    double max = 0;
    bool constant() const { return !(max > min); }
    bool operator==(const MinMax&) const = default;
};

struct NormParams {
    std::vector<std::string> columns;
    std::vector<MinMax> ranges;

    const MinMax& range_of(std::string_view column) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == column) return ranges[i];
        throw DataError("no normalization parameters for column '" + std::string(column) + "'");
    }
    bool operator==(const NormParams&) const = default;
};

/// Per-column min and max over rows [first_row, last_row).
inline NormParams fit_minmax(const SignalMatrix& m, std::size_t first_row, std::size_t last_row) {
    if (m.rows() == 0 || m.cols() == 0) throw UsageError("fit_minmax: empty matrix");
    if (first_row >= last_row || last_row > m.rows()) throw UsageError("fit_minmax: invalid row range");
    NormParams p;
    p.columns = m.columns();
    p.ranges.resize(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) p.ranges[c] = {m.at(first_row, c), m.at(first_row, c)};
    for (std::size_t r = first_row; r < last_row; ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            p.ranges[c].min = std::min(p.ranges[c].min, row[c]);
            p.ranges[c].max = std::max(p.ranges[c].max, row[c]);
        }
    }
    return p;
}

inline NormParams fit_minmax(const SignalMatrix& m) { return fit_minmax(m, 0, m.rows()); }

inline double scale_minmax(double v, const MinMax& r) {
    if (r.constant()) return 0.0;
    return (v - r.min) / (r.max - r.min);
}

/// Maps each cell to [0, 1]. Out-of-range cells are clamped and counted in
/// `clamped` when provided; constant columns map to 0.
inline SignalMatrix apply_minmax(const SignalMatrix& m, const NormParams& params, std::size_t* clamped = nullptr) {
    std::vector<const MinMax*> ranges;
    ranges.reserve(m.cols());
    for (const auto& c : m.columns()) ranges.push_back(&params.range_of(c));
    SignalMatrix out = m;
    std::size_t n_clamped = 0;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            double v = scale_minmax(row[c], *ranges[c]);
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                ++n_clamped;
            }
            row[c] = v;
        }
    }
    if (clamped) *clamped = n_clamped;
    return out;
}

inline double invert_minmax(double value, std::string_view column, const NormParams& params) {
    const auto& r = params.range_of(column);
    if (r.constant()) throw DataError("cannot invert normalization of constant column '" + std::string(column) + "'");
    return r.min + value * (r.max - r.min);
}

struct WindowSample {
    std::vector<double> input; // k rows of F features, oldest first
    double target = 0;
    Date anchor;
};

struct WindowedDataset {
    std::size_t k = 0;
    std::size_t j = 0;
    std::vector<std::string> feature_names;
    std::vector<WindowSample> samples;

    std::size_t features() const { return feature_names.size(); }
    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    Date target_date(std::size_t i) const { return samples[i].anchor + std::chrono::days{static_cast<long>(j)}; }
};

/// One sample per anchor day i in [k-1, n-1-j]: rows i-k+1..i of X paired
/// with Y[i+j].
inline WindowedDataset make_windows(const SignalMatrix& X, std::span<const double> Y, std::size_t k, std::size_t j) {
    if (k < 1 || j < 1) throw UsageError("make_windows: k and j must be at least 1");
    if (Y.size() != X.rows()) throw UsageError("make_windows: X and Y calendars differ");
    if (X.rows() < k + j)
        throw DataError("series too short: " + std::to_string(X.rows()) + " rows < k + j = " + std::to_string(k + j));
    WindowedDataset ds;
    ds.k = k;
    ds.j = j;
    ds.feature_names = X.columns();
    const std::size_t F = X.cols();
    ds.samples.reserve(X.rows() - k - j + 1);
    for (std::size_t i = k - 1; i + j < X.rows(); ++i) {
        WindowSample s;
        s.input.reserve(k * F);
        for (std::size_t r = i + 1 - k; r <= i; ++r) {
            auto row = X.row(r);
            s.input.insert(s.input.end(), row.begin(), row.end());
        }
        s.target = Y[i + j];
        s.anchor = X.calendar().at(i);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Samples whose anchor falls inside `anchors`, order preserved.
inline WindowedDataset select_anchors(const WindowedDataset& ds, DateRange anchors) {
    WindowedDataset out;
    out.k = ds.k;
    out.j = ds.j;
    out.feature_names = ds.feature_names;
    for (const auto& s : ds.samples)
        if (anchors.contains(s.anchor)) out.samples.push_back(s);
    return out;
}

struct SplitProtocol {
    DateRange train; // anchor dates
    DateRange test;
    std::size_t k_max = 0;
    std::size_t j_max = 0;
    bool operator==(const SplitProtocol&) const = default;
};

inline constexpr std::size_t kDefaultKMax = 14;
inline constexpr std::size_t kDefaultJMax = 3;
inline constexpr double kDefaultTrainFraction = 0.8;

/// Anchor date ranges built once from the largest window sizes so that
/// every (k, j) configuration trains and tests on the same days.
inline SplitProtocol split_protocol(DateRange calendar, std::size_t k_max = kDefaultKMax,
                                    std::size_t j_max = kDefaultJMax, double train_frac = kDefaultTrainFraction) {
    if (k_max < 1 || j_max < 1) throw UsageError("split_protocol: window sizes must be at least 1");
    if (!(train_frac > 0 && train_frac < 1)) throw UsageError("split_protocol: train fraction must be in (0, 1)");
    const std::size_t n = calendar.size();
    if (n < k_max + j_max + 5)
        throw DataError("insufficient data: " + std::to_string(n) + " days < k_max + j_max + 5");
    const std::size_t anchors = n - k_max - j_max + 1;
    const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(anchors)));
    if (n_train == 0 || n_train == anchors) throw DataError("insufficient data for a train/test split");
    const std::size_t first = k_max - 1;
    SplitProtocol p;
    p.k_max = k_max;
    p.j_max = j_max;
    p.train = {calendar.at(first), calendar.at(first + n_train - 1)};
    p.test = {calendar.at(first + n_train), calendar.at(first + anchors - 1)};
    return p;
}

/// Chronological tail of ceil(frac * n) samples becomes the validation set.
inline std::pair<WindowedDataset, WindowedDataset> validation_tail(const WindowedDataset& train, double frac = 0.2) {
    if (train.size() < 5) throw DataError("validation_tail: need at least 5 samples, got " + std::to_string(train.size()));
    if (!(frac > 0 && frac < 1)) throw UsageError("validation_tail: fraction must be in (0, 1)");
    auto n_val = static_cast<std::size_t>(std::ceil(frac * static_cast<double>(train.size()) - 1e-9));
    n_val = std::clamp<std::size_t>(n_val, 1, train.size() - 1);
    WindowedDataset fit, val;
    for (auto* d : {&fit, &val}) {
        d->k = train.k;
        d->j = train.j;
        d->feature_names = train.feature_names;
    }
    const std::size_t cut = train.size() - n_val;
    fit.samples.assign(train.samples.begin(), train.samples.begin() + static_cast<std::ptrdiff_t>(cut));
    val.samples.assign(train.samples.begin() + static_cast<std::ptrdiff_t>(cut), train.samples.end());
    return {std::move(fit), std::move(val)};
}

/// Debug dump: anchor date, flattened window, target.
inline void write_dataset_csv(std::ostream& out, const WindowedDataset& ds) {
    out << "anchor_date";
    for (std::size_t t = 0; t < ds.k; ++t)
        for (const auto& f : ds.feature_names) out << ",t" << t << '_' << f;
    out << ",target\n";
    for (const auto& s : ds.samples) {
        out << format_date(s.anchor);
        for (double v : s.input) out << ',' << format_double(v);
        out << ',' << format_double(s.target) << '\n';
    }
}

} // namespace coinseer
