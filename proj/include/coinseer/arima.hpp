#pragma once

// ARIMA(p, 1, 0) with drift: difference once, fit an autoregression with an
// intercept by conditional least squares, forecast by iterating the
// difference recursion.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "metrics.hpp"
#include "stats.hpp"

namespace coinseer::arima {

struct ArimaModel {
    std::size_t p = 0;
    std::size_t d = 1;
    double intercept = 0;
    std::vector<double> ar_coeffs;
    std::size_t fit_n = 0;
    bool fell_back = false; // singular normal equations; refit with p = 0
};

namespace detail {

/// Solves A x = b in place by Gaussian elimination with partial pivoting.
/// Returns false when A is numerically singular.
inline bool solve_linear(std::vector<double>& A, std::vector<double>& b, std::size_t n) {
    double scale = 0;
    for (double v : A) scale = std::max(scale, std::fabs(v));
    const double tol = std::max(scale, 1.0) * 1e-12 * static_cast<double>(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(A[r * n + col]) > std::fabs(A[piv * n + col])) piv = r;
        if (std::fabs(A[piv * n + col]) <= tol) return false;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = A[r * n + col] / A[col * n + col];
            if (f == 0) continue;
            for (std::size_t c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= A[i * n + c] * b[c];
        b[i] = s / A[i * n + i];
    }
    return true;
}

inline std::vector<double> differences(std::span<const double> y) {
    std::vector<double> dy;
    dy.reserve(y.size());
    for (std::size_t t = 1; t < y.size(); ++t) dy.push_back(y[t] - y[t - 1]);
    return dy;
}

} // namespace detail

inline ArimaModel fit(std::span<const double> y, std::size_t p) {
    if (y.size() < p + 3)
        throw DataError("arima fit: series too short (" + std::to_string(y.size()) + " < p + 3)");
    const auto dy = detail::differences(y);
    ArimaModel m;
    m.p = p;
    m.fit_n = y.size();

    auto fit_drift_only = [&] {
        double s = 0;
        for (double v : dy) s += v;
        m.p = 0;
        m.ar_coeffs.clear();
        m.intercept = s / static_cast<double>(dy.size());
    };
    if (p == 0) {
        fit_drift_only();
        return m;
    }

    // Regressors [1, dy[t-1], ..., dy[t-p]] for t = p .. |dy|-1.
    const std::size_t dim = p + 1;
    std::vector<double> xtx(dim * dim, 0.0), xty(dim, 0.0), row(dim);
    for (std::size_t t = p; t < dy.size(); ++t) {
        row[0] = 1.0;
        for (std::size_t lag = 1; lag <= p; ++lag) row[lag] = dy[t - lag];
        for (std::size_t a = 0; a < dim; ++a) {
            xty[a] += row[a] * dy[t];
            for (std::size_t b = 0; b < dim; ++b) xtx[a * dim + b] += row[a] * row[b];
        }
    }
    if (!detail::solve_linear(xtx, xty, dim)) {
        fit_drift_only();
        m.fell_back = true;
        return m;
    }
    m.intercept = xty[0];
    m.ar_coeffs.assign(xty.begin() + 1, xty.end());
    return m;
}

/// Forecast of the value `j` steps after the last element of `history`.
inline double forecast(const ArimaModel& m, std::span<const double> history, std::size_t j) {
    if (j < 1) throw UsageError("arima forecast: j must be at least 1");
    if (history.size() < m.p + 1) throw DataError("arima forecast: insufficient history");
    if (m.p == 0) return history.back() + static_cast<double>(j) * m.intercept;
    // Most recent differences, newest last; predictions are appended.
    std::vector<double> recent;
    recent.reserve(m.p + j);
    for (std::size_t t = history.size() - m.p; t < history.size(); ++t) recent.push_back(history[t] - history[t - 1]);
    double level = history.back();
    for (std::size_t step = 0; step < j; ++step) {
        double delta = m.intercept;
        for (std::size_t lag = 1; lag <= m.p; ++lag) delta += m.ar_coeffs[lag - 1] * recent[recent.size() - lag];
        recent.push_back(delta);
        level += delta;
    }
    return level;
}

/// Largest lag up to `cap` whose autocorrelation of the differenced series
/// lies outside the +/-1.96/sqrt(n) band; 0 when none does.
inline std::size_t screen_max_lag(std::span<const double> y, std::size_t cap) {
    auto dy = detail::differences(y);
    if (dy.size() < 3) return 0;
    cap = std::min(cap, dy.size() - 1);
    std::vector<double> acf;
    try {
        acf = stats::autocorrelation(dy, cap);
    } catch (const UsageError&) {
        return 0; // constant differences
    }
    const double band = kCiZ / std::sqrt(static_cast<double>(dy.size()));
    std::size_t best = 0;
    for (std::size_t lag = 1; lag <= cap; ++lag)
        if (std::fabs(acf[lag]) > band) best = lag;
    return best;
}

/// Fits p = 0..max_p on the leading 80% of `y` and keeps the order with the
/// lowest one-step RMSPE on the trailing 20%; ties go to the smaller order.
inline std::size_t select_lag(std::span<const double> y, std::size_t max_p) {
    if (max_p == 0) return 0;
    const auto n_eval = static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(y.size()) - 1e-9));
    if (n_eval == 0 || n_eval >= y.size()) throw DataError("select_lag: series too short");
    const std::size_t cut = y.size() - n_eval;
    std::size_t best_p = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p <= max_p; ++p) {
        auto model = fit(y.first(cut), p);
        std::vector<double> pred, truth;
        for (std::size_t t = cut; t < y.size(); ++t) {
            pred.push_back(forecast(model, y.first(t), 1));
            truth.push_back(y[t]);
        }
        double score = evaluate(pred, truth).rmspe;
        if (score < best) {
            best = score;
            best_p = p;
        }
    }
    return best_p;
}

} // namespace coinseer::arima
