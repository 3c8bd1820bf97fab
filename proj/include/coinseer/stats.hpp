#pragma once

// Correlation and dispersion statistics used to vet signals against price,
// plus the autocorrelation function used for ARIMA lag screening.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"
#include "signals.hpp"

namespace coinseer::stats {

namespace detail {

inline void require_same_length(std::span<const double> x, std::span<const double> y, const char* op) {
    if (x.size() != y.size())
        throw UsageError(std::string(op) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
}

inline double mean(std::span<const double> x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 500;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw Error("incomplete beta continued fraction did not converge");
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0 && b > 0)) throw UsageError("incomplete_beta: a and b must be positive");
    if (!(x >= 0 && x <= 1)) throw UsageError("incomplete_beta: x outside [0, 1]");
    if (x == 0 || x == 1) return x;
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of Student's t statistic with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

struct PearsonResult {
    double r = 0;
    double p = 1;
};

inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x, y, "pearson");
    if (x.size() < 3) throw UsageError("pearson: need at least 3 samples");
    if (detail::is_constant(x) || detail::is_constant(y)) throw UsageError("pearson: constant input");
    double mx = detail::mean(x), my = detail::mean(y);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    double df = static_cast<double>(x.size() - 2);
    if (std::fabs(r) == 1.0) return {r, 0.0};
    double t = r * std::sqrt(df / ((1.0 - r) * (1.0 + r)));
    return {r, student_t_two_sided_p(t, df)};
}

/// Distance correlation with the biased (V-statistic) double-centred
/// distance matrices. Returns 0 when either distance variance is zero.
inline double distance_correlation(std::span<const double> x, std::span<const double> y) {
    detail::require_same_length(x, y, "distance_correlation");
    const std::size_t n = x.size();
    if (n < 2) throw UsageError("distance_correlation: need at least 2 samples");

    // a is symmetric, so its row and column means coincide.
    auto row_means = [n](std::span<const double> v, double& grand) {
        std::vector<double> m(n, 0.0);
        grand = 0;
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0;
            for (std::size_t l = 0; l < n; ++l) s += std::fabs(v[k] - v[l]);
            m[k] = s / static_cast<double>(n);
            grand += s;
        }
        grand /= static_cast<double>(n) * static_cast<double>(n);
        return m;
    };
    double ga = 0, gb = 0;
    auto ma = row_means(x, ga);
    auto mb = row_means(y, gb);

    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            double A = std::fabs(x[k] - x[l]) - ma[k] - ma[l] + ga;
            double B = std::fabs(y[k] - y[l]) - mb[k] - mb[l] + gb;
            sab += A * B;
            saa += A * A;
            sbb += B * B;
        }
    }
    // dCov = sqrt(sab / n^2), dVar = sqrt(saa / n^2); the n^2 factors cancel.
    double denom = std::sqrt(saa * sbb);
    if (!(denom > 0)) return 0.0;
    return std::min(1.0, std::sqrt(std::max(0.0, sab) / denom));
}

struct Dispersion {
    double sigma = 0;
    double iqr = 0;
};

inline Dispersion dispersion(std::span<const double> x) {
    if (x.size() < 2) throw UsageError("dispersion: need at least 2 samples");
    double m = detail::mean(x), ss = 0;
    for (double v : x) ss += (v - m) * (v - m);
    auto q = quartiles(std::vector<double>(x.begin(), x.end()));
    return {std::sqrt(ss / static_cast<double>(x.size() - 1)), q.q3 - q.q1};
}

/// acf[l] for l = 0..max_lag, normalized by the lag-0 sum of squares.
inline std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
    if (max_lag >= x.size()) throw UsageError("autocorrelation: max_lag must be below the series length");
    if (detail::is_constant(x)) throw UsageError("autocorrelation: constant series");
    double m = detail::mean(x), denom = 0;
    for (double v : x) denom += (v - m) * (v - m);
    std::vector<double> acf(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        double s = 0;
        for (std::size_t t = 0; t + lag < x.size(); ++t) s += (x[t] - m) * (x[t + lag] - m);
        acf[lag] = s / denom;
    }
    return acf;
}

struct CorrelationReport {
    std::string signal;
    std::optional<PearsonResult> pearson; // empty when either series is constant
    double distance_corr = 0;
    double sigma = 0;
    double iqr = 0;
    std::size_t n = 0;
};

inline CorrelationReport correlate_column(std::string name, std::span<const double> x, std::span<const double> price) {
    CorrelationReport rep;
    rep.signal = std::move(name);
    rep.n = x.size();
    if (!detail::is_constant(x) && !detail::is_constant(price)) rep.pearson = pearson(x, price);
    rep.distance_corr = distance_correlation(x, price);
    auto d = dispersion(x);
    rep.sigma = d.sigma;
    rep.iqr = d.iqr;
    return rep;
}

/// One report per signal column against the price high, preceded by a row
/// for the price itself.
inline std::vector<CorrelationReport> correlation_table(const SignalMatrix& signals, const PriceSeries& price) {
    if (price.empty() || signals.calendar() != price.range() || price.size() != signals.rows())
        throw DataError("correlation_table: signal calendar does not match price calendar");
    std::vector<CorrelationReport> out;
    out.push_back(correlate_column("price_high", price.high, price.high));
    for (std::size_t c = 0; c < signals.cols(); ++c)
        out.push_back(correlate_column(signals.columns()[c], signals.column(c), price.high));
    return out;
}

inline constexpr std::string_view kUndefinedMarker = "---";

inline void write_correlation_csv(std::ostream& out, std::span<const CorrelationReport> rows) {
    out << "signal,pearson_r,pearson_p,distance_corr,sigma,iqr\n";
    for (const auto& r : rows) {
        out << r.signal << ',';
        if (r.pearson)
            out << format_double(r.pearson->r) << ',' << format_double(r.pearson->p);
        else
            out << kUndefinedMarker << ',' << kUndefinedMarker;
        out << ',' << format_double(r.distance_corr) << ',' << format_double(r.sigma) << ','
            << format_double(r.iqr) << '\n';
    }
}

} // namespace coinseer::stats
