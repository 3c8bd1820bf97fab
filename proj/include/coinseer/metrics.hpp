#pragma once

// Percentage-error metrics over USD predictions. All percentage values are
// scaled by 100 (an RMSPE of 6.70 means 6.70%).

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"

namespace coinseer {

/// z-value of the two-sided 95% normal interval used for the +/- columns.
inline constexpr double kCiZ = 1.96;

struct MetricsReport {
    std::size_t n = 0;
    double rmse = 0;               // USD
    double mape = 0;               // percent
    double mape_ci_halfwidth = 0;  // percent
    double mspe = 0;               // squared percent
    double rmspe = 0;              // percent
    double rmspe_ci_halfwidth = 0; // percent
    double maxape = 0;             // percent

    bool operator==(const MetricsReport&) const = default;
};

namespace detail {

inline double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace detail

/// MAPE's half-width is 1.96 sd(APE_i)/sqrt(n). RMSPE's half-width carries the
/// same interval for MSPE through sqrt by the delta method:
/// 1.96 sd(SPE_i) / (2 RMSPE sqrt(n)).
inline MetricsReport evaluate(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) throw UsageError("evaluate: length mismatch");
    if (truth.empty()) throw UsageError("evaluate: no samples");
    const std::size_t n = truth.size();
    std::vector<double> ape(n), spe(n);
    double se = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(truth[i] > 0)) throw DataError("evaluate: truth values must be positive");
        double err = predictions[i] - truth[i];
        double pe = 100.0 * err / truth[i];
        ape[i] = std::fabs(pe);
        spe[i] = pe * pe;
        se += err * err;
    }
    MetricsReport r;
    r.n = n;
    const double dn = static_cast<double>(n);
    double sum_ape = 0, sum_spe = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_ape += ape[i];
        sum_spe += spe[i];
    }
    r.mape = sum_ape / dn;
    r.maxape = *std::max_element(ape.begin(), ape.end());
    r.mspe = sum_spe / dn;
    r.rmspe = std::sqrt(r.mspe);
    r.rmse = std::sqrt(se / dn);
    r.mape_ci_halfwidth = kCiZ * detail::sample_sd(ape) / std::sqrt(dn);
    r.rmspe_ci_halfwidth = r.rmspe > 0 ? kCiZ * detail::sample_sd(spe) / (2.0 * r.rmspe * std::sqrt(dn)) : 0.0;
    return r;
}

/// Unweighted mean RMSPE over coins.
inline double mean_rmspe_across(const std::map<std::string, MetricsReport>& reports) {
    if (reports.empty()) throw UsageError("mean_rmspe_across: no reports");
    double s = 0;
    for (const auto& [coin, r] : reports) s += r.rmspe;
    return s / static_cast<double>(reports.size());
}

} // namespace coinseer
