#pragma once

// Independent reference implementations used only by tests. Each one
// evaluates the textbook definition directly, without sharing code with
// the library.

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <Eigen/Dense>

#include <coinseer/lstm.hpp>

namespace oracle {

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    long double cov = sxy - sx * sy / n, vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
    return static_cast<double>(cov / std::sqrt(vx * vy));
}

/// Two-sided p-value of r with n samples from Boost's Student t CDF.
inline double pearson_p(double r, std::size_t n) {
    const double df = static_cast<double>(n) - 2.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

/// Full n x n distance matrices, explicit row, column and grand means,
/// dCov = sqrt(mean(A*B)) and dCor = dCov / sqrt(dVar(x) dVar(y)).
inline double dcor(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    auto centred = [n](const std::vector<double>& v) {
        std::vector<std::vector<double>> a(n, std::vector<double>(n));
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) a[k][l] = std::fabs(v[k] - v[l]);
        std::vector<double> row(n, 0), col(n, 0);
        double grand = 0;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) {
                row[k] += a[k][l] / n;
                col[l] += a[k][l] / n;
                grand += a[k][l] / (n * n);
            }
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) a[k][l] = a[k][l] - row[k] - col[l] + grand;
        return a;
    };
    auto A = centred(x), B = centred(y);
    auto dcov = [n](const auto& P, const auto& Q) {
        double s = 0;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = 0; l < n; ++l) s += P[k][l] * Q[k][l];
        return std::sqrt(std::max(0.0, s / (n * n)));
    };
    double vx = dcov(A, A), vy = dcov(B, B);
    if (vx * vy == 0) return 0.0;
    return dcov(A, B) / std::sqrt(vx * vy);
}

/// Least squares of dy[t] on [1, dy[t-1..t-p]] via Householder QR.
inline std::vector<double> ar_ols(const std::vector<double>& y, std::size_t p) {
    std::vector<double> dy;
    for (std::size_t t = 1; t < y.size(); ++t) dy.push_back(y[t] - y[t - 1]);
    const auto rows = static_cast<Eigen::Index>(dy.size() - p);
    Eigen::MatrixXd X(rows, static_cast<Eigen::Index>(p + 1));
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = static_cast<std::size_t>(r) + p;
        X(r, 0) = 1.0;
        for (std::size_t lag = 1; lag <= p; ++lag) X(r, static_cast<Eigen::Index>(lag)) = dy[t - lag];
        target(r) = dy[t];
    }
    Eigen::VectorXd beta = X.householderQr().solve(target);
    return {beta.data(), beta.data() + beta.size()};
}

/// Scalar LSTM recurrence, one unit and one gate at a time, read straight off
/// the network's parameter accessors. Window is steps x F, oldest row first.
inline double lstm_forward(const coinseer::lstm::Network& net, const std::vector<double>& window) {
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    const std::size_t F = net.input_dim(), steps = window.size() / F;
    std::vector<std::vector<double>> seq(steps);
    for (std::size_t t = 0; t < steps; ++t) seq[t].assign(window.begin() + t * F, window.begin() + (t + 1) * F);
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const std::size_t H = net.layer(l).units;
        auto W = net.W(l);
        auto U = net.U(l);
        auto b = net.b(l);
        std::vector<double> h(H, 0.0), c(H, 0.0);
        std::vector<std::vector<double>> out;
        for (std::size_t t = 0; t < steps; ++t) {
            std::vector<double> nh(H), nc(H);
            for (std::size_t u = 0; u < H; ++u) {
                double z[4];
                for (std::size_t g = 0; g < 4; ++g) {
                    const auto r = static_cast<Eigen::Index>(g * H + u);
                    z[g] = b(r);
                    for (std::size_t i = 0; i < seq[t].size(); ++i) z[g] += W(r, static_cast<Eigen::Index>(i)) * seq[t][i];
                    for (std::size_t i = 0; i < H; ++i) z[g] += U(r, static_cast<Eigen::Index>(i)) * h[i];
                }
                nc[u] = sig(z[1]) * c[u] + sig(z[0]) * std::tanh(z[2]);
                nh[u] = sig(z[3]) * std::tanh(nc[u]);
            }
            h = nh;
            c = nc;
            out.push_back(h);
        }
        seq = std::move(out);
    }
    double y = net.b_out();
    auto w = net.w_out();
    for (std::size_t u = 0; u < net.top_units(); ++u) y += w(static_cast<Eigen::Index>(u)) * seq.back()[u];
    return y;
}

} // namespace oracle
