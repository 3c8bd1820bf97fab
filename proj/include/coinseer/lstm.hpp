#pragma once

// Stacked LSTM regressor with a linear single-unit output, trained with
// ADAM on mean squared error. Forward and backward passes run over a batch
// of windows at once; columns of every activation matrix are samples.
//
// All parameters live in one flat buffer so the optimizer, checkpointing
// and serialization treat the network as a plain vector. Gradients use the
// same layout.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "core.hpp"
#include "dataset.hpp"

namespace coinseer::lstm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

/// Where each layer's W (4H x in), U (4H x H) and b (4H) start in the flat
/// parameter buffer. Gate blocks are ordered input, forget, candidate, output.
struct LayerLayout {
    std::size_t input = 0;
    std::size_t units = 0;
    std::size_t w_offset = 0;
    std::size_t u_offset = 0;
    std::size_t b_offset = 0;
};

class Network {
public:
    Network() = default;
    Network(std::size_t input_dim, std::vector<std::size_t> sizes) : input_dim_(input_dim), sizes_(std::move(sizes)) {
        if (input_dim_ == 0) throw UsageError("network input dimension must be at least 1");
        if (sizes_.empty()) throw UsageError("network needs at least one LSTM layer");
        std::size_t offset = 0, in = input_dim_;
        for (auto h : sizes_) {
            if (h == 0) throw UsageError("LSTM layer sizes must be positive");
            LayerLayout l{in, h, offset, 0, 0};
            l.u_offset = l.w_offset + 4 * h * in;
            l.b_offset = l.u_offset + 4 * h * h;
            offset = l.b_offset + 4 * h;
            layers_.push_back(l);
            in = h;
        }
        w_out_offset_ = offset;
        b_out_offset_ = offset + in;
        params_.assign(b_out_offset_ + 1, 0.0);
    }

    std::size_t input_dim() const { return input_dim_; }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::size_t layer_count() const { return layers_.size(); }
    const LayerLayout& layer(std::size_t l) const { return layers_[l]; }
    std::size_t parameter_count() const { return params_.size(); }
    std::size_t top_units() const { return sizes_.back(); }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    // Views over an arbitrary buffer with this network's layout (parameters
    // or gradients).
    template <typename Ptr>
    auto W(Ptr base, std::size_t l) const {
        const auto& L = layers_[l];
        return map_matrix(base + L.w_offset, 4 * L.units, L.input);
    }
    template <typename Ptr>
    auto U(Ptr base, std::size_t l) const {
        const auto& L = layers_[l];
        return map_matrix(base + L.u_offset, 4 * L.units, L.units);
    }
    template <typename Ptr>
    auto b(Ptr base, std::size_t l) const {
        const auto& L = layers_[l];
        return map_vector(base + L.b_offset, 4 * L.units);
    }
    template <typename Ptr>
    auto w_out(Ptr base) const {
        return map_vector(base + w_out_offset_, top_units());
    }
    std::size_t b_out_offset() const { return b_out_offset_; }

    auto W(std::size_t l) const { return W(params_.data(), l); }
    auto U(std::size_t l) const { return U(params_.data(), l); }
    auto b(std::size_t l) const { return b(params_.data(), l); }
    auto w_out() const { return w_out(params_.data()); }
    double b_out() const { return params_[b_out_offset_]; }

    auto W(std::size_t l) { return W(params_.data(), l); }
    auto U(std::size_t l) { return U(params_.data(), l); }
    auto b(std::size_t l) { return b(params_.data(), l); }
    auto w_out() { return w_out(params_.data()); }
    double& b_out() { return params_[b_out_offset_]; }

    bool same_shape(const Network& o) const { return input_dim_ == o.input_dim_ && sizes_ == o.sizes_; }

private:
    static MatrixMap map_matrix(double* p, std::size_t r, std::size_t c) {
        return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
    }
    static ConstMatrixMap map_matrix(const double* p, std::size_t r, std::size_t c) {
        return {p, static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
    }
    static VectorMap map_vector(double* p, std::size_t n) { return {p, static_cast<Eigen::Index>(n)}; }
    static ConstVectorMap map_vector(const double* p, std::size_t n) { return {p, static_cast<Eigen::Index>(n)}; }

    std::size_t input_dim_ = 0;
    std::vector<std::size_t> sizes_;
    std::vector<LayerLayout> layers_;
    std::size_t w_out_offset_ = 0;
    std::size_t b_out_offset_ = 0;
    std::vector<double> params_;
};

inline const std::vector<std::size_t> kPaperLayerSizes = {400, 800};

/// Glorot-uniform kernels (fan-out counts all four gates), forget-gate bias
/// 1, other biases 0. Fully determined by `seed`.
inline Network init_network(std::size_t input_dim, std::vector<std::size_t> sizes, std::uint64_t seed) {
    Network net(input_dim, std::move(sizes));
    std::mt19937_64 rng(seed);
    auto fill_uniform = [&rng](auto&& m, double fan_in, double fan_out) {
        std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / (fan_in + fan_out)),
                                                    std::sqrt(6.0 / (fan_in + fan_out)));
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    };
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto& L = net.layer(l);
        auto h = static_cast<double>(L.units);
        fill_uniform(net.W(l), static_cast<double>(L.input), 4 * h);
        fill_uniform(net.U(l), h, 4 * h);
        auto bias = net.b(l);
        bias.setZero();
        bias.segment(static_cast<Eigen::Index>(L.units), static_cast<Eigen::Index>(L.units)).setOnes();
    }
    Eigen::Map<Matrix> dense(net.w_out().data(), static_cast<Eigen::Index>(net.top_units()), 1);
    fill_uniform(dense, static_cast<double>(net.top_units()), 1.0);
    net.b_out() = 0.0;
    return net;
}

struct LayerCache {
    std::vector<Matrix> gates;  // 4H x B, activated
    std::vector<Matrix> c;      // H x B
    std::vector<Matrix> tanh_c; // H x B
    std::vector<Matrix> h;      // H x B
};

struct ForwardCache {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::size_t input_dim = 0;
    std::vector<std::size_t> sizes;
    std::vector<Matrix> x; // network input per step, F x B
    std::vector<LayerCache> layers;
    RowVector prediction;

    const Matrix& layer_input(std::size_t l, std::size_t t) const { return l == 0 ? x[t] : layers[l - 1].h[t]; }
};

namespace detail {

inline auto sigmoid(const Eigen::ArrayXXd& z) { return (1.0 + (-z).exp()).inverse(); }

} // namespace detail

/// Runs a batch of windows (each `steps` rows of input_dim features, oldest
/// first) through the network from zero initial states.
inline ForwardCache forward_batch(const Network& net, std::span<const double* const> windows, std::size_t steps) {
    if (steps == 0) throw UsageError("forward: window must have at least one step");
    if (windows.empty()) throw UsageError("forward: empty batch");
    const auto B = static_cast<Eigen::Index>(windows.size());
    const auto F = static_cast<Eigen::Index>(net.input_dim());

    ForwardCache cache;
    cache.batch = windows.size();
    cache.steps = steps;
    cache.input_dim = net.input_dim();
    cache.sizes = net.sizes();
    cache.x.assign(steps, Matrix(F, B));
    for (std::size_t t = 0; t < steps; ++t)
        for (Eigen::Index s = 0; s < B; ++s)
            cache.x[t].col(s) = ConstVectorMap(windows[static_cast<std::size_t>(s)] + t * net.input_dim(), F);

    cache.layers.resize(net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto H = static_cast<Eigen::Index>(net.layer(l).units);
        const auto W = net.W(l);
        const auto U = net.U(l);
        const auto bias = net.b(l);
        auto& lc = cache.layers[l];
        lc.gates.resize(steps);
        lc.c.resize(steps);
        lc.tanh_c.resize(steps);
        lc.h.resize(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            Matrix z = W * cache.layer_input(l, t);
            if (t > 0) z.noalias() += U * lc.h[t - 1];
            z.colwise() += bias;
            auto& g = lc.gates[t];
            g.resize(4 * H, B);
            g.topRows(H) = detail::sigmoid(z.topRows(H).array()).matrix();
            g.middleRows(H, H) = detail::sigmoid(z.middleRows(H, H).array()).matrix();
            g.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
            g.bottomRows(H) = detail::sigmoid(z.bottomRows(H).array()).matrix();

            lc.c[t] = g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
            if (t > 0) lc.c[t] += g.middleRows(H, H).cwiseProduct(lc.c[t - 1]);
            lc.tanh_c[t] = lc.c[t].array().tanh().matrix();
            lc.h[t] = g.bottomRows(H).cwiseProduct(lc.tanh_c[t]);
        }
    }
    cache.prediction = net.w_out().transpose() * cache.layers.back().h.back();
    cache.prediction.array() += net.b_out();
    return cache;
}

struct Prediction {
    double value = 0;
    ForwardCache cache;
};

/// Single-window forward pass; `window` holds steps x input_dim values.
inline Prediction forward(const Network& net, std::span<const double> window) {
    if (window.empty() || window.size() % net.input_dim() != 0)
        throw UsageError("forward: window size " + std::to_string(window.size()) +
                         " is not a multiple of the input dimension " + std::to_string(net.input_dim()));
    const double* ptr = window.data();
    auto cache = forward_batch(net, std::span<const double* const>(&ptr, 1), window.size() / net.input_dim());
    double v = cache.prediction(0);
    return {v, std::move(cache)};
}

/// Accumulates into `grads` (network layout, overwritten) the gradient of
/// sum_s prediction_s * d_prediction_s by backpropagation through time.
inline void backward_into(const Network& net, const ForwardCache& cache, std::span<const double> d_prediction,
                          std::span<double> grads) {
    if (cache.input_dim != net.input_dim() || cache.sizes != net.sizes() || cache.layers.size() != net.layer_count())
        throw UsageError("backward: cache was produced by a network of a different shape");
    if (d_prediction.size() != cache.batch) throw UsageError("backward: upstream gradient size does not match batch");
    if (grads.size() != net.parameter_count()) throw UsageError("backward: gradient buffer has the wrong size");
    std::fill(grads.begin(), grads.end(), 0.0);

    const auto B = static_cast<Eigen::Index>(cache.batch);
    const std::size_t T = cache.steps;
    ConstVectorMap dpred(d_prediction.data(), B);

    const Matrix& h_top = cache.layers.back().h.back();
    net.w_out(grads.data()).noalias() = h_top * dpred;
    grads[net.b_out_offset()] = dpred.sum();

    // Gradient flowing into each step's hidden output from above.
    std::vector<Matrix> dh_above(T);
    for (std::size_t t = 0; t < T; ++t)
        dh_above[t] = Matrix::Zero(static_cast<Eigen::Index>(net.top_units()), B);
    dh_above[T - 1].noalias() = net.w_out() * dpred.transpose();

    for (std::size_t l = net.layer_count(); l-- > 0;) {
        const auto H = static_cast<Eigen::Index>(net.layer(l).units);
        const auto W = net.W(l);
        const auto U = net.U(l);
        auto dW = net.W(grads.data(), l);
        auto dU = net.U(grads.data(), l);
        auto db = net.b(grads.data(), l);
        const auto& lc = cache.layers[l];

        std::vector<Matrix> dx_below;
        if (l > 0) dx_below.resize(T);
        Matrix dh_next = Matrix::Zero(H, B);
        Matrix dc_next = Matrix::Zero(H, B);
        Matrix dz(4 * H, B);
        for (std::size_t t = T; t-- > 0;) {
            const auto& g = lc.gates[t];
            auto i = g.topRows(H).array();
            auto f = g.middleRows(H, H).array();
            auto cand = g.middleRows(2 * H, H).array();
            auto o = g.bottomRows(H).array();
            auto tc = lc.tanh_c[t].array();

            Eigen::ArrayXXd dh = (dh_above[t] + dh_next).array();
            Eigen::ArrayXXd dc = dc_next.array() + dh * o * (1.0 - tc * tc);
            dz.topRows(H) = (dc * cand * i * (1.0 - i)).matrix();
            if (t > 0)
                dz.middleRows(H, H) = (dc * lc.c[t - 1].array() * f * (1.0 - f)).matrix();
            else
                dz.middleRows(H, H).setZero();
            dz.middleRows(2 * H, H) = (dc * i * (1.0 - cand * cand)).matrix();
            dz.bottomRows(H) = (dh * tc * o * (1.0 - o)).matrix();
            dc_next = (dc * f).matrix();

            dW.noalias() += dz * cache.layer_input(l, t).transpose();
            db.noalias() += dz.rowwise().sum();
            if (t > 0) {
                dU.noalias() += dz * lc.h[t - 1].transpose();
                dh_next.noalias() = U.transpose() * dz;
            }
            if (l > 0) dx_below[t].noalias() = W.transpose() * dz;
        }
        if (l > 0) dh_above = std::move(dx_below);
    }
}

inline std::vector<double> backward(const Network& net, const ForwardCache& cache, std::span<const double> d_prediction) {
    std::vector<double> grads(net.parameter_count());
    backward_into(net, cache, d_prediction, grads);
    return grads;
}

inline std::vector<double> backward(const Network& net, const ForwardCache& cache, double d_prediction) {
    return backward(net, cache, std::span<const double>(&d_prediction, 1));
}

// ---------------------------------------------------------------- ADAM

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0; // completed steps

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

class NonFiniteGradient : public Error {
public:
    using Error::Error;
};

/// One bias-corrected ADAM update; throws before touching `params` when any
/// gradient is non-finite.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw UsageError("adam_step: shape mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i)
        if (!std::isfinite(grads[i])) throw NonFiniteGradient("non-finite gradient at parameter " + std::to_string(i));
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

// ---------------------------------------------------------------- training

struct TrainConfig {
    std::size_t batch_size = 16;
    double learning_rate = 0.001;
    std::size_t max_epochs = 20;
    std::size_t patience = 2; // 0 disables early stopping
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0; // 0 disables global-norm clipping

    void validate() const {
        if (batch_size < 1) throw UsageError("batch_size must be at least 1");
        if (!(learning_rate >= 0)) throw UsageError("learning_rate must be non-negative");
        if (max_epochs < 1) throw UsageError("max_epochs must be at least 1");
        if (patience > max_epochs) throw UsageError("patience must not exceed max_epochs");
    }
    AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

/// Tracks validation loss and decides when to stop. Epochs are 1-based.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    /// Records one epoch; returns true when training should stop.
    bool observe(double val_loss) {
        ++epoch_;
        if (epoch_ == 1 || val_loss < best_) {
            best_ = val_loss;
            best_epoch_ = epoch_;
            return false;
        }
        return patience_ > 0 && epoch_ - best_epoch_ >= patience_;
    }
    bool improved_last() const { return best_epoch_ == epoch_; }
    std::size_t best_epoch() const { return best_epoch_; }
    double best() const { return best_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    double best_ = 0;
};

struct EpochRecord {
    double train_mse = 0;
    double val_mse = 0;
};

struct TrainedModel {
    Network network;
    NormParams norm;
    std::string target_column = "price_high";
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    TrainConfig config;

    // Data context needed to rebuild inputs at forecast time.
    std::string coin;
    std::size_t k = 0;
    std::size_t j = 0;
    std::vector<std::string> feature_names;
    Date data_first{};
    Date data_last{};
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::vector<const double*> window_ptrs(const WindowedDataset& ds, std::span<const std::size_t> idx) {
    std::vector<const double*> p;
    p.reserve(idx.size());
    for (auto i : idx) p.push_back(ds.samples[i].input.data());
    return p;
}

inline constexpr std::size_t kEvalChunk = 64;

} // namespace detail

/// Normalized-space predictions for every sample, in order.
inline std::vector<double> predict_normalized(const Network& net, const WindowedDataset& ds) {
    if (ds.features() != net.input_dim())
        throw UsageError("dataset has " + std::to_string(ds.features()) + " features, network expects " +
                         std::to_string(net.input_dim()));
    std::vector<double> out;
    out.reserve(ds.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.size(); start += detail::kEvalChunk) {
        idx.clear();
        for (std::size_t i = start; i < std::min(ds.size(), start + detail::kEvalChunk); ++i) idx.push_back(i);
        auto ptrs = detail::window_ptrs(ds, idx);
        auto cache = forward_batch(net, ptrs, ds.k);
        for (Eigen::Index s = 0; s < cache.prediction.size(); ++s) out.push_back(cache.prediction(s));
    }
    return out;
}

inline double mse(const Network& net, const WindowedDataset& ds) {
    auto pred = predict_normalized(net, ds);
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - ds.samples[i].target) * (pred[i] - ds.samples[i].target);
    return s / static_cast<double>(pred.size());
}

/// Mini-batch ADAM on MSE with per-epoch validation, early stopping and
/// restoration of the best-validation parameters.
inline TrainedModel train(Network net, const WindowedDataset& fit_set, const WindowedDataset& val_set,
                          const TrainConfig& config, NormParams norm = {}) {
    config.validate();
    if (fit_set.empty() || val_set.empty()) throw UsageError("train: fit and validation sets must be nonempty");
    if (fit_set.features() != net.input_dim() || val_set.features() != net.input_dim() || fit_set.k != val_set.k)
        throw UsageError("train: dataset shape does not match the network");

    TrainedModel model;
    model.config = config;
    model.norm = std::move(norm);
    model.k = fit_set.k;
    model.j = fit_set.j;
    model.feature_names = fit_set.feature_names;

    AdamState adam(net.parameter_count());
    const auto adam_cfg = config.adam();
    EarlyStopping stopper(config.patience);
    std::vector<double> best_params = net.params();
    std::vector<double> grads(net.parameter_count());
    std::vector<std::size_t> order(fit_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(config.seed));

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            auto idx = std::span<const std::size_t>(order).subspan(start, std::min(config.batch_size, order.size() - start));
            auto ptrs = detail::window_ptrs(fit_set, idx);
            auto cache = forward_batch(net, ptrs, fit_set.k);
            const auto n = static_cast<double>(idx.size());
            std::vector<double> dpred(idx.size());
            for (std::size_t s = 0; s < idx.size(); ++s) {
                double err = cache.prediction(static_cast<Eigen::Index>(s)) - fit_set.samples[idx[s]].target;
                loss_sum += err * err;
                dpred[s] = 2.0 * err / n;
            }
            backward_into(net, cache, dpred, grads);
            if (config.clip_norm > 0) {
                double sq = 0;
                for (double g : grads) sq += g * g;
                double norm2 = std::sqrt(sq);
                if (norm2 > config.clip_norm)
                    for (double& g : grads) g *= config.clip_norm / norm2;
            }
            try {
                adam_step(net.params(), grads, adam, adam_cfg);
            } catch (const NonFiniteGradient& e) {
                throw TrainingDiverged("epoch " + std::to_string(epoch) + ", batch starting at " +
                                       std::to_string(start) + ": " + e.what());
            }
        }
        EpochRecord rec{loss_sum / static_cast<double>(order.size()), mse(net, val_set)};
        model.history.push_back(rec);
        if (!std::isfinite(rec.val_mse))
            throw TrainingDiverged("validation MSE became non-finite at epoch " + std::to_string(epoch) +
                                   " (train MSE " + format_double(rec.train_mse) + ")");
        bool stop = stopper.observe(rec.val_mse);
        if (stopper.improved_last()) best_params = net.params();
        if (stop) break;
    }
    net.params() = std::move(best_params);
    model.best_epoch = stopper.best_epoch();
    model.network = std::move(net);
    return model;
}

/// USD predictions for windows normalized with `model.norm`.
inline std::vector<double> predict(const TrainedModel& model, const WindowedDataset& windows) {
    auto out = predict_normalized(model.network, windows);
    for (double& v : out) v = invert_minmax(v, model.target_column, model.norm);
    return out;
}

// ---------------------------------------------------------------- serialization
//
// Layout: the text line "coinseer-lstm 1", a single-line JSON header with
// shapes, normalization, config and data context, then parameter_count
// little-endian IEEE-754 doubles.

inline constexpr std::string_view kModelMagic = "coinseer-lstm 1";

inline void save_model(std::ostream& out, const TrainedModel& m) {
    static_assert(std::endian::native == std::endian::little, "model files store little-endian doubles");
    nlohmann::json h;
    h["input_dim"] = m.network.input_dim();
    h["sizes"] = m.network.sizes();
    h["parameter_count"] = m.network.parameter_count();
    nlohmann::json norm = nlohmann::json::array();
    for (std::size_t i = 0; i < m.norm.columns.size(); ++i)
        norm.push_back({{"column", m.norm.columns[i]}, {"min", m.norm.ranges[i].min}, {"max", m.norm.ranges[i].max}});
    h["norm"] = norm;
    h["target_column"] = m.target_column;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : m.history) hist.push_back({e.train_mse, e.val_mse});
    h["history"] = hist;
    h["best_epoch"] = m.best_epoch;
    const auto& c = m.config;
    h["config"] = {{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs},
                   {"patience", c.patience},     {"seed", c.seed},                   {"beta1", c.beta1},
                   {"beta2", c.beta2},           {"epsilon", c.epsilon},             {"clip_norm", c.clip_norm}};
    h["coin"] = m.coin;
    h["k"] = m.k;
    h["j"] = m.j;
    h["feature_names"] = m.feature_names;
    h["data_first"] = format_date(m.data_first);
    h["data_last"] = format_date(m.data_last);
    out << kModelMagic << '\n' << h.dump() << '\n';
    const auto& p = m.network.params();
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
    if (!out) throw Error("failed to write model");
}

inline TrainedModel load_model(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kModelMagic) throw DataError("not a coinseer model file");
    if (!std::getline(in, line)) throw DataError("model file truncated in header");
    auto h = nlohmann::json::parse(line, nullptr, false);
    if (h.is_discarded()) throw DataError("model header is not valid JSON");
    try {
        TrainedModel m;
        m.network = Network(h.at("input_dim").get<std::size_t>(), h.at("sizes").get<std::vector<std::size_t>>());
        if (m.network.parameter_count() != h.at("parameter_count").get<std::size_t>())
            throw DataError("model header parameter count does not match its shapes");
        for (const auto& e : h.at("norm")) {
            m.norm.columns.push_back(e.at("column").get<std::string>());
            m.norm.ranges.push_back({e.at("min").get<double>(), e.at("max").get<double>()});
        }
        m.target_column = h.at("target_column").get<std::string>();
        for (const auto& e : h.at("history")) m.history.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
        m.best_epoch = h.at("best_epoch").get<std::size_t>();
        const auto& c = h.at("config");
        m.config.batch_size = c.at("batch_size").get<std::size_t>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.max_epochs = c.at("max_epochs").get<std::size_t>();
        m.config.patience = c.at("patience").get<std::size_t>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.config.beta1 = c.at("beta1").get<double>();
        m.config.beta2 = c.at("beta2").get<double>();
        m.config.epsilon = c.at("epsilon").get<double>();
        m.config.clip_norm = c.at("clip_norm").get<double>();
        m.coin = h.at("coin").get<std::string>();
        m.k = h.at("k").get<std::size_t>();
        m.j = h.at("j").get<std::size_t>();
        m.feature_names = h.at("feature_names").get<std::vector<std::string>>();
        m.data_first = parse_date_or_throw(h.at("data_first").get<std::string>());
        m.data_last = parse_date_or_throw(h.at("data_last").get<std::string>());
        auto& p = m.network.params();
        in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(p.size() * sizeof(double)))
            throw DataError("model file truncated in parameters");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model header: ") + e.what());
    }
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    save_model(out, m);
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model " + path.string());
    return load_model(in);
}

} // namespace coinseer::lstm
