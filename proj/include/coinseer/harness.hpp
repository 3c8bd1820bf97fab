#pragma once

// Ablation engine: enumerate (coin x model x signal set x k x j)
// configurations, run each on the shared train/test protocol, and rank
// the results by mean RMSPE.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "arima.hpp"
#include "core.hpp"
#include "dataset.hpp"
#include "ingest.hpp"
#include "lstm.hpp"
#include "metrics.hpp"
#include "signals.hpp"

namespace coinseer::harness {

enum class ModelKind : std::uint8_t { ARIMA, LSTM };

inline std::string_view model_name(ModelKind k) { return k == ModelKind::ARIMA ? "ARIMA" : "LSTM"; }

/// Signal families on top of the always-present price history, kept in
/// canonical family order.
using SignalSet = std::vector<SignalFamily>;

inline SignalSet canonical(SignalSet s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

/// "$" for price only, otherwise "$+GH_Pop+R_Lang".
inline std::string signals_label(const SignalSet& s) {
    std::string out = "$";
    for (auto f : s) out += "+" + std::string(family_name(f));
    return out;
}

/// File-name friendly variant of signals_label.
inline std::string signals_slug(const SignalSet& s) {
    std::string out = "price";
    for (auto f : s) out += "+" + std::string(family_name(f));
    return out;
}

struct ExperimentConfig {
    std::string coin;
    ModelKind kind = ModelKind::LSTM;
    SignalSet signals;
    std::size_t k = 0; // 0 for ARIMA, which ignores the training window
    std::size_t j = 1;

    std::string id() const {
        std::string s = coin + "_" + std::string(model_name(kind)) + "_" + signals_slug(signals);
        if (kind == ModelKind::LSTM) s += "_k" + std::to_string(k);
        return s + "_j" + std::to_string(j);
    }
    bool operator==(const ExperimentConfig&) const = default;
};

/// Every subset of `available`, in increasing bitmask order (empty set first).
inline std::vector<SignalSet> powerset(const SignalSet& available) {
    auto fams = canonical(available);
    std::vector<SignalSet> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << fams.size()); ++mask) {
        SignalSet s;
        for (std::size_t b = 0; b < fams.size(); ++b)
            if (mask & (std::size_t{1} << b)) s.push_back(fams[b]);
        out.push_back(s);
    }
    return out;
}

/// The signal combinations reported for the top models: $, $+R_Lang,
/// $+GH_Pop+R_Lang, $+R_Vol.
inline std::vector<SignalSet> paper_signal_sets() {
    return {{}, {SignalFamily::R_Lang}, {SignalFamily::GH_Pop, SignalFamily::R_Lang}, {SignalFamily::R_Vol}};
}

/// For each coin and j: one ARIMA, then one LSTM per (k, signal set).
inline std::vector<ExperimentConfig> enumerate_grid(const std::vector<std::string>& coins,
                                                    const std::vector<SignalSet>& signal_sets,
                                                    const std::vector<std::size_t>& k_range,
                                                    const std::vector<std::size_t>& j_range) {
    if (coins.empty() || k_range.empty() || j_range.empty() || signal_sets.empty())
        throw UsageError("enumerate_grid: coins, signal sets and window ranges must be nonempty");
    for (auto k : k_range)
        if (k < 1) throw UsageError("training window k must be at least 1");
    for (auto j : j_range)
        if (j < 1) throw UsageError("forecasting window j must be at least 1");
    std::vector<ExperimentConfig> out;
    for (const auto& coin : coins) {
        for (auto j : j_range) {
            out.push_back({coin, ModelKind::ARIMA, {}, 0, j});
            for (auto k : k_range)
                for (const auto& s : signal_sets) out.push_back({coin, ModelKind::LSTM, canonical(s), k, j});
        }
    }
    return out;
}

/// Powerset grid over the available signal families.
inline std::vector<ExperimentConfig> enumerate_grid(const std::vector<std::string>& coins, const SignalSet& available,
                                                    const std::vector<std::size_t>& k_range,
                                                    const std::vector<std::size_t>& j_range) {
    return enumerate_grid(coins, powerset(available), k_range, j_range);
}

// ---------------------------------------------------------------- data

/// Aligned price plus every computable signal family for one coin.
struct CoinData {
    std::string name;
    PriceSeries price;
    std::map<SignalFamily, SignalMatrix> families;
    std::map<SignalFamily, std::string> unavailable; // family -> reason
    std::size_t filled_days = 0;

    DateRange calendar() const { return price.range(); }
    const SignalMatrix& family(SignalFamily f) const {
        auto it = families.find(f);
        if (it == families.end()) {
            auto why = unavailable.find(f);
            throw DataError(std::string(family_name(f)) + " unavailable for " + name +
                            (why != unavailable.end() ? ": " + why->second : std::string{}));
        }
        return it->second;
    }
};

struct DataBundle {
    std::vector<CoinData> coins;

    const CoinData& coin(std::string_view name) const {
        for (const auto& c : coins)
            if (c.name == name) return c;
        throw UsageError("unknown coin '" + std::string(name) + "'");
    }
    std::vector<std::string> coin_names() const {
        std::vector<std::string> out;
        for (const auto& c : coins) out.push_back(c.name);
        return out;
    }
};

inline SignalMatrix compute_family(SignalFamily f, std::span<const CommentRecord> comments,
                                   std::span<const EventRecord> events, const SentimentLexicon& lexicon,
                                   DateRange calendar, std::size_t vocab_size) {
    switch (f) {
    case SignalFamily::GH_Pop: return github_popularity_signal(events, calendar);
    case SignalFamily::GH_All: return github_all_signal(events, calendar);
    case SignalFamily::R_Vol: return reddit_volume_signal(comments, calendar);
    case SignalFamily::R_Lang: return reddit_language_signal(comments, build_vocabulary(comments, vocab_size), calendar);
    case SignalFamily::R_Score: return reddit_score_signal(comments, calendar);
    case SignalFamily::R_Sent: return reddit_sentiment_signal(comments, lexicon, calendar);
    }
    throw UsageError("unknown signal family");
}

/// `price` must already be aligned to a gap-free calendar.
inline CoinData build_coin_data(std::string name, PriceSeries price, std::span<const CommentRecord> comments,
                                std::span<const EventRecord> events, const SentimentLexicon& lexicon,
                                std::size_t vocab_size = kDefaultVocabularySize) {
    CoinData c;
    c.name = std::move(name);
    c.price = std::move(price);
    for (auto f : kAllFamilies) {
        try {
            auto m = compute_family(f, comments, events, lexicon, c.calendar(), vocab_size);
            m.validate();
            c.families.emplace(f, std::move(m));
        } catch (const Error& e) {
            c.unavailable.emplace(f, e.what());
        }
    }
    return c;
}

// ---------------------------------------------------------------- running

struct ProtocolOptions {
    std::size_t k_max = kDefaultKMax;
    std::size_t j_max = kDefaultJMax;
    double train_fraction = kDefaultTrainFraction;
    double validation_fraction = 0.2;
    bool train_only_normalization = false;
    lstm::TrainConfig train;
    std::vector<std::size_t> layer_sizes = lstm::kPaperLayerSizes;
    std::size_t arima_lag_cap = 5;
    bool arima_refit = false;
    std::uint64_t master_seed = 7;
};

/// Widens the protocol's window maxima to cover a grid.
inline void cover_grid(ProtocolOptions& o, const std::vector<ExperimentConfig>& grid) {
    for (const auto& c : grid) {
        o.k_max = std::max(o.k_max, c.k);
        o.j_max = std::max(o.j_max, c.j);
    }
}

struct ExperimentResult {
    ExperimentConfig config;
    bool ok = false;
    std::string error;
    MetricsReport metrics;
    std::vector<Date> dates; // target dates (test anchor + j)
    std::vector<double> truth;
    std::vector<double> predictions;
    std::uint64_t seed = 0;
    // LSTM training summary
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_val_mse = 0;
    // ARIMA order
    std::size_t arima_p = 0;
};

inline std::uint64_t experiment_seed(std::uint64_t master, const ExperimentConfig& c) {
    return mix_seed(master ^ fnv1a(c.id()));
}

inline SignalMatrix build_inputs(const CoinData& coin, const SignalSet& signals) {
    std::vector<SignalMatrix> parts;
    parts.push_back(column_matrix(coin.calendar(), "price_high", coin.price.high));
    for (auto f : canonical(signals)) parts.push_back(coin.family(f));
    return concat_signals(parts);
}

struct LstmRun {
    lstm::TrainedModel model;
    WindowedDataset test;
};

/// Normalizes, windows and trains one LSTM configuration on the protocol's
/// training anchors; returns the model and the normalized test windows.
inline LstmRun train_lstm(const ExperimentConfig& cfg, const CoinData& coin, const ProtocolOptions& opt,
                          std::uint64_t seed) {
    if (cfg.k > opt.k_max || cfg.j > opt.j_max)
        throw UsageError("configuration window exceeds the protocol's k_max/j_max");
    const auto split = split_protocol(coin.calendar(), opt.k_max, opt.j_max, opt.train_fraction);
    const auto X = build_inputs(coin, cfg.signals);
    NormParams norm;
    if (opt.train_only_normalization) {
        auto last = *coin.calendar().index_of(split.train.last) + cfg.j + 1;
        norm = fit_minmax(X, 0, last);
    } else {
        norm = fit_minmax(X);
    }
    const auto Xn = apply_minmax(X, norm);
    const auto Yn = Xn.column(0);
    const auto all = make_windows(Xn, Yn, cfg.k, cfg.j);
    auto [fit_set, val_set] = validation_tail(select_anchors(all, split.train), opt.validation_fraction);

    auto tc = opt.train;
    tc.seed = seed;
    auto net = lstm::init_network(X.cols(), opt.layer_sizes, seed);
    LstmRun run{lstm::train(std::move(net), fit_set, val_set, tc, std::move(norm)), select_anchors(all, split.test)};
    run.model.coin = coin.name;
    run.model.data_first = coin.calendar().first;
    run.model.data_last = coin.calendar().last;
    return run;
}

namespace detail {

inline void run_lstm(ExperimentResult& r, const CoinData& coin, const ProtocolOptions& opt) {
    auto run = train_lstm(r.config, coin, opt, r.seed);
    r.predictions = lstm::predict(run.model, run.test);
    for (std::size_t i = 0; i < run.test.size(); ++i) {
        auto d = run.test.target_date(i);
        r.dates.push_back(d);
        r.truth.push_back(coin.price.high[*coin.calendar().index_of(d)]);
    }
    r.epochs_run = run.model.history.size();
    r.best_epoch = run.model.best_epoch;
    r.best_val_mse = run.model.history.at(run.model.best_epoch - 1).val_mse;
}

inline void run_arima(ExperimentResult& r, const CoinData& coin, const ProtocolOptions& opt) {
    if (r.config.j > opt.j_max) throw UsageError("configuration window exceeds the protocol's j_max");
    const auto split = split_protocol(coin.calendar(), opt.k_max, opt.j_max, opt.train_fraction);
    const auto cal = coin.calendar();
    std::span<const double> y = coin.price.high;
    const auto train_y = y.first(*cal.index_of(split.train.last) + 1);
    const auto p = arima::select_lag(train_y, arima::screen_max_lag(train_y, opt.arima_lag_cap));
    const auto model = arima::fit(train_y, p);
    r.arima_p = model.p;
    for (auto i = *cal.index_of(split.test.first); i <= *cal.index_of(split.test.last); ++i) {
        auto history = y.first(i + 1);
        double pred = opt.arima_refit ? arima::forecast(arima::fit(history, p), history, r.config.j)
                                      : arima::forecast(model, history, r.config.j);
        r.dates.push_back(cal.at(i + r.config.j));
        r.truth.push_back(y[i + r.config.j]);
        r.predictions.push_back(pred);
    }
}

} // namespace detail

/// Runs one configuration. Failures are captured in the result rather than
/// thrown so partial grids stay analyzable.
inline ExperimentResult run_experiment(const ExperimentConfig& config, const DataBundle& data,
                                       const ProtocolOptions& options) {
    ExperimentResult r;
    r.config = config;
    r.seed = experiment_seed(options.master_seed, config);
    try {
        const auto& coin = data.coin(config.coin);
        if (config.kind == ModelKind::ARIMA) {
            if (!config.signals.empty()) throw UsageError("ARIMA runs on price history only");
            detail::run_arima(r, coin, options);
        } else {
            detail::run_lstm(r, coin, options);
        }
        r.metrics = evaluate(r.predictions, r.truth);
        r.ok = true;
    } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        r.dates.clear();
        r.truth.clear();
        r.predictions.clear();
    }
    return r;
}

/// Runs every configuration on up to `jobs` threads; results keep grid order.
inline std::vector<ExperimentResult> run_grid(const std::vector<ExperimentConfig>& grid, const DataBundle& data,
                                              const ProtocolOptions& options, std::size_t jobs = 1) {
    std::vector<ExperimentResult> results(grid.size());
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(grid.size(), 1));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) results[i] = run_experiment(grid[i], data, options);
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    return results;
}

// ---------------------------------------------------------------- ranking

struct RankingRow {
    std::string model;   // "ARIMA", "LSTM", or "LSTM(k=3)" when several k are ranked
    std::string signals; // "$+R_Lang"
    ModelKind kind = ModelKind::LSTM;
    SignalSet signal_set;
    std::size_t k = 0;
    std::map<std::size_t, double> rmspe_by_j; // mean over coins
    double mean = 0;
};

/// Groups results by (model, signal set, k), averages RMSPE over coins for
/// each j, then over j; sorted ascending with ties broken by name.
inline std::vector<RankingRow> rank_models(const std::vector<ExperimentResult>& results) {
    using Key = std::tuple<ModelKind, SignalSet, std::size_t>;
    std::map<Key, std::map<std::size_t, std::map<std::string, MetricsReport>>> groups;
    for (const auto& r : results) {
        if (!r.ok) continue;
        auto& by_coin = groups[{r.config.kind, r.config.signals, r.config.k}][r.config.j];
        if (!by_coin.emplace(r.config.coin, r.metrics).second)
            throw DataError("rank_models: duplicate result for " + r.config.id());
    }
    if (groups.empty()) return {};

    std::optional<std::set<std::size_t>> js;
    std::set<std::size_t> lstm_ks;
    for (const auto& [key, by_j] : groups) {
        std::set<std::size_t> mine;
        for (const auto& [j, by_coin] : by_j) {
            mine.insert(j);
            if (by_coin.size() != by_j.begin()->second.size())
                throw DataError("rank_models: inconsistent coin coverage across forecasting windows");
        }
        if (js && *js != mine) throw DataError("rank_models: inconsistent forecasting-window coverage across models");
        js = mine;
        if (std::get<0>(key) == ModelKind::LSTM) lstm_ks.insert(std::get<2>(key));
    }

    std::vector<RankingRow> rows;
    for (const auto& [key, by_j] : groups) {
        RankingRow row;
        row.kind = std::get<0>(key);
        row.signal_set = std::get<1>(key);
        row.k = std::get<2>(key);
        row.model = std::string(model_name(row.kind));
        if (row.kind == ModelKind::LSTM && lstm_ks.size() > 1) row.model += "(k=" + std::to_string(row.k) + ")";
        row.signals = signals_label(row.signal_set);
        double total = 0;
        for (const auto& [j, by_coin] : by_j) {
            row.rmspe_by_j[j] = mean_rmspe_across(by_coin);
            total += row.rmspe_by_j[j];
        }
        row.mean = total / static_cast<double>(by_j.size());
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const RankingRow& a, const RankingRow& b) {
        if (a.mean != b.mean) return a.mean < b.mean;
        return std::tie(a.model, a.signals, a.k) < std::tie(b.model, b.signals, b.k);
    });
    return rows;
}

} // namespace coinseer::harness
