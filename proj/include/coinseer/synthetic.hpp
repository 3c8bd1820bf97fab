#pragma once

// Seed-deterministic stand-in for the price, Reddit and GitHub archives.
// Price follows a geometric random walk whose drift switches between a
// bull and a bear regime; social activity is coupled to the price level
// and to daily returns so the signal extractors have something to find.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "ingest.hpp"

namespace coinseer {

struct SyntheticBundle {
    PriceSeries price;
    std::vector<CommentRecord> comments;
    std::vector<EventRecord> events;
    std::string subreddit;
    std::string repo;

    bool operator==(const SyntheticBundle&) const = default;
};

inline constexpr std::string_view kSyntheticCoin = "synthcoin";

/// Price-process knobs; daily log-return = drift(regime) + volatility * N(0, 1).
struct SyntheticParams {
    double bull_drift = 0.002;
    double bear_drift = -0.002;
    double volatility = 0.03;
    double regime_switch = 0.02; // daily probability of flipping regime
};

namespace detail {

inline constexpr std::array<std::string_view, 10> kUpWords = {"good",  "great",  "amazing", "happy", "bullish",
                                                               "moon",  "profit", "win",     "strong", "love"};
inline constexpr std::array<std::string_view, 10> kDownWords = {"bad",  "terrible", "crash", "scam", "fear",
                                                                "bearish", "loss",  "dump",  "weak", "worried"};
inline constexpr std::array<std::string_view, 40> kPlainWords = {
    "the",    "a",      "is",      "it",     "to",     "and",    "of",     "this",   "that",  "price",
    "coin",   "wallet", "block",   "chain",  "miner",  "fork",   "node",   "market", "trade", "exchange",
    "buy",    "sell",   "hold",    "today",  "week",   "fees",   "hash",   "mining", "dev",   "release",
    "update", "team",   "support", "volume", "chart",  "order",  "think",  "people", "new",   "real"};

} // namespace detail

/// `days` consecutive days starting at `start` (default 2016-01-01).
inline SyntheticBundle generate_synthetic(std::uint64_t seed, std::size_t days, const SyntheticParams& params = {},
                                          Date start = Date{std::chrono::year{2016} / 1 / 1}) {
    if (days < 60) throw UsageError("synthetic data needs at least 60 days");
    std::mt19937_64 rng(mix_seed(seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> second_of_day(0, 86399);
    auto poisson = [&](double lambda) -> std::int64_t {
        if (!(lambda > 0)) return 0;
        return std::poisson_distribution<std::int64_t>(lambda)(rng);
    };

    SyntheticBundle b;
    b.subreddit = std::string(kSyntheticCoin);
    b.repo = std::string(kSyntheticCoin) + "/" + std::string(kSyntheticCoin);
    b.price.coin = std::string(kSyntheticCoin);

    // Daily rate of each event type at the starting price level, and the
    // elasticity of that rate with respect to the price level.
    constexpr std::array<double, kEventTypeCount> kBaseRate = {6.0, 2.0, 1.5, 4.0, 3.0, 0.3, 1.5, 1.0};
    constexpr std::array<double, kEventTypeCount> kElasticity = {1.0, 0.8, 0.3, 0.4, 0.2, 0.0, 0.3, 0.3};

    bool bull = unit(rng) < 0.5;
    const double p0 = 100.0 * std::exp(unit(rng) - 0.5);
    double close = p0;
    for (std::size_t d = 0; d < days; ++d) {
        if (unit(rng) < params.regime_switch) bull = !bull;
        const double ret = (bull ? params.bull_drift : params.bear_drift) + params.volatility * normal(rng);
        const double open = close;
        close = open * std::exp(ret);
        const double high = std::max(open, close) * std::exp(0.012 * std::fabs(normal(rng)));
        const double low = std::min(open, close) * std::exp(-0.012 * std::fabs(normal(rng)));
        const Date day = start + std::chrono::days{static_cast<long>(d)};
        b.price.dates.push_back(day);
        b.price.open.push_back(open);
        b.price.high.push_back(high);
        b.price.low.push_back(low);
        b.price.close.push_back(close);

        const std::int64_t day_start = std::chrono::sys_seconds{day}.time_since_epoch().count();
        const double level = close / p0;

        for (std::size_t t = 0; t < kEventTypeCount; ++t) {
            auto n = poisson(kBaseRate[t] * std::pow(level, kElasticity[t]));
            for (std::int64_t e = 0; e < n; ++e)
                b.events.push_back({day_start + second_of_day(rng), b.repo, kAllEventTypes[t]});
        }

        const double volume = std::min(300.0, 20.0 * std::pow(level, 0.4) + 500.0 * std::fabs(ret));
        const double bullishness = std::clamp(0.5 + 6.0 * ret + (bull ? 0.1 : -0.1), 0.05, 0.95);
        const double popularity = 1.0 + 2.0 * std::sqrt(level);
        const auto n_comments = poisson(volume);
        for (std::int64_t c = 0; c < n_comments; ++c) {
            const auto len = 3 + poisson(6.0);
            std::string body;
            for (std::int64_t w = 0; w < len; ++w) {
                std::string_view word;
                if (unit(rng) < 0.15) {
                    const auto pick = static_cast<std::size_t>(unit(rng) * 10.0) % 10;
                    word = unit(rng) < bullishness ? detail::kUpWords[pick] : detail::kDownWords[pick];
                } else {
                    word = detail::kPlainWords[static_cast<std::size_t>(unit(rng) * 40.0) % 40];
                }
                if (!body.empty()) body += ' ';
                body += word;
            }
            const auto score = poisson(popularity) - poisson(0.5);
            b.comments.push_back({day_start + second_of_day(rng), b.subreddit, std::move(body), score});
        }
    }
    std::sort(b.events.begin(), b.events.end(), [](const EventRecord& x, const EventRecord& y) {
        return std::tie(x.created_at, x.event_type, x.repo) < std::tie(y.created_at, y.event_type, y.repo);
    });
    std::sort(b.comments.begin(), b.comments.end(), [](const CommentRecord& x, const CommentRecord& y) {
        return std::tie(x.created_utc, x.subreddit, x.body, x.score) <
               std::tie(y.created_utc, y.subreddit, y.body, y.score);
    });
    return b;
}

inline std::string format_iso8601(std::int64_t unix_seconds) {
    const auto day = day_of(unix_seconds);
    const auto secs = unix_seconds - std::chrono::sys_seconds{day}.time_since_epoch().count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(day).c_str(),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

/// One archive-style JSON object per line.
inline void write_reddit_ndjson(std::ostream& out, const std::vector<CommentRecord>& comments) {
    for (const auto& c : comments) {
        nlohmann::ordered_json j = {
            {"created_utc", c.created_utc}, {"subreddit", c.subreddit}, {"body", c.body}, {"score", c.score}};
        out << j.dump() << '\n';
    }
}

inline void write_github_ndjson(std::ostream& out, const std::vector<EventRecord>& events) {
    for (const auto& e : events) {
        nlohmann::ordered_json j = {{"type", std::string(event_type_name(e.event_type)) + "Event"},
                                    {"created_at", format_iso8601(e.created_at)},
                                    {"repo", {{"name", e.repo}}}};
        out << j.dump() << '\n';
    }
}

struct SyntheticPaths {
    std::filesystem::path prices, reddit, github;
};

/// Writes <coin>_prices.csv, <coin>_reddit.ndjson and <coin>_github.ndjson.
inline SyntheticPaths write_synthetic(const SyntheticBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    SyntheticPaths p{dir / (b.price.coin + "_prices.csv"), dir / (b.price.coin + "_reddit.ndjson"),
                     dir / (b.price.coin + "_github.ndjson")};
    auto open = [](const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        return out;
    };
    {
        auto out = open(p.prices);
        write_price_csv(out, b.price);
    }
    {
        auto out = open(p.reddit);
        write_reddit_ndjson(out, b.comments);
    }
    {
        auto out = open(p.github);
        write_github_ndjson(out, b.events);
    }
    return p;
}

} // namespace coinseer
