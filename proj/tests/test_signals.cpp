#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <coinseer/signals.hpp>
#include <coinseer/synthetic.hpp>

#include "test_util.hpp"

using namespace coinseer;

namespace {

Date d(const char* s) { return parse_date_or_throw(s); }

std::int64_t at(const char* day, int seconds = 0) {
    return std::chrono::sys_seconds{d(day)}.time_since_epoch().count() + seconds;
}

EventRecord ev(const char* day, EventType t, int s = 0) { return {at(day, s), "bitcoin/bitcoin", t}; }
CommentRecord cm(const char* day, std::string body, std::int64_t score = 0, int s = 0) {
    return {at(day, s), "bitcoin", std::move(body), score};
}

const DateRange kTwoDays{d("2017-05-04"), d("2017-05-05")};

std::vector<double> row_of(const SignalMatrix& m, std::size_t r) {
    auto s = m.row(r);
    return {s.begin(), s.end()};
}

/// Hyndman-Fan type 7 with 1-based ranks, written independently of quantile_sorted.
double type7(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1.0) * p + 1.0;
    auto fl = static_cast<std::size_t>(h);
    if (fl >= v.size()) return v.back();
    return v[fl - 1] + (h - static_cast<double>(fl)) * (v[fl] - v[fl - 1]);
}

} // namespace

TEST(GithubSignals, PopularityCountsPerDay) {
    std::vector<EventRecord> e = {ev("2017-05-04", EventType::Watch), ev("2017-05-04", EventType::Watch, 60),
                                  ev("2017-05-04", EventType::Watch, 120), ev("2017-05-04", EventType::Fork),
                                  ev("2017-05-04", EventType::Push), ev("2017-05-07", EventType::Watch)};
    auto m = github_popularity_signal(e, kTwoDays);
    EXPECT_EQ(m.columns(), (std::vector<std::string>{"gh_watch", "gh_fork"}));
    EXPECT_EQ(row_of(m, 0), (std::vector<double>{3, 1}));
    EXPECT_EQ(row_of(m, 1), (std::vector<double>{0, 0}));
}

TEST(GithubSignals, AllEightColumnsInOrder) {
    std::vector<EventRecord> e;
    for (auto t : kAllEventTypes) e.push_back(ev("2017-05-04", t));
    e.push_back(ev("2017-05-05", EventType::Push));
    e.push_back(ev("2017-05-05", EventType::Push, 5));
    e.push_back(ev("2017-05-05", EventType::PullRequest));
    auto m = github_all_signal(e, kTwoDays);
    EXPECT_EQ(m.columns(), (std::vector<std::string>{"gh_watch", "gh_fork", "gh_issues", "gh_issuecomment", "gh_push",
                                                     "gh_commitcomment", "gh_pullrequest", "gh_pullrequestreviewcomment"}));
    EXPECT_EQ(row_of(m, 0), std::vector<double>(8, 1.0));
    EXPECT_EQ(row_of(m, 1), (std::vector<double>{0, 0, 0, 0, 2, 0, 1, 0}));
    EXPECT_EQ(row_of(github_all_signal({}, kTwoDays), 0), std::vector<double>(8, 0.0));
}

TEST(GithubSignals, SumEqualsRecognizedEventCount) {
    auto b = generate_synthetic(5, 90);
    auto m = github_all_signal(b.events, b.price.range());
    double total = 0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (double v : m.row(r)) total += v;
    EXPECT_EQ(total, static_cast<double>(b.events.size()));
}

TEST(RedditSignals, VolumeUsesUtcDays) {
    std::vector<CommentRecord> c = {cm("2017-05-04", "a"), cm("2017-05-04", ""), cm("2017-05-04", "b"),
                                    cm("2017-05-04", "c"), cm("2017-05-04", "d", 0, 86399)};
    auto m = reddit_volume_signal(c, kTwoDays);
    EXPECT_EQ(m.at(0, 0), 5);
    EXPECT_EQ(m.at(1, 0), 0);
}

TEST(Tokenize, Rules) {
    EXPECT_EQ(tokenize("HODL to the Moon!!"), (std::vector<std::string>{"hodl", "to", "the", "moon"}));
    EXPECT_EQ(tokenize("BTC-USD 2x"), (std::vector<std::string>{"btc", "usd", "2x"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("caf\xc3\xa9 a"), (std::vector<std::string>{"caf", "a"}));
}

TEST(Vocabulary, FrequencyThenLexicographic) {
    std::vector<CommentRecord> c = {cm("2017-05-04", "a c a"), cm("2017-05-04", "b a")};
    auto v = build_vocabulary(c, 2);
    EXPECT_EQ(v.tokens, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(build_vocabulary(std::vector<CommentRecord>{cm("2017-05-04", "w x y z")}).size(), 4u);
    EXPECT_THROW(build_vocabulary(c, 0), UsageError);
    EXPECT_THROW(build_vocabulary({}, 5), DataError);
    EXPECT_THROW(build_vocabulary(std::vector<CommentRecord>{cm("2017-05-04", "!!")}, 5), DataError);
}

TEST(RedditSignals, LanguageRelativeFrequency) {
    std::vector<CommentRecord> c = {cm("2017-05-04", "btc btc"), cm("2017-05-04", "moon lambo")};
    Vocabulary v;
    v.tokens = {"btc", "moon"};
    v.index = {{"btc", 0}, {"moon", 1}};
    auto m = reddit_language_signal(c, v, kTwoDays);
    EXPECT_EQ(m.columns(), (std::vector<std::string>{"r_lang_btc", "r_lang_moon"}));
    EXPECT_DOUBLE_EQ(m.at(0, 0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.at(0, 1), 1.0 / 3.0);
    EXPECT_EQ(row_of(m, 1), (std::vector<double>{0, 0}));
    auto oov = reddit_language_signal(std::vector<CommentRecord>{cm("2017-05-04", "lambo")}, v, kTwoDays);
    EXPECT_EQ(row_of(oov, 0), (std::vector<double>{0, 0}));
}

TEST(RedditSignals, LanguageRowsSumToOne) {
    auto b = generate_synthetic(9, 120);
    auto vocab = build_vocabulary(b.comments, 25); // leaves some tokens out of vocabulary
    auto m = reddit_language_signal(b.comments, vocab, b.price.range());
    m.validate();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (s != 0.0) EXPECT_NEAR(s, 1.0, 1e-9) << "row " << r;
    }
}

TEST(Quartiles, PinnedConvention) {
    EXPECT_EQ(quartiles({0, 1, 2, 3, 4}), (Quartiles{1, 2, 3}));
    EXPECT_EQ(quartiles({5}), (Quartiles{5, 5, 5}));
    EXPECT_EQ(quartiles({}), (Quartiles{0, 0, 0}));
    auto q = quartiles({1, 2, 3, 4});
    EXPECT_DOUBLE_EQ(q.q1, 1.75);
    EXPECT_DOUBLE_EQ(q.q2, 2.5);
    EXPECT_DOUBLE_EQ(q.q3, 3.25);
}

TEST(Quartiles, MatchesReferenceAndMonotone) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> n(0, 3);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(1 + rng() % 40);
        for (auto& x : v) x = n(rng);
        auto q = quartiles(v);
        EXPECT_NEAR(q.q1, type7(v, 0.25), 1e-12);
        EXPECT_NEAR(q.q2, type7(v, 0.50), 1e-12);
        EXPECT_NEAR(q.q3, type7(v, 0.75), 1e-12);
        EXPECT_LE(q.q1, q.q2);
        EXPECT_LE(q.q2, q.q3);
    }
}

TEST(RedditSignals, ScoreQuartiles) {
    std::vector<CommentRecord> c;
    for (int s = 0; s <= 4; ++s) c.push_back(cm("2017-05-04", "x", s));
    auto m = reddit_score_signal(c, kTwoDays);
    EXPECT_EQ(row_of(m, 0), (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(row_of(m, 1), (std::vector<double>{0, 0, 0}));
    auto single = reddit_score_signal(std::vector<CommentRecord>{cm("2017-05-05", "x", -2)}, kTwoDays);
    EXPECT_EQ(row_of(single, 1), (std::vector<double>{-2, -2, -2}));
}

TEST(Sentiment, LexiconMean) {
    SentimentLexicon lex;
    lex.add("good", 0.7, 0.6);
    lex.add("bad", -0.7, 0.7);
    auto a = score_sentiment("good good", lex);
    EXPECT_DOUBLE_EQ(a.polarity, 0.7);
    EXPECT_DOUBLE_EQ(a.subjectivity, 0.6);
    auto b = score_sentiment("Good, BAD.", lex);
    EXPECT_DOUBLE_EQ(b.polarity, 0.0);
    EXPECT_DOUBLE_EQ(b.subjectivity, 0.65);
    auto c = score_sentiment("nothing here", lex);
    EXPECT_EQ(c.polarity, 0.0);
    EXPECT_EQ(c.subjectivity, 0.0);
}

TEST(Sentiment, LexiconValidation) {
    SentimentLexicon lex;
    EXPECT_THROW(lex.add("x", 1.5, 0.5), DataError);
    EXPECT_THROW(lex.add("x", 0.5, -0.1), DataError);
    std::istringstream bad("# comment\nfoo\t0.1\n");
    EXPECT_THROW(load_lexicon(bad), DataError);
    std::istringstream ok("# comment\n\nFoo\t0.1\t0.2\n");
    auto l = load_lexicon(ok);
    ASSERT_EQ(l.entries.count("foo"), 1u);
    EXPECT_EQ(l.entries["foo"].polarity, 0.1);
    EXPECT_GE(demo_lexicon().entries.size(), 20u);
}

TEST(RedditSignals, SentimentQuartiles) {
    SentimentLexicon lex;
    lex.add("p0", 0.0, 0.5);
    lex.add("p1", 0.1, 0.5);
    lex.add("p2", 0.2, 0.5);
    lex.add("p3", 0.3, 0.5);
    lex.add("p4", 0.4, 0.5);
    lex.add("half", 0.5, 0.5);
    std::vector<CommentRecord> c = {cm("2017-05-04", "p0"), cm("2017-05-04", "p1"), cm("2017-05-04", "p2"),
                                    cm("2017-05-04", "p3"), cm("2017-05-04", "p4"), cm("2017-05-05", "half")};
    auto m = reddit_sentiment_signal(c, lex, DateRange{d("2017-05-04"), d("2017-05-06")});
    EXPECT_EQ(m.cols(), 6u);
    EXPECT_NEAR(m.at(0, 0), 0.1, 1e-15);
    EXPECT_NEAR(m.at(0, 1), 0.2, 1e-15);
    EXPECT_NEAR(m.at(0, 2), 0.3, 1e-15);
    EXPECT_EQ(row_of(m, 1), std::vector<double>(6, 0.5));
    EXPECT_EQ(row_of(m, 2), std::vector<double>(6, 0.0));
}

TEST(Extractors, PermutationInvariant) {
    auto b = generate_synthetic(13, 75);
    const auto cal = b.price.range();
    const auto lex = demo_lexicon();
    const auto vocab = build_vocabulary(b.comments, 50);
    auto all = [&](const std::vector<CommentRecord>& c, const std::vector<EventRecord>& e) {
        return std::vector<SignalMatrix>{github_popularity_signal(e, cal),       github_all_signal(e, cal),
                                         reddit_volume_signal(c, cal),           reddit_language_signal(c, vocab, cal),
                                         reddit_score_signal(c, cal),            reddit_sentiment_signal(c, lex, cal),
                                         reddit_language_signal(c, build_vocabulary(c, 50), cal)};
    };
    const auto base = all(b.comments, b.events);
    std::mt19937_64 rng(17);
    for (int t = 0; t < 3; ++t) {
        auto c = b.comments;
        auto e = b.events;
        std::shuffle(c.begin(), c.end(), rng);
        std::shuffle(e.begin(), e.end(), rng);
        EXPECT_EQ(all(c, e), base);
    }
}

TEST(Assembly, ConcatAndErrors) {
    auto price = column_matrix(kTwoDays, "price_high", std::vector<double>{1, 2});
    auto pop = github_popularity_signal(std::vector<EventRecord>{ev("2017-05-04", EventType::Fork)}, kTwoDays);
    auto x = concat_signals(std::vector<SignalMatrix>{price, pop});
    EXPECT_EQ(x.columns(), (std::vector<std::string>{"price_high", "gh_watch", "gh_fork"}));
    EXPECT_EQ(row_of(x, 0), (std::vector<double>{1, 0, 1}));
    EXPECT_EQ(concat_signals(std::vector<SignalMatrix>{price}), price);
    auto other = column_matrix(DateRange{d("2017-05-05"), d("2017-05-06")}, "z", std::vector<double>{1, 2});
    EXPECT_THROW(concat_signals(std::vector<SignalMatrix>{price, other}), DataError);
    EXPECT_THROW(concat_signals(std::vector<SignalMatrix>{price, price}), DataError);
}

TEST(Assembly, CsvRoundTripIsExact) {
    auto b = generate_synthetic(2, 61);
    auto m = concat_signals(std::vector<SignalMatrix>{column_matrix(b.price.range(), "price_high", b.price.high),
                             reddit_sentiment_signal(b.comments, demo_lexicon(), b.price.range())});
    std::stringstream s;
    write_signal_csv(s, m);
    EXPECT_EQ(read_signal_csv(s), m);
}

TEST(Assembly, ValidateRejectsNonFinite) {
    SignalMatrix m(kTwoDays, {"a"});
    m.at(1, 0) = std::nan("");
    EXPECT_THROW(m.validate(), DataError);
}
