#pragma once

// Daily social-signal extraction. Every extractor produces a SignalMatrix
// over a fixed calendar; days without activity are zero rows.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"

namespace coinseer {

/// Dense date x feature table, stored row-major.
class SignalMatrix {
public:
    SignalMatrix() = default;
    SignalMatrix(DateRange calendar, std::vector<std::string> columns)
        : calendar_(calendar), columns_(std::move(columns)), values_(calendar_.size() * columns_.size(), 0.0) {}

    const DateRange& calendar() const { return calendar_; }
    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return calendar_.size(); }
    std::size_t cols() const { return columns_.size(); }

    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }
    std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows());
        for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
        return out;
    }
    std::optional<std::size_t> column_index(std::string_view name) const {
        auto it = std::find(columns_.begin(), columns_.end(), name);
        if (it == columns_.end()) return std::nullopt;
        return static_cast<std::size_t>(it - columns_.begin());
    }

    /// Throws DataError unless every cell is finite and column names are unique.
    void validate() const {
        std::unordered_set<std::string> seen;
        for (const auto& c : columns_)
            if (!seen.insert(c).second) throw DataError("duplicate column name '" + c + "'");
        for (double v : values_)
            if (!std::isfinite(v)) throw DataError("signal matrix contains a non-finite value");
    }

    bool operator==(const SignalMatrix&) const = default;

private:
    DateRange calendar_{};
    std::vector<std::string> columns_;
    std::vector<double> values_;
};

enum class SignalFamily : std::uint8_t { GH_Pop, GH_All, R_Vol, R_Lang, R_Score, R_Sent };

inline constexpr std::array<SignalFamily, 6> kAllFamilies = {SignalFamily::GH_Pop, SignalFamily::GH_All,
                                                             SignalFamily::R_Vol,  SignalFamily::R_Lang,
                                                             SignalFamily::R_Score, SignalFamily::R_Sent};

inline std::string_view family_name(SignalFamily f) {
    static constexpr std::array<std::string_view, 6> names = {"GH_Pop", "GH_All", "R_Vol", "R_Lang", "R_Score", "R_Sent"};
    return names[static_cast<std::size_t>(f)];
}

inline std::optional<SignalFamily> parse_family(std::string_view name) {
    auto lower = to_lower(name);
    for (auto f : kAllFamilies)
        if (to_lower(family_name(f)) == lower) return f;
    return std::nullopt;
}

// ---------------------------------------------------------------- GitHub

inline SignalMatrix github_all_signal(std::span<const EventRecord> events, DateRange calendar) {
    std::vector<std::string> cols;
    for (auto t : kAllEventTypes) cols.push_back("gh_" + to_lower(event_type_name(t)));
    SignalMatrix m(calendar, std::move(cols));
    for (const auto& e : events) {
        if (auto r = calendar.index_of(e.day())) m.at(*r, static_cast<std::size_t>(e.event_type)) += 1.0;
    }
    return m;
}

inline SignalMatrix github_popularity_signal(std::span<const EventRecord> events, DateRange calendar) {
    SignalMatrix m(calendar, {"gh_watch", "gh_fork"});
    for (const auto& e : events) {
        auto r = calendar.index_of(e.day());
        if (!r) continue;
        if (e.event_type == EventType::Watch) m.at(*r, 0) += 1.0;
        if (e.event_type == EventType::Fork) m.at(*r, 1) += 1.0;
    }
    return m;
}

// ---------------------------------------------------------------- Reddit

inline SignalMatrix reddit_volume_signal(std::span<const CommentRecord> comments, DateRange calendar) {
    SignalMatrix m(calendar, {"r_vol"});
    for (const auto& c : comments)
        if (auto r = calendar.index_of(c.day())) m.at(*r, 0) += 1.0;
    return m;
}

/// Lowercases and splits on every character outside [a-z0-9].
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x80 && std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

struct Vocabulary {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, std::size_t> index;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

inline constexpr std::size_t kDefaultVocabularySize = 10000;

/// Most frequent unigrams: descending corpus count, ties lexicographic.
inline Vocabulary build_vocabulary(std::span<const CommentRecord> comments,
                                   std::size_t size = kDefaultVocabularySize) {
    if (size == 0) throw UsageError("vocabulary size must be at least 1");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& c : comments)
        for (auto& t : tokenize(c.body)) ++counts[std::move(t)];
    if (counts.empty()) throw DataError("cannot build a vocabulary from an empty corpus");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    auto order = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
    auto keep = std::min(size, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), order);

    Vocabulary v;
    for (std::size_t i = 0; i < keep; ++i) {
        v.index.emplace(ranked[i].first, i);
        v.tokens.push_back(std::move(ranked[i].first));
    }
    return v;
}

/// Per-day relative frequency of each vocabulary token among that day's
/// in-vocabulary tokens.
inline SignalMatrix reddit_language_signal(std::span<const CommentRecord> comments, const Vocabulary& vocab,
                                           DateRange calendar) {
    if (vocab.empty()) throw UsageError("reddit_language_signal needs a nonempty vocabulary");
    std::vector<std::string> cols;
    cols.reserve(vocab.size());
    for (const auto& t : vocab.tokens) cols.push_back("r_lang_" + t);
    SignalMatrix m(calendar, std::move(cols));
    std::vector<double> totals(calendar.size(), 0.0);
    for (const auto& c : comments) {
        auto r = calendar.index_of(c.day());
        if (!r) continue;
        for (const auto& t : tokenize(c.body)) {
            auto it = vocab.index.find(t);
            if (it == vocab.index.end()) continue;
            m.at(*r, it->second) += 1.0;
            totals[*r] += 1.0;
        }
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (totals[r] == 0) continue;
        for (auto& v : m.row(r)) v /= totals[r];
    }
    return m;
}

struct Quartiles {
    double q1 = 0, q2 = 0, q3 = 0;
    bool operator==(const Quartiles&) const = default;
};

/// Linear-interpolation quantile at p of sorted data (rank p * (n - 1)).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) return 0.0;
    double rank = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(rank));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    double frac = rank - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline Quartiles quartiles(std::vector<double> values) {
    if (values.empty()) return {};
    std::sort(values.begin(), values.end());
    return {quantile_sorted(values, 0.25), quantile_sorted(values, 0.5), quantile_sorted(values, 0.75)};
}

namespace detail {

// Groups one value per comment into calendar days.
template <typename F>
std::vector<std::vector<double>> per_day(std::span<const CommentRecord> comments, DateRange calendar, F value) {
    std::vector<std::vector<double>> days(calendar.size());
    for (const auto& c : comments)
        if (auto r = calendar.index_of(c.day())) days[*r].push_back(value(c));
    return days;
}

} // namespace detail

inline SignalMatrix reddit_score_signal(std::span<const CommentRecord> comments, DateRange calendar) {
    SignalMatrix m(calendar, {"r_score_q1", "r_score_q2", "r_score_q3"});
    auto days = detail::per_day(comments, calendar, [](const CommentRecord& c) { return static_cast<double>(c.score); });
    for (std::size_t r = 0; r < days.size(); ++r) {
        auto q = quartiles(std::move(days[r]));
        m.at(r, 0) = q.q1;
        m.at(r, 1) = q.q2;
        m.at(r, 2) = q.q3;
    }
    return m;
}

// ---------------------------------------------------------------- Sentiment

struct LexiconEntry {
    double polarity = 0;
    double subjectivity = 0;
};

struct SentimentLexicon {
    std::unordered_map<std::string, LexiconEntry> entries;

    void add(std::string token, double polarity, double subjectivity) {
        if (!(polarity >= -1.0 && polarity <= 1.0)) throw DataError("lexicon polarity outside [-1, 1] for '" + token + "'");
        if (!(subjectivity >= 0.0 && subjectivity <= 1.0))
            throw DataError("lexicon subjectivity outside [0, 1] for '" + token + "'");
        entries[std::move(token)] = {polarity, subjectivity};
    }
};

/// Reads `token<TAB>polarity<TAB>subjectivity` lines; `#` starts a comment line.
inline SentimentLexicon load_lexicon(std::istream& in) {
    SentimentLexicon lex;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        auto f = split(text, '\t');
        auto at = " at lexicon line " + std::to_string(lineno);
        if (f.size() != 3) throw DataError("expected token<TAB>polarity<TAB>subjectivity" + at);
        auto pol = parse_double(f[1]);
        auto subj = parse_double(f[2]);
        if (!pol || !subj) throw DataError("malformed lexicon entry" + at);
        lex.add(to_lower(trim(f[0])), *pol, *subj);
    }
    return lex;
}

inline SentimentLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon " + path.string());
    return load_lexicon(in);
}

/// Small bundled lexicon used by the synthetic dataset and as a default.
inline std::string_view demo_lexicon_text() {
    return "# token\tpolarity\tsubjectivity\n"
           "good\t0.7\t0.6\n"
           "great\t0.8\t0.75\n"
           "amazing\t0.6\t0.9\n"
           "happy\t0.8\t1.0\n"
           "bullish\t0.5\t0.6\n"
           "moon\t0.4\t0.5\n"
           "profit\t0.3\t0.4\n"
           "win\t0.8\t0.4\n"
           "strong\t0.43\t0.73\n"
           "love\t0.5\t0.6\n"
           "bad\t-0.7\t0.67\n"
           "terrible\t-1.0\t1.0\n"
           "crash\t-0.5\t0.6\n"
           "scam\t-0.6\t0.8\n"
           "fear\t-0.4\t0.7\n"
           "bearish\t-0.5\t0.6\n"
           "loss\t-0.3\t0.4\n"
           "dump\t-0.4\t0.5\n"
           "weak\t-0.38\t0.63\n"
           "worried\t-0.3\t0.8\n"
           "new\t0.14\t0.45\n"
           "big\t0.0\t0.1\n"
           "real\t0.2\t0.3\n"
           "long\t-0.05\t0.4\n";
}

inline SentimentLexicon demo_lexicon() {
    std::istringstream in{std::string(demo_lexicon_text())};
    return load_lexicon(in);
}

struct Sentiment {
    double polarity = 0;
    double subjectivity = 0;
};

/// Mean polarity and subjectivity over the text's lexicon tokens.
inline Sentiment score_sentiment(std::string_view text, const SentimentLexicon& lexicon) {
    double pol = 0, subj = 0;
    std::size_t n = 0;
    for (const auto& t : tokenize(text)) {
        auto it = lexicon.entries.find(t);
        if (it == lexicon.entries.end()) continue;
        pol += it->second.polarity;
        subj += it->second.subjectivity;
        ++n;
    }
    if (n == 0) return {};
    return {pol / static_cast<double>(n), subj / static_cast<double>(n)};
}

inline SignalMatrix reddit_sentiment_signal(std::span<const CommentRecord> comments, const SentimentLexicon& lexicon,
                                            DateRange calendar) {
    SignalMatrix m(calendar, {"r_pol_q1", "r_pol_q2", "r_pol_q3", "r_subj_q1", "r_subj_q2", "r_subj_q3"});
    std::vector<std::vector<double>> pol(calendar.size()), subj(calendar.size());
    for (const auto& c : comments) {
        auto r = calendar.index_of(c.day());
        if (!r) continue;
        auto s = score_sentiment(c.body, lexicon);
        pol[*r].push_back(s.polarity);
        subj[*r].push_back(s.subjectivity);
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto p = quartiles(std::move(pol[r]));
        auto s = quartiles(std::move(subj[r]));
        auto row = m.row(r);
        row[0] = p.q1, row[1] = p.q2, row[2] = p.q3;
        row[3] = s.q1, row[4] = s.q2, row[5] = s.q3;
    }
    return m;
}

// ---------------------------------------------------------------- assembly

/// Single-column matrix, e.g. the price high.
inline SignalMatrix column_matrix(DateRange calendar, std::string name, std::span<const double> values) {
    if (values.size() != calendar.size()) throw UsageError("column length does not match calendar");
    SignalMatrix m(calendar, {std::move(name)});
    for (std::size_t r = 0; r < values.size(); ++r) m.at(r, 0) = values[r];
    return m;
}

inline SignalMatrix concat_signals(std::span<const SignalMatrix> parts) {
    if (parts.empty()) throw UsageError("concat_signals needs at least one part");
    std::vector<std::string> cols;
    std::unordered_set<std::string> seen;
    for (const auto& p : parts) {
        if (!(p.calendar() == parts.front().calendar())) throw DataError("concat_signals: calendar mismatch");
        for (const auto& c : p.columns()) {
            if (!seen.insert(c).second) throw DataError("concat_signals: duplicate column '" + c + "'");
            cols.push_back(c);
        }
    }
    SignalMatrix out(parts.front().calendar(), std::move(cols));
    for (std::size_t r = 0; r < out.rows(); ++r) {
        std::size_t c = 0;
        for (const auto& p : parts)
            for (double v : p.row(r)) out.at(r, c++) = v;
    }
    return out;
}

inline SignalMatrix concat_signals(std::initializer_list<SignalMatrix> parts) {
    return concat_signals(std::span<const SignalMatrix>(parts.begin(), parts.size()));
}

inline void write_signal_csv(std::ostream& out, const SignalMatrix& m) {
    out << "date";
    for (const auto& c : m.columns()) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << format_date(m.calendar().at(r));
        for (double v : m.row(r)) out << ',' << format_double(v);
        out << '\n';
    }
}

inline SignalMatrix read_signal_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("signal CSV is empty");
    auto header = split(trim(line), ',');
    if (header.empty() || header[0] != "date") throw DataError("signal CSV must start with a 'date' column");
    std::vector<std::string> cols(header.begin() + 1, header.end());
    std::vector<Date> dates;
    std::vector<double> values;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = trim(line);
        if (text.empty()) continue;
        auto f = split(text, ',');
        auto at = " at line " + std::to_string(lineno);
        if (f.size() != header.size()) throw DataError("malformed row" + at);
        auto d = parse_date(f[0]);
        if (!d) throw DataError("malformed date" + at);
        if (!dates.empty() && *d != dates.back() + std::chrono::days{1}) throw DataError("non-consecutive date" + at);
        dates.push_back(*d);
        for (std::size_t c = 1; c < f.size(); ++c) {
            auto v = parse_double(f[c]);
            if (!v) throw DataError("malformed value" + at);
            values.push_back(*v);
        }
    }
    if (dates.empty()) throw DataError("signal CSV has no rows");
    SignalMatrix m({dates.front(), dates.back()}, std::move(cols));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) m.at(r, c) = values[r * m.cols() + c];
    m.validate();
    return m;
}

} // namespace coinseer
