#pragma once

// Loaders for the three local archives: daily price CSV, Reddit comment
// NDJSON (pushshift subset) and GitHub event NDJSON (GH Archive subset).

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace coinseer {

struct PriceSeries {
    std::string coin;
    std::vector<Date> dates;
    std::vector<double> open;
    std::vector<double> high;
    std::vector<double> low;
    std::vector<double> close;

    std::size_t size() const { return dates.size(); }
    bool empty() const { return dates.empty(); }
    DateRange range() const { return {dates.front(), dates.back()}; }

    bool operator==(const PriceSeries&) const = default;
};

struct CommentRecord {
    std::int64_t created_utc = 0;
    std::string subreddit;
    std::string body;
    std::int64_t score = 0;

    Date day() const { return day_of(created_utc); }
    bool operator==(const CommentRecord&) const = default;
};

enum class EventType : std::uint8_t {
    Watch,
    Fork,
    Issues,
    IssueComment,
    Push,
    CommitComment,
    PullRequest,
    PullRequestReviewComment,
};

inline constexpr std::size_t kEventTypeCount = 8;

inline constexpr std::array<EventType, kEventTypeCount> kAllEventTypes = {
    EventType::Watch,         EventType::Fork,        EventType::Issues,
    EventType::IssueComment,  EventType::Push,        EventType::CommitComment,
    EventType::PullRequest,   EventType::PullRequestReviewComment,
};

inline std::string_view event_type_name(EventType t) {
    static constexpr std::array<std::string_view, kEventTypeCount> names = {
        "Watch", "Fork", "Issues", "IssueComment", "Push", "CommitComment", "PullRequest",
        "PullRequestReviewComment"};
    return names[static_cast<std::size_t>(t)];
}

/// Maps a GH Archive `type` string (e.g. "WatchEvent") onto the recognized kinds.
inline std::optional<EventType> parse_event_type(std::string_view archive_type) {
    constexpr std::string_view suffix = "Event";
    if (archive_type.size() <= suffix.size() || !archive_type.ends_with(suffix)) return std::nullopt;
    archive_type.remove_suffix(suffix.size());
    for (auto t : kAllEventTypes)
        if (event_type_name(t) == archive_type) return t;
    return std::nullopt;
}

struct EventRecord {
    std::int64_t created_at = 0; // unix seconds, UTC
    std::string repo;
    EventType event_type = EventType::Watch;

    Date day() const { return day_of(created_at); }
    bool operator==(const EventRecord&) const = default;
};

/// Line accounting for the NDJSON loaders.
struct IngestReport {
    std::size_t lines = 0;
    std::size_t skipped = 0;
    std::size_t kept = 0;
    std::size_t unrecognized = 0;
    std::vector<std::string> warnings;
};

inline constexpr double kMaxSkipFraction = 0.01;

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

inline std::string percent_text(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

inline void enforce_skip_policy(const std::filesystem::path& path, const IngestReport& r) {
    if (r.lines == 0) return;
    double frac = static_cast<double>(r.skipped) / static_cast<double>(r.lines);
    if (frac > kMaxSkipFraction)
        throw DataError(path.string() + ": skip rate " + percent_text(100.0 * frac) + "% exceeds " +
                        percent_text(100.0 * kMaxSkipFraction) + "%");
}

inline std::optional<std::int64_t> json_integer(const nlohmann::json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (std::isfinite(d) && d == std::floor(d)) return static_cast<std::int64_t>(d);
        return std::nullopt;
    }
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        std::int64_t out = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec == std::errc{} && p == s.data() + s.size() && !s.empty()) return out;
    }
    return std::nullopt;
}

} // namespace detail

/// Parses `YYYY-MM-DDTHH:MM:SS[.fff][Z|±HH:MM]` into unix seconds (UTC).
inline std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) return std::nullopt;
    auto day = parse_date(s.substr(0, 10));
    if (!day || s[13] != ':' || s[16] != ':') return std::nullopt;
    auto two = [&](std::size_t pos) -> int {
        if (!std::isdigit(static_cast<unsigned char>(s[pos])) || !std::isdigit(static_cast<unsigned char>(s[pos + 1])))
            return -1;
        return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
    };
    int hh = two(11), mm = two(14), ss = two(17);
    if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    std::int64_t offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            // UTC
        } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
            int oh = two(pos + 1), om = two(pos + 4);
            if (oh < 0 || om < 0) return std::nullopt;
            offset = (s[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
        } else {
            return std::nullopt;
        }
    }
    auto secs = std::chrono::sys_seconds{*day}.time_since_epoch().count();
    return secs + hh * 3600 + mm * 60 + ss - offset;
}

/// Loads a `date,open,high,low,close` CSV. Rows are validated and returned
/// sorted by date; the series may still contain calendar gaps.
inline PriceSeries load_price_series(std::istream& in, const std::string& coin) {
    struct Row {
        Date date;
        double o, h, l, c;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto text = trim(line);
        if (text.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (text != "date,open,high,low,close")
                throw DataError("expected header 'date,open,high,low,close' at line " + std::to_string(lineno));
            continue;
        }
        auto at = " at line " + std::to_string(lineno);
        auto fields = split(text, ',');
        if (fields.size() != 5) throw DataError("malformed row" + at);
        auto date = parse_date(trim(fields[0]));
        std::array<std::optional<double>, 4> v = {parse_double(fields[1]), parse_double(fields[2]),
                                                  parse_double(fields[3]), parse_double(fields[4])};
        if (!date || !v[0] || !v[1] || !v[2] || !v[3]) throw DataError("malformed row" + at);
        Row r{*date, *v[0], *v[1], *v[2], *v[3], lineno};
        for (double x : {r.o, r.h, r.l, r.c})
            if (!std::isfinite(x)) throw DataError("malformed row" + at);
        if (r.o <= 0 || r.h <= 0 || r.l <= 0 || r.c <= 0) throw DataError("non-positive price" + at);
        if (r.o > r.h) throw DataError("open exceeds high" + at);
        if (r.c > r.h) throw DataError("close exceeds high" + at);
        if (r.l > r.o) throw DataError("low exceeds open" + at);
        if (r.l > r.c) throw DataError("low exceeds close" + at);
        rows.push_back(r);
    }
    if (rows.empty()) throw DataError("empty file: no price rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date)
            throw DataError("duplicate date " + format_date(rows[i].date) + " at line " +
                            std::to_string(std::max(rows[i].line, rows[i - 1].line)));
    }

    PriceSeries s;
    s.coin = coin;
    for (const auto& r : rows) {
        s.dates.push_back(r.date);
        s.open.push_back(r.o);
        s.high.push_back(r.h);
        s.low.push_back(r.l);
        s.close.push_back(r.c);
    }
    return s;
}

inline PriceSeries load_price_series(const std::filesystem::path& path, const std::string& coin) {
    auto in = detail::open_input(path);
    try {
        return load_price_series(in, coin);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline void write_price_csv(std::ostream& out, const PriceSeries& s) {
    out << "date,open,high,low,close\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        out << format_date(s.dates[i]) << ',' << format_double(s.open[i]) << ',' << format_double(s.high[i]) << ','
            << format_double(s.low[i]) << ',' << format_double(s.close[i]) << '\n';
}

inline std::vector<CommentRecord> load_reddit_comments(std::istream& in, const std::string& subreddit,
                                                       IngestReport* report = nullptr,
                                                       const std::string& source = "reddit archive") {
    IngestReport r;
    std::vector<CommentRecord> out;
    const auto wanted = to_lower(subreddit);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++r.lines;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++r.skipped;
            continue;
        }
        auto sub = j.find("subreddit");
        auto body = j.find("body");
        auto created = j.find("created_utc");
        auto score = j.find("score");
        if (sub == j.end() || body == j.end() || created == j.end() || score == j.end() || !sub->is_string() ||
            !body->is_string()) {
            ++r.skipped;
            continue;
        }
        auto ts = detail::json_integer(*created);
        auto sc = detail::json_integer(*score);
        if (!ts || !sc || *ts <= 0) {
            ++r.skipped;
            continue;
        }
        if (to_lower(sub->get_ref<const std::string&>()) != wanted) continue;
        out.push_back({*ts, sub->get<std::string>(), body->get<std::string>(), *sc});
    }
    if (r.lines == 0) r.warnings.push_back(source + " is empty");
    detail::enforce_skip_policy(source, r);
    std::sort(out.begin(), out.end(), [](const CommentRecord& a, const CommentRecord& b) {
        return std::tie(a.created_utc, a.subreddit, a.body, a.score) <
               std::tie(b.created_utc, b.subreddit, b.body, b.score);
    });
    r.kept = out.size();
    if (report) *report = std::move(r);
    return out;
}

inline std::vector<CommentRecord> load_reddit_comments(const std::filesystem::path& path,
                                                       const std::string& subreddit,
                                                       IngestReport* report = nullptr) {
    auto in = detail::open_input(path);
    return load_reddit_comments(in, subreddit, report, path.string());
}

inline std::vector<EventRecord> load_github_events(std::istream& in, const std::string& repo,
                                                   IngestReport* report = nullptr,
                                                   const std::string& source = "github archive") {
    IngestReport r;
    std::vector<EventRecord> out;
    const auto wanted = to_lower(repo);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++r.lines;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++r.skipped;
            continue;
        }
        auto type = j.find("type");
        auto created = j.find("created_at");
        auto repo_obj = j.find("repo");
        if (type == j.end() || created == j.end() || repo_obj == j.end() || !type->is_string() ||
            !created->is_string() || !repo_obj->is_object()) {
            ++r.skipped;
            continue;
        }
        auto name = repo_obj->find("name");
        auto ts = parse_iso8601(created->get_ref<const std::string&>());
        if (name == repo_obj->end() || !name->is_string() || !ts || *ts <= 0) {
            ++r.skipped;
            continue;
        }
        auto kind = parse_event_type(type->get_ref<const std::string&>());
        if (!kind) {
            ++r.unrecognized;
            continue;
        }
        if (to_lower(name->get_ref<const std::string&>()) != wanted) continue;
        out.push_back({*ts, name->get<std::string>(), *kind});
    }
    if (r.lines == 0) r.warnings.push_back(source + " is empty");
    detail::enforce_skip_policy(source, r);
    std::sort(out.begin(), out.end(), [](const EventRecord& a, const EventRecord& b) {
        return std::tie(a.created_at, a.event_type, a.repo) < std::tie(b.created_at, b.event_type, b.repo);
    });
    r.kept = out.size();
    if (report) *report = std::move(r);
    return out;
}

inline std::vector<EventRecord> load_github_events(const std::filesystem::path& path, const std::string& repo,
                                                   IngestReport* report = nullptr) {
    auto in = detail::open_input(path);
    return load_github_events(in, repo, report, path.string());
}

struct AlignedPrice {
    PriceSeries series;
    std::size_t filled = 0; // days carried forward from the previous row
};

/// Restricts a series to [start, end], forward-filling any missing day.
inline AlignedPrice align_calendar(const PriceSeries& price, Date start, Date end) {
    if (end < start) throw UsageError("align_calendar: start after end");
    if (price.empty()) throw DataError("align_calendar: empty price series");
    if (start < price.dates.front() || end > price.dates.back())
        throw DataError("requested range " + format_date(start) + ".." + format_date(end) +
                        " extends beyond available data " + format_date(price.dates.front()) + ".." +
                        format_date(price.dates.back()));
    auto it = std::lower_bound(price.dates.begin(), price.dates.end(), start);
    if (*it != start) throw DataError("first requested day " + format_date(start) + " is missing");

    AlignedPrice out;
    out.series.coin = price.coin;
    auto src = static_cast<std::size_t>(it - price.dates.begin());
    for (Date d = start; d <= end; d += std::chrono::days{1}) {
        if (src < price.size() && price.dates[src] == d) {
            out.series.dates.push_back(d);
            out.series.open.push_back(price.open[src]);
            out.series.high.push_back(price.high[src]);
            out.series.low.push_back(price.low[src]);
            out.series.close.push_back(price.close[src]);
            ++src;
        } else {
            out.series.dates.push_back(d);
            out.series.open.push_back(out.series.open.back());
            out.series.high.push_back(out.series.high.back());
            out.series.low.push_back(out.series.low.back());
            out.series.close.push_back(out.series.close.back());
            ++out.filled;
        }
    }
    return out;
}

} // namespace coinseer
