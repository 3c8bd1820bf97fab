#pragma once

// Report files for a set of experiment results: ranking.csv, metrics.csv,
// and per-configuration prediction CSVs and SVG plots. Rendering is fully
// deterministic so reruns produce identical bytes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "harness.hpp"

namespace coinseer::harness {

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw Error("write failed: " + path.string());
}

} // namespace detail

/// Successful results whose (model, signals, k) group covers every coin and
/// j seen anywhere in `results`; partial groups would skew the means.
inline std::vector<ExperimentResult> rankable(const std::vector<ExperimentResult>& results) {
    std::set<std::string> coins;
    std::set<std::size_t> js;
    for (const auto& r : results) {
        coins.insert(r.config.coin);
        js.insert(r.config.j);
    }
    using Key = std::tuple<ModelKind, SignalSet, std::size_t>;
    std::map<Key, std::size_t> ok_count;
    for (const auto& r : results)
        if (r.ok) ++ok_count[{r.config.kind, r.config.signals, r.config.k}];
    std::vector<ExperimentResult> out;
    for (const auto& r : results)
        if (r.ok && ok_count[{r.config.kind, r.config.signals, r.config.k}] == coins.size() * js.size())
            out.push_back(r);
    return out;
}

inline std::string ranking_csv(const std::vector<RankingRow>& rows) {
    std::set<std::size_t> js;
    for (const auto& r : rows)
        for (const auto& [j, v] : r.rmspe_by_j) js.insert(j);
    std::ostringstream out;
    out << "model,signals";
    for (auto j : js) out << ",rmspe_j" << j;
    out << ",mean\n";
    for (const auto& r : rows) {
        out << detail::csv_field(r.model) << ',' << detail::csv_field(r.signals);
        for (auto j : js) out << ',' << format_double(r.rmspe_by_j.at(j));
        out << ',' << format_double(r.mean) << '\n';
    }
    return out.str();
}

/// Definition of the +/- columns, appended as a comment line.
inline constexpr std::string_view kMetricsFooter =
    "# mape_ci: 1.96 * sample sd of per-sample APE / sqrt(n); "
    "rmspe_ci: delta-method 1.96 * sample sd of per-sample SPE / (2 * rmspe * sqrt(n)); percent units\n";

inline std::string metrics_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << "coin,model,signals,k,j,mape,mape_ci,rmspe,rmspe_ci,maxape,rmse,n,error\n";
    for (const auto& r : results) {
        const auto& c = r.config;
        out << detail::csv_field(c.coin) << ',' << model_name(c.kind) << ',' << detail::csv_field(signals_label(c.signals))
            << ',' << (c.kind == ModelKind::LSTM ? std::to_string(c.k) : std::string{}) << ',' << c.j;
        if (r.ok) {
            const auto& m = r.metrics;
            for (double v : {m.mape, m.mape_ci_halfwidth, m.rmspe, m.rmspe_ci_halfwidth, m.maxape, m.rmse})
                out << ',' << format_double(v);
            out << ',' << m.n << ",\n";
        } else {
            out << ",,,,,,,0," << detail::csv_field(r.error) << '\n';
        }
    }
    out << kMetricsFooter;
    return out.str();
}

inline std::string predictions_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "date,true_usd,pred_usd\n";
    for (std::size_t i = 0; i < r.dates.size(); ++i)
        out << format_date(r.dates[i]) << ',' << format_double(r.truth[i]) << ',' << format_double(r.predictions[i]) << '\n';
    return out.str();
}

/// Truth as a solid line, predictions as a dashed line with point markers.
inline std::string plot_svg(const ExperimentResult& r) {
    constexpr double W = 800, H = 420, L = 80, R = 20, T = 40, B = 60;
    const std::size_t n = r.dates.size();
    double lo = 0, hi = 1;
    if (n > 0) {
        lo = std::min(*std::min_element(r.truth.begin(), r.truth.end()),
                      *std::min_element(r.predictions.begin(), r.predictions.end()));
        hi = std::max(*std::max_element(r.truth.begin(), r.truth.end()),
                      *std::max_element(r.predictions.begin(), r.predictions.end()));
    }
    if (!(hi > lo)) {
        lo -= 1;
        hi += 1;
    }
    auto px = [&](std::size_t i) { return L + (n > 1 ? (W - L - R) * static_cast<double>(i) / static_cast<double>(n - 1) : 0.0); };
    auto py = [&](double v) { return T + (H - T - B) * (hi - v) / (hi - lo); };
    auto polyline = [&](const std::vector<double>& ys) {
        std::string pts;
        for (std::size_t i = 0; i < n; ++i) {
            if (i) pts += ' ';
            pts += detail::fixed(px(i)) + "," + detail::fixed(py(ys[i]));
        }
        return pts;
    };

    const auto& c = r.config;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << c.coin << ": "
      << model_name(c.kind) << ' ' << signals_label(c.signals) << ", j=" << c.j << "</text>\n";
    // axes
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">target date (" << c.coin
      << ", j=" << c.j << ")</text>\n";
    s << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << c.coin << " price high (USD)</text>\n";
    for (int t = 0; t <= 4; ++t) {
        double v = lo + (hi - lo) * t / 4.0;
        s << "<text x=\"" << L - 6 << "\" y=\"" << detail::fixed(py(v) + 4) << "\" text-anchor=\"end\">"
          << detail::fixed(v) << "</text>\n";
    }
    if (n > 0) {
        s << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"start\">" << format_date(r.dates.front())
          << "</text>\n";
        s << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << format_date(r.dates.back())
          << "</text>\n";
        s << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"" << polyline(r.truth)
          << "\"/>\n";
        s << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1\" stroke-dasharray=\"4 3\" points=\""
          << polyline(r.predictions) << "\"/>\n";
        s << "<g fill=\"#c0392b\">\n";
        for (std::size_t i = 0; i < n; ++i)
            s << "<circle cx=\"" << detail::fixed(px(i)) << "\" cy=\"" << detail::fixed(py(r.predictions[i]))
              << "\" r=\"2\"/>\n";
        s << "</g>\n";
    }
    s << "<g font-size=\"11\"><line x1=\"" << W - 190 << "\" y1=\"" << T + 6 << "\" x2=\"" << W - 160 << "\" y2=\""
      << T + 6 << "\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/><text x=\"" << W - 155 << "\" y=\"" << T + 10
      << "\">true</text>";
    s << "<line x1=\"" << W - 110 << "\" y1=\"" << T + 6 << "\" x2=\"" << W - 80 << "\" y2=\"" << T + 6
      << "\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/><circle cx=\"" << W - 95 << "\" cy=\"" << T + 6
      << "\" r=\"2\" fill=\"#c0392b\"/><text x=\"" << W - 75 << "\" y=\"" << T + 10 << "\">predicted</text></g>\n";
    s << "</svg>\n";
    return s.str();
}

/// Writes ranking.csv, metrics.csv and, for each successful result,
/// predictions_<id>.csv and plot_<id>.svg. Returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const std::vector<ExperimentResult>& results,
                                                      const std::filesystem::path& out_dir) {
    if (results.empty()) throw UsageError("nothing to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& content) {
        detail::write_file(out_dir / name, content);
        written.push_back(out_dir / name);
    };
    put("ranking.csv", ranking_csv(rank_models(rankable(results))));
    put("metrics.csv", metrics_csv(results));
    for (const auto& r : results) {
        if (!r.ok) continue;
        put("predictions_" + r.config.id() + ".csv", predictions_csv(r));
        put("plot_" + r.config.id() + ".svg", plot_svg(r));
    }
    return written;
}

// ---------------------------------------------------------------- results.json

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json fams = nlohmann::ordered_json::array();
    for (auto f : c.signals) fams.push_back(family_name(f));
    return {{"id", c.id()}, {"coin", c.coin}, {"model", model_name(c.kind)}, {"signals", fams}, {"k", c.k}, {"j", c.j}};
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.coin = j.at("coin").get<std::string>();
    auto model = j.at("model").get<std::string>();
    if (model == "ARIMA") c.kind = ModelKind::ARIMA;
    else if (model == "LSTM") c.kind = ModelKind::LSTM;
    else throw DataError("unknown model '" + model + "'");
    for (const auto& f : j.at("signals")) {
        auto fam = parse_family(f.get<std::string>());
        if (!fam) throw DataError("unknown signal family '" + f.get<std::string>() + "'");
        c.signals.push_back(*fam);
    }
    c.signals = canonical(c.signals);
    c.k = j.at("k").get<std::size_t>();
    c.j = j.at("j").get<std::size_t>();
    return c;
}

inline nlohmann::ordered_json result_to_json(const ExperimentResult& r) {
    nlohmann::ordered_json j;
    j["config"] = config_to_json(r.config);
    j["seed"] = r.seed;
    j["ok"] = r.ok;
    if (!r.ok) {
        j["error"] = r.error;
        return j;
    }
    const auto& m = r.metrics;
    j["metrics"] = {{"n", m.n},         {"rmse", m.rmse},   {"mape", m.mape}, {"mape_ci", m.mape_ci_halfwidth},
                    {"mspe", m.mspe},   {"rmspe", m.rmspe}, {"rmspe_ci", m.rmspe_ci_halfwidth}, {"maxape", m.maxape}};
    if (r.config.kind == ModelKind::LSTM)
        j["training"] = {{"epochs_run", r.epochs_run}, {"best_epoch", r.best_epoch}, {"best_val_mse", r.best_val_mse}};
    else
        j["arima_p"] = r.arima_p;
    std::vector<std::string> dates;
    for (auto d : r.dates) dates.push_back(format_date(d));
    j["dates"] = dates;
    j["true_usd"] = r.truth;
    j["pred_usd"] = r.predictions;
    return j;
}

inline ExperimentResult result_from_json(const nlohmann::json& j) {
    ExperimentResult r;
    r.config = config_from_json(j.at("config"));
    r.seed = j.at("seed").get<std::uint64_t>();
    r.ok = j.at("ok").get<bool>();
    if (!r.ok) {
        r.error = j.value("error", std::string{});
        return r;
    }
    const auto& m = j.at("metrics");
    r.metrics = {m.at("n").get<std::size_t>(),     m.at("rmse").get<double>(),     m.at("mape").get<double>(),
                 m.at("mape_ci").get<double>(),     m.at("mspe").get<double>(),     m.at("rmspe").get<double>(),
                 m.at("rmspe_ci").get<double>(),    m.at("maxape").get<double>()};
    if (j.contains("training")) {
        const auto& t = j["training"];
        r.epochs_run = t.at("epochs_run").get<std::size_t>();
        r.best_epoch = t.at("best_epoch").get<std::size_t>();
        r.best_val_mse = t.at("best_val_mse").get<double>();
    }
    r.arima_p = j.value("arima_p", std::size_t{0});
    for (const auto& d : j.at("dates")) r.dates.push_back(parse_date_or_throw(d.get<std::string>()));
    r.truth = j.at("true_usd").get<std::vector<double>>();
    r.predictions = j.at("pred_usd").get<std::vector<double>>();
    if (r.truth.size() != r.dates.size() || r.predictions.size() != r.dates.size())
        throw DataError("results: series lengths differ for " + r.config.id());
    return r;
}

inline std::string results_json(const std::vector<ExperimentResult>& results) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : results) arr.push_back(result_to_json(r));
    return arr.dump(1) + "\n";
}

inline std::vector<ExperimentResult> parse_results_json(std::istream& in) {
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) throw DataError("results file is not a JSON array");
    std::vector<ExperimentResult> out;
    try {
        for (const auto& j : doc) out.push_back(result_from_json(j));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed results file: ") + e.what());
    }
    return out;
}

} // namespace coinseer::harness
