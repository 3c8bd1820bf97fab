#pragma once

// Command-line composition root. `run` parses arguments, builds a read-only
// data bundle from a JSON config (or the synthetic generator), and
// dispatches to the subcommands. Exit codes: 0 success, 1 experiment
// failures, 2 usage or input errors.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "core.hpp"
#include "harness.hpp"
#include "ingest.hpp"
#include "lstm.hpp"
#include "report.hpp"
#include "signals.hpp"
#include "stats.hpp"
#include "synthetic.hpp"

namespace coinseer::cli {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 7;

enum ExitCode : int { kOk = 0, kExperimentFailures = 1, kUsage = 2 };

/// "3", "1..3" or "1,2,5"; every value must be positive.
inline std::vector<std::size_t> parse_range(std::string_view text, std::string_view what) {
    auto bad = [&] { return UsageError("invalid " + std::string(what) + " '" + std::string(text) + "'"); };
    auto number = [&](std::string_view s) {
        s = trim(s);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) throw bad();
        if (v < 1) throw UsageError(std::string(what) + " must be at least 1");
        return v;
    };
    std::vector<std::size_t> out;
    if (auto dots = text.find(".."); dots != std::string_view::npos) {
        auto lo = number(text.substr(0, dots)), hi = number(text.substr(dots + 2));
        if (lo > hi) throw bad();
        for (auto v = lo; v <= hi; ++v) out.push_back(v);
        return out;
    }
    for (auto part : split(text, ',')) out.push_back(number(part));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline harness::SignalSet parse_family_list(std::string_view text) {
    harness::SignalSet out;
    if (trim(text).empty() || trim(text) == "none") return out;
    for (auto part : split(text, ',')) {
        auto f = parse_family(trim(part));
        if (!f) throw UsageError("unknown signal family '" + std::string(trim(part)) + "'");
        out.push_back(*f);
    }
    return harness::canonical(out);
}

/// "paper" for the reported combinations, "all" for the powerset of all
/// six families, otherwise the powerset of a comma-separated family list.
inline std::vector<harness::SignalSet> parse_signal_sets(std::string_view text) {
    if (text == "paper") return harness::paper_signal_sets();
    if (text == "all") return harness::powerset({kAllFamilies.begin(), kAllFamilies.end()});
    return harness::powerset(parse_family_list(text));
}

// ---------------------------------------------------------------- config

struct CoinSource {
    std::string name;
    std::filesystem::path prices;
    std::filesystem::path reddit; // optional
    std::string subreddit;
    std::filesystem::path github; // optional
    std::string repo;
};

struct RunConfig {
    std::filesystem::path config_path;
    std::vector<CoinSource> coins;
    std::optional<Date> start, end;
    std::string signals = "paper";
    std::string k = "1";
    std::string j = "1..3";
    std::optional<std::uint64_t> seed;
    std::filesystem::path lexicon;
    std::size_t vocab_size = kDefaultVocabularySize;
    harness::ProtocolOptions protocol;
    std::filesystem::path output = "out";
    bool synthetic = false;
    std::size_t synthetic_days = 600;
};

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

/// Reads the JSON config; relative paths resolve against its directory.
inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw UsageError("config " + path.string() + " is not a JSON object");
    RunConfig c;
    c.config_path = path;
    const auto base = path.parent_path();
    try {
        for (const auto& e : doc.value("coins", nlohmann::json::array())) {
            CoinSource s;
            s.name = e.at("name").get<std::string>();
            s.prices = resolve(base, e.at("prices").get<std::string>());
            s.reddit = resolve(base, e.value("reddit", std::string{}));
            s.subreddit = e.value("subreddit", s.name);
            s.github = resolve(base, e.value("github", std::string{}));
            s.repo = e.value("repo", std::string{});
            c.coins.push_back(std::move(s));
        }
        if (doc.contains("start")) c.start = parse_date_or_throw(doc["start"].get<std::string>());
        if (doc.contains("end")) c.end = parse_date_or_throw(doc["end"].get<std::string>());
        auto as_range = [](const nlohmann::json& v) {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_unsigned()) return std::to_string(v.get<std::size_t>());
            std::string s;
            for (const auto& x : v) s += (s.empty() ? "" : ",") + std::to_string(x.get<std::size_t>());
            return s;
        };
        if (doc.contains("k")) c.k = as_range(doc["k"]);
        if (doc.contains("j")) c.j = as_range(doc["j"]);
        if (doc.contains("signals")) {
            const auto& s = doc["signals"];
            if (s.is_string()) {
                c.signals = s.get<std::string>();
            } else {
                c.signals.clear();
                for (const auto& f : s) c.signals += (c.signals.empty() ? "" : ",") + f.get<std::string>();
                if (c.signals.empty()) c.signals = "none";
            }
        }
        if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
        c.lexicon = resolve(base, doc.value("lexicon", std::string{}));
        c.vocab_size = doc.value("vocab_size", c.vocab_size);
        if (doc.contains("output")) c.output = resolve(base, doc["output"].get<std::string>());
        auto& p = c.protocol;
        p.train_only_normalization = doc.value("train_only_normalization", p.train_only_normalization);
        p.arima_refit = doc.value("arima_refit", p.arima_refit);
        p.arima_lag_cap = doc.value("arima_lag_cap", p.arima_lag_cap);
        if (doc.contains("train")) {
            const auto& t = doc["train"];
            p.train.batch_size = t.value("batch_size", p.train.batch_size);
            p.train.learning_rate = t.value("learning_rate", p.train.learning_rate);
            p.train.max_epochs = t.value("max_epochs", p.train.max_epochs);
            p.train.patience = t.value("patience", p.train.patience);
            p.train.clip_norm = t.value("clip_norm", p.train.clip_norm);
            p.layer_sizes = t.value("layers", p.layer_sizes);
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config " + path.string() + ": " + e.what());
    }
    return c;
}

// ---------------------------------------------------------------- data

struct LoadedCoin {
    CoinSource source;
    PriceSeries raw_price;
    std::vector<CommentRecord> comments;
    std::vector<EventRecord> events;
};

inline std::vector<LoadedCoin> load_sources(const RunConfig& cfg, std::ostream& log) {
    if (cfg.synthetic) {
        auto b = generate_synthetic(cfg.seed.value_or(kDefaultSeed), cfg.synthetic_days);
        CoinSource s{b.price.coin, {}, {}, b.subreddit, {}, b.repo};
        return {{s, std::move(b.price), std::move(b.comments), std::move(b.events)}};
    }
    if (cfg.coins.empty()) throw UsageError("no coins configured (use --config or --synthetic)");
    std::vector<LoadedCoin> out;
    for (const auto& s : cfg.coins) {
        LoadedCoin c{s, load_price_series(s.prices, s.name), {}, {}};
        if (!s.reddit.empty()) {
            IngestReport r;
            c.comments = load_reddit_comments(s.reddit, s.subreddit, &r);
            for (const auto& w : r.warnings) log << "warning: " << w << '\n';
            log << s.name << ": " << r.kept << " comments kept, " << r.skipped << " lines skipped\n";
        }
        if (!s.github.empty()) {
            IngestReport r;
            c.events = load_github_events(s.github, s.repo, &r);
            for (const auto& w : r.warnings) log << "warning: " << w << '\n';
            log << s.name << ": " << r.kept << " events kept, " << r.skipped << " lines skipped, " << r.unrecognized
                << " unrecognized types\n";
        }
        out.push_back(std::move(c));
    }
    return out;
}

inline SentimentLexicon lexicon_for(const RunConfig& cfg) {
    return cfg.lexicon.empty() ? demo_lexicon() : load_lexicon(cfg.lexicon);
}

inline harness::DataBundle build_bundle(const RunConfig& cfg, const std::vector<LoadedCoin>& sources,
                                        std::ostream& log) {
    harness::DataBundle bundle;
    const auto lexicon = lexicon_for(cfg);
    for (const auto& s : sources) {
        auto aligned = align_calendar(s.raw_price, cfg.start.value_or(s.raw_price.dates.front()),
                                      cfg.end.value_or(s.raw_price.dates.back()));
        if (aligned.filled > 0) log << s.source.name << ": forward-filled " << aligned.filled << " missing days\n";
        auto coin = harness::build_coin_data(s.source.name, std::move(aligned.series), s.comments, s.events, lexicon,
                                             cfg.vocab_size);
        coin.filled_days = aligned.filled;
        bundle.coins.push_back(std::move(coin));
    }
    return bundle;
}

// ---------------------------------------------------------------- manifest

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const RunConfig& cfg) {
    if (flag) return *flag;
    if (cfg.seed) return *cfg.seed;
    if (const char* env = std::getenv("COINSEER_SEED"); env && *env) {
        std::uint64_t v = 0;
        std::string_view s(env);
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size()) throw UsageError("COINSEER_SEED is not an integer");
        return v;
    }
    return kDefaultSeed;
}

/// Everything needed to replay the run; contains no timestamps so reruns
/// produce identical bytes.
inline void write_manifest(const std::filesystem::path& dir, std::string_view command, const RunConfig& cfg,
                           const std::vector<std::string>& args) {
    nlohmann::ordered_json m;
    m["tool"] = "coinseer";
    m["version"] = kVersion;
    m["command"] = command;
    m["args"] = args;
    m["config"] = cfg.config_path.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(cfg.config_path.string());
    m["master_seed"] = cfg.seed.value_or(kDefaultSeed);
    m["output_dir"] = dir.string();
    if (cfg.synthetic) {
        m["data"] = {{"synthetic", true}, {"days", cfg.synthetic_days}};
    } else {
        nlohmann::ordered_json coins = nlohmann::ordered_json::object();
        for (const auto& c : cfg.coins)
            coins[c.name] = {{"prices", c.prices.string()}, {"reddit", c.reddit.string()}, {"subreddit", c.subreddit},
                             {"github", c.github.string()}, {"repo", c.repo}};
        m["data"] = coins;
    }
    const auto& p = cfg.protocol;
    m["protocol"] = {{"k", cfg.k},
                     {"j", cfg.j},
                     {"signals", cfg.signals},
                     {"k_max", p.k_max},
                     {"j_max", p.j_max},
                     {"train_fraction", p.train_fraction},
                     {"train_only_normalization", p.train_only_normalization},
                     {"layers", p.layer_sizes},
                     {"batch_size", p.train.batch_size},
                     {"learning_rate", p.train.learning_rate},
                     {"max_epochs", p.train.max_epochs},
                     {"patience", p.train.patience},
                     {"clip_norm", p.train.clip_norm},
                     {"arima_lag_cap", p.arima_lag_cap},
                     {"arima_refit", p.arima_refit}};
    std::filesystem::create_directories(dir);
    harness::detail::write_file(dir / "manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- commands

struct CommonFlags {
    std::string config;
    bool synthetic = false;
    std::optional<std::size_t> days;
    std::optional<std::uint64_t> seed;
    std::string out;
};

inline void add_common(CLI::App* cmd, CommonFlags& f, bool with_out = true) {
    cmd->add_option("--config", f.config, "JSON run configuration");
    cmd->add_flag("--synthetic", f.synthetic, "use the built-in synthetic dataset");
    cmd->add_option("--days", f.days, "synthetic dataset length in days")->check(CLI::Range(60, 100000));
    cmd->add_option("--seed", f.seed, "master seed (default: config, then COINSEER_SEED, then 7)");
    if (with_out) cmd->add_option("--out", f.out, "output directory");
}

inline RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.synthetic) cfg.synthetic = true;
    if (f.days) {
        if (!cfg.synthetic) throw UsageError("--days requires --synthetic");
        cfg.synthetic_days = *f.days;
    }
    if (!cfg.synthetic && f.config.empty()) throw UsageError("one of --config or --synthetic is required");
    cfg.seed = resolve_seed(f.seed, cfg);
    cfg.protocol.master_seed = *cfg.seed;
    if (!f.out.empty()) cfg.output = f.out;
    return cfg;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    harness::detail::write_file(path, text);
}

inline int cmd_ingest(const RunConfig& cfg, const std::vector<std::string>& args, std::ostream& out,
                      std::ostream& log) {
    auto sources = load_sources(cfg, log);
    std::filesystem::create_directories(cfg.output);
    for (const auto& s : sources) {
        auto aligned = align_calendar(s.raw_price, cfg.start.value_or(s.raw_price.dates.front()),
                                      cfg.end.value_or(s.raw_price.dates.back()));
        std::ostringstream csv;
        write_price_csv(csv, aligned.series);
        write_text(cfg.output / (s.source.name + "_prices.csv"), csv.str());
        out << s.source.name << ": " << aligned.series.size() << " days " << format_date(aligned.series.dates.front())
            << ".." << format_date(aligned.series.dates.back()) << ", " << aligned.filled << " filled, "
            << s.comments.size() << " comments, " << s.events.size() << " events\n";
    }
    write_manifest(cfg.output, "ingest", cfg, args);
    return kOk;
}

inline int cmd_signals(const RunConfig& cfg, const harness::SignalSet& families, const std::vector<std::string>& args,
                       std::ostream& out, std::ostream& log) {
    const auto bundle = build_bundle(cfg, load_sources(cfg, log), log);
    std::filesystem::create_directories(cfg.output);
    for (const auto& coin : bundle.coins) {
        for (auto f : families) {
            std::ostringstream csv;
            write_signal_csv(csv, coin.family(f));
            auto name = coin.name + "_" + std::string(family_name(f)) + ".csv";
            write_text(cfg.output / name, csv.str());
            out << "wrote " << (cfg.output / name).string() << '\n';
        }
    }
    write_manifest(cfg.output, "signals", cfg, args);
    return kOk;
}

inline int cmd_correlate(const RunConfig& cfg, const harness::SignalSet& families,
                         const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    const auto bundle = build_bundle(cfg, load_sources(cfg, log), log);
    std::filesystem::create_directories(cfg.output);
    for (const auto& coin : bundle.coins) {
        std::vector<SignalMatrix> parts;
        for (auto f : families) parts.push_back(coin.family(f));
        std::vector<stats::CorrelationReport> rows;
        if (parts.empty()) {
            rows.push_back(stats::correlate_column("price_high", coin.price.high, coin.price.high));
        } else {
            rows = stats::correlation_table(concat_signals(parts), coin.price);
        }
        std::ostringstream csv;
        stats::write_correlation_csv(csv, rows);
        auto name = coin.name + "_correlation.csv";
        write_text(cfg.output / name, csv.str());
        out << "wrote " << (cfg.output / name).string() << '\n';
    }
    write_manifest(cfg.output, "correlate", cfg, args);
    return kOk;
}

inline int cmd_train(const RunConfig& cfg, const std::string& coin_name, const harness::SignalSet& signals,
                     std::size_t k, std::size_t j, const std::filesystem::path& model_path,
                     const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    const auto bundle = build_bundle(cfg, load_sources(cfg, log), log);
    const auto& coin = coin_name.empty() ? bundle.coins.front() : bundle.coin(coin_name);
    harness::ExperimentConfig ec{coin.name, harness::ModelKind::LSTM, signals, k, j};
    auto protocol = cfg.protocol;
    harness::cover_grid(protocol, {ec});
    const auto seed = harness::experiment_seed(protocol.master_seed, ec);
    auto run = harness::train_lstm(ec, coin, protocol, seed);
    auto pred = lstm::predict(run.model, run.test);
    std::vector<double> truth;
    for (std::size_t i = 0; i < run.test.size(); ++i)
        truth.push_back(coin.price.high[*coin.calendar().index_of(run.test.target_date(i))]);
    const auto m = evaluate(pred, truth);
    lstm::save_model(model_path, run.model);
    out << ec.id() << ": epochs " << run.model.history.size() << ", best " << run.model.best_epoch << ", test RMSPE "
        << format_double(m.rmspe) << "%, MAPE " << format_double(m.mape) << "%\n";
    out << "saved " << model_path.string() << '\n';
    write_manifest(cfg.output, "train", cfg, args);
    return kOk;
}

/// Builds the model's feature columns from current data and predicts the
/// price high `j` days after the last available day.
inline int cmd_forecast(const RunConfig& cfg, const std::filesystem::path& model_path, bool write_files,
                        const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    if (!std::filesystem::exists(model_path)) throw UsageError("model file not found: " + model_path.string());
    const auto model = lstm::load_model(model_path);
    const auto bundle = build_bundle(cfg, load_sources(cfg, log), log);
    const auto& coin = bundle.coin(model.coin);
    if (coin.calendar().last < model.data_last)
        log << "warning: data ends " << format_date(coin.calendar().last) << ", before the model's training data ("
            << format_date(model.data_last) << ")\n";

    // Families can share column names (GH_All contains GH_Pop), so each
    // feature is looked up in the first matrix that has it.
    std::vector<SignalMatrix> sources{column_matrix(coin.calendar(), "price_high", coin.price.high)};
    for (const auto& [f, m] : coin.families) sources.push_back(m);
    const auto n = coin.calendar().size();
    if (n < model.k) throw DataError("forecast needs at least k = " + std::to_string(model.k) + " days of data");

    std::vector<std::pair<const SignalMatrix*, std::size_t>> cols;
    for (const auto& name : model.feature_names) {
        const SignalMatrix* found = nullptr;
        std::size_t c = 0;
        for (const auto& m : sources)
            if (auto idx = m.column_index(name)) {
                found = &m;
                c = *idx;
                break;
            }
        if (!found) throw DataError("data lacks model feature '" + name + "'");
        cols.emplace_back(found, c);
    }
    WindowSample s;
    for (std::size_t r = n - model.k; r < n; ++r)
        for (std::size_t i = 0; i < cols.size(); ++i) {
            double v = scale_minmax(cols[i].first->at(r, cols[i].second), model.norm.range_of(model.feature_names[i]));
            s.input.push_back(std::clamp(v, 0.0, 1.0));
        }
    s.anchor = coin.calendar().last;
    WindowedDataset ds{model.k, model.j, model.feature_names, {s}};
    const auto usd = lstm::predict(model, ds).front();
    const auto csv = "date,pred_usd\n" + format_date(ds.target_date(0)) + "," + format_double(usd) + "\n";
    out << csv;
    if (write_files) {
        std::filesystem::create_directories(cfg.output);
        write_text(cfg.output / "forecast.csv", csv);
        write_manifest(cfg.output, "forecast", cfg, args);
    }
    return kOk;
}

inline int finish_ablation(const std::vector<harness::ExperimentResult>& results, const std::filesystem::path& dir,
                           bool strict, std::ostream& out, std::ostream& log) {
    std::size_t failed = 0;
    for (const auto& r : results)
        if (!r.ok) {
            ++failed;
            log << "failed: " << r.config.id() << ": " << r.error << '\n';
        }
    harness::emit_report(results, dir);
    out << results.size() - failed << " of " << results.size() << " experiments succeeded; report in " << dir.string()
        << '\n';
    if (failed == results.size() || (strict && failed > 0)) return kExperimentFailures;
    return kOk;
}

inline int cmd_ablate(const RunConfig& cfg, std::size_t jobs, bool strict, const std::vector<std::string>& args,
                      std::ostream& out, std::ostream& log) {
    const auto ks = parse_range(cfg.k, "--k");
    const auto js = parse_range(cfg.j, "--j");
    const auto sets = parse_signal_sets(cfg.signals);
    const auto bundle = build_bundle(cfg, load_sources(cfg, log), log);
    const auto grid = harness::enumerate_grid(bundle.coin_names(), sets, ks, js);
    auto protocol = cfg.protocol;
    harness::cover_grid(protocol, grid);
    log << "running " << grid.size() << " experiments on " << jobs << " thread(s)\n";
    const auto results = harness::run_grid(grid, bundle, protocol, jobs);
    std::filesystem::create_directories(cfg.output);
    write_text(cfg.output / "results.json", harness::results_json(results));
    write_manifest(cfg.output, "ablate", cfg, args);
    return finish_ablation(results, cfg.output, strict, out, log);
}

inline int cmd_report(const std::filesystem::path& results_path, const std::filesystem::path& dir, bool strict,
                      std::ostream& out, std::ostream& log) {
    std::ifstream in(results_path);
    if (!in) throw UsageError("cannot open results file " + results_path.string());
    return finish_ablation(harness::parse_results_json(in), dir, strict, out, log);
}

inline int cmd_synth(std::uint64_t seed, std::size_t days, const std::filesystem::path& dir, std::ostream& out) {
    const auto b = generate_synthetic(seed, days);
    const auto paths = write_synthetic(b, dir);
    nlohmann::ordered_json cfg = {
        {"coins",
         {{{"name", b.price.coin},
           {"prices", paths.prices.filename().string()},
           {"reddit", paths.reddit.filename().string()},
           {"subreddit", b.subreddit},
           {"github", paths.github.filename().string()},
           {"repo", b.repo}}}},
        {"seed", seed},
        {"k", "1"},
        {"j", "1..3"},
        {"signals", "paper"}};
    write_text(dir / "config.json", cfg.dump(2) + "\n");
    out << "wrote " << b.price.size() << " days, " << b.comments.size() << " comments, " << b.events.size()
        << " events to " << dir.string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- entry

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"coinseer: social-signal crypto price forecasting"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    std::vector<std::string> args(argv + 1, argv + argc);

    CommonFlags common;
    std::string signals_flag, k_flag, j_flag, coin, model_path, results_path;
    std::size_t jobs = 1, k1 = 1, j1 = 1;
    bool strict = false;
    std::uint64_t synth_seed = kDefaultSeed;
    std::size_t synth_days = 600;

    auto* ingest = app.add_subcommand("ingest", "validate archives and write aligned price CSVs");
    add_common(ingest, common);

    auto* signals = app.add_subcommand("signals", "write one signal CSV per coin and family");
    add_common(signals, common);
    signals->add_option("--signals", signals_flag, "comma-separated families (default: all six)");

    auto* correlate = app.add_subcommand("correlate", "Pearson and distance correlation of signals with price high");
    add_common(correlate, common);
    correlate->add_option("--signals", signals_flag, "comma-separated families (default: all six)");

    auto* train = app.add_subcommand("train", "train one LSTM on the protocol split and save it");
    add_common(train, common);
    train->add_option("--coin", coin, "coin name (default: first configured)");
    train->add_option("--signals", signals_flag, "comma-separated families added to price (default: none)");
    train->add_option("--k", k1, "training window")->check(CLI::PositiveNumber);
    train->add_option("--j", j1, "forecasting window")->check(CLI::PositiveNumber);
    train->add_option("--model", model_path, "model output file")->required();

    auto* forecast = app.add_subcommand("forecast", "predict the price high j days after the latest data");
    add_common(forecast, common);
    forecast->add_option("--model", model_path, "trained model file")->required();

    auto* ablate = app.add_subcommand("ablate", "run the ablation grid and write the report");
    add_common(ablate, common);
    ablate->add_option("--k", k_flag, "training windows, e.g. 1 or 1..3");
    ablate->add_option("--j", j_flag, "forecasting windows, e.g. 1..3");
    ablate->add_option("--signals", signals_flag, "paper | all | comma-separated families (powerset)");
    ablate->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    ablate->add_flag("--strict", strict, "exit 1 when any experiment fails");

    auto* report = app.add_subcommand("report", "re-render report files from results.json");
    report->add_option("--results", results_path, "results.json from ablate")->required();
    report->add_option("--out", common.out, "output directory")->required();
    report->add_flag("--strict", strict, "exit 1 when any experiment failed");

    auto* synth = app.add_subcommand("synth", "write the synthetic archives and a matching config");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--days", synth_days, "number of days")->check(CLI::Range(60, 100000));
    synth->add_option("--out", common.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (synth->parsed()) {
            if (synth->count("--seed") == 0) {
                RunConfig none;
                synth_seed = resolve_seed(std::nullopt, none);
            }
            return cmd_synth(synth_seed, synth_days, common.out, out);
        }
        if (report->parsed()) return cmd_report(results_path, common.out, strict, out, err);

        auto cfg = resolve_config(common);
        if (ingest->parsed()) return cmd_ingest(cfg, args, out, err);
        if (signals->parsed() || correlate->parsed()) {
            auto fams = signals_flag.empty() ? harness::SignalSet(kAllFamilies.begin(), kAllFamilies.end())
                                             : parse_family_list(signals_flag);
            return signals->parsed() ? cmd_signals(cfg, fams, args, out, err) : cmd_correlate(cfg, fams, args, out, err);
        }
        if (train->parsed()) return cmd_train(cfg, coin, parse_family_list(signals_flag), k1, j1, model_path, args, out, err);
        if (forecast->parsed()) return cmd_forecast(cfg, model_path, !common.out.empty(), args, out, err);
        if (ablate->parsed()) {
            if (!k_flag.empty()) cfg.k = k_flag;
            if (!j_flag.empty()) cfg.j = j_flag;
            if (!signals_flag.empty()) cfg.signals = signals_flag;
            return cmd_ablate(cfg, jobs, strict, args, out, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace coinseer::cli
