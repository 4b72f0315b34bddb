// lplab command-line front end.
//
// Subcommands: ingest, features, train, backtest, report, verify. Errors are
// printed as a single line "lplab: error: <kind>: <message>".

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lplab/errors.hpp"
#include "lplab/features.hpp"
#include "lplab/harness/backtest.hpp"
#include "lplab/harness/config.hpp"
#include "lplab/harness/report.hpp"
#include "lplab/marketdata.hpp"
#include "lplab/verify/checks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lplab;

namespace {

// Flags shared by train and backtest. Only flags given on the command line
// are overlaid on the config file.
struct RunFlags {
    std::string config;
    std::optional<std::string> pool, data, swaps, split_start, eval_split, method, reward_mode, path_model,
        normalization, output_dir, checkpoint;
    std::optional<double> fee_tier, l0, gas, ewa_eta, learning_rate;
    std::optional<int> tick_spacing, period, max_width, tau, ewa_n, ewa_t_re;
    std::optional<std::int64_t> train_hours, validation_hours, test_hours;
    std::optional<std::size_t> episode_length, warmup, budget, max_episodes, patience, eval_every, buffer_capacity,
        batch_size;
    std::optional<std::uint64_t> seed;

    void attach(CLI::App* app) {
        app->add_option("-c,--config", config, "JSON run configuration");
        app->add_option("--pool", pool, "pool label, e.g. ETH-USDC-0.3");
        app->add_option("--fee-tier", fee_tier);
        app->add_option("--tick-spacing", tick_spacing);
        app->add_option("--data", data, "candle CSV (relative paths also tried under $LPLAB_DATA_DIR)");
        app->add_option("--swaps", swaps, "swap CSV for the swap-replay path model");
        app->add_option("--period", period, "1..4, or 0 for a custom split");
        app->add_option("--split-start", split_start, "custom split start date, YYYY-MM-DD");
        app->add_option("--train-hours", train_hours);
        app->add_option("--validation-hours", validation_hours);
        app->add_option("--test-hours", test_hours);
        app->add_option("--split", eval_split, "train, validation or test");
        app->add_option("--method", method, "ddqn, tau-reset or ewa");
        app->add_option("--l0", l0, "initial fund");
        app->add_option("--gas", gas, "gas cost per reallocation");
        app->add_option("--max-width", max_width);
        app->add_option("--episode-length", episode_length);
        app->add_option("--warmup", warmup);
        app->add_option("--reward-mode", reward_mode, "hedged or unhedged");
        app->add_option("--path-model", path_model, "candle-path, open-close or swap-replay");
        app->add_option("--normalization", normalization);
        app->add_option("--seed", seed);
        app->add_option("-o,--output-dir", output_dir);
        app->add_option("--tau", tau, "tau-reset width; default from the reference table");
        app->add_option("--ewa-n", ewa_n);
        app->add_option("--ewa-eta", ewa_eta);
        app->add_option("--ewa-tre", ewa_t_re);
        app->add_option("--budget", budget, "DDQN environment steps");
        app->add_option("--max-episodes", max_episodes);
        app->add_option("--patience", patience);
        app->add_option("--eval-every", eval_every);
        app->add_option("--buffer-capacity", buffer_capacity);
        app->add_option("--batch-size", batch_size);
        app->add_option("--learning-rate", learning_rate);
        app->add_option("--checkpoint", checkpoint, "DDQN checkpoint for backtests");
    }

    json overlay() const {
        json j = json::object();
        auto put = [&](const char* key, const auto& v) {
            if (v) j[key] = *v;
        };
        put("pool", pool);
        put("fee_tier", fee_tier);
        put("tick_spacing", tick_spacing);
        put("data", data);
        put("swaps", swaps);
        put("period", period);
        put("split_start", split_start);
        put("train_hours", train_hours);
        put("validation_hours", validation_hours);
        put("test_hours", test_hours);
        put("eval_split", eval_split);
        put("method", method);
        put("l0", l0);
        put("gas", gas);
        put("max_width", max_width);
        put("episode_length", episode_length);
        put("warmup", warmup);
        put("reward_mode", reward_mode);
        put("path_model", path_model);
        put("normalization", normalization);
        put("seed", seed);
        put("output_dir", output_dir);
        put("tau", tau);
        put("budget", budget);
        put("checkpoint", checkpoint);
        json ewa = json::object();
        if (ewa_n) ewa["n"] = *ewa_n;
        if (ewa_eta) ewa["eta"] = *ewa_eta;
        if (ewa_t_re) ewa["t_re"] = *ewa_t_re;
        if (!ewa.empty()) j["ewa"] = ewa;
        json ddqn = json::object();
        if (max_episodes) ddqn["max_episodes"] = *max_episodes;
        if (patience) ddqn["patience"] = *patience;
        if (eval_every) ddqn["eval_every"] = *eval_every;
        if (buffer_capacity) ddqn["buffer_capacity"] = *buffer_capacity;
        if (batch_size) ddqn["batch_size"] = *batch_size;
        if (learning_rate) ddqn["learning_rate"] = *learning_rate;
        if (!ddqn.empty()) j["ddqn"] = ddqn;
        return j;
    }

    harness::RunConfig resolve() const {
        harness::RunConfig c = config.empty() ? harness::RunConfig{} : harness::RunConfig::load(config);
        const json o = overlay();
        // A partial ewa overlay completes the config's ewa block (or the table value).
        if (o.contains("ewa") && !c.ewa) {
            const auto base = c.resolved_ewa();
            c.merge_json({{"ewa", {{"n", base.n_widths}, {"eta", base.eta}, {"t_re", base.t_re}}}});
        }
        c.merge_json(o);
        c.validate();
        return c;
    }
};

fs::path require_output_dir(const harness::RunConfig& c) {
    if (c.output_dir.empty()) throw ConfigError("config: field 'output_dir' is required (use -o)");
    return c.output_dir;
}

void print_report(const harness::Report& r) {
    std::printf("%s %s period %s split %s l0 %g: fee %.6f gas %.6f lvr %.6f pnl %.6f (%zu hours, %zu reallocations%s)\n",
                r.method.c_str(), r.pool.c_str(), r.period.c_str(), r.split.c_str(), r.l0, r.relative_fee,
                r.relative_gas, r.relative_lvr, r.relative_pnl, r.hours, r.reallocations,
                r.oracle_tuned ? ", oracle-tuned" : "");
}

int cmd_backtest(const RunFlags& flags) {
    const auto c = flags.resolve();
    const auto dir = require_output_dir(c);
    const auto market = harness::load_market(c);
    const auto out = harness::run_backtest(market, c);
    out.report.check_identity();
    harness::write_backtest_artifacts(dir, c, out);
    print_report(out.report);
    return 0;
}

int cmd_train(const RunFlags& flags) {
    auto c = flags.resolve();
    c.method = harness::Method::Ddqn;
    const auto dir = require_output_dir(c);
    const auto market = harness::load_market(c);
    const auto res = harness::run_training(market, c);
    harness::write_train_artifacts(dir, c, res);
    std::printf("trained %zu episodes, %zu env steps, %zu gradient steps, best validation return %.6f%s\n",
                res.log.size(), res.env_steps, res.gradient_steps, res.best_validation_return,
                res.early_stopped ? " (early stop)" : "");
    return 0;
}

struct IngestFlags {
    std::string source = "gbm";
    std::string out;
    // subgraph
    std::string endpoint, pool_id, from, to, cache_dir;
    int decimal_shift = 0;
    bool invert = false;
    int page_size = 1000;
    // csv
    std::string input;
    int max_fill = 3;
    // gbm
    marketdata::GbmParams gbm;
    std::string start;
};

fs::path default_cache_dir() {
    if (const char* root = std::getenv("LPLAB_DATA_DIR"); root && *root) return fs::path(root) / "cache";
    return "data/cache";
}

int cmd_ingest(const IngestFlags& f) {
    std::vector<features::Candle> candles;
    if (f.source == "subgraph") {
        if (f.endpoint.empty() || f.pool_id.empty() || f.from.empty() || f.to.empty()) {
            throw ConfigError("ingest: subgraph needs --endpoint, --pool-id, --from and --to");
        }
        marketdata::ClientOptions opts;
        opts.page_size = f.page_size;
        marketdata::SubgraphClient client(f.endpoint, opts);
        const marketdata::TimeRange range{marketdata::parse_utc_date(f.from), marketdata::parse_utc_date(f.to)};
        const fs::path cache = f.cache_dir.empty() ? default_cache_dir() : fs::path(f.cache_dir);
        candles = marketdata::fetch_pool_hours(client, cache, f.pool_id, range, {f.decimal_shift, f.invert});
        std::printf("fetched %zu hours (%zu requests)\n", candles.size(), client.request_count());
    } else if (f.source == "csv") {
        if (f.input.empty()) throw ConfigError("ingest: csv needs --input");
        candles = marketdata::fill_gaps(marketdata::load_candles_csv(harness::resolve_data_path(f.input)), f.max_fill);
        marketdata::validate_candles(candles);
    } else if (f.source == "gbm") {
        auto g = f.gbm;
        if (!f.start.empty()) g.start = marketdata::parse_utc_date(f.start);
        candles = marketdata::synth_gbm(g);
    } else {
        throw ConfigError("ingest: unknown source '" + f.source + "' (expected subgraph, csv or gbm)");
    }
    if (!f.out.empty()) {
        marketdata::save_candles_csv(f.out, candles);
        std::printf("wrote %zu candles to %s\n", candles.size(), f.out.c_str());
    }
    return 0;
}

int cmd_features(const std::string& data, const std::string& out_path, bool all_rows) {
    const auto candles = marketdata::load_candles_csv(harness::resolve_data_path(data));
    marketdata::validate_candles(candles);
    const features::FeatureConfig fc;
    const auto rows = features::compute_feature_matrix(candles, fc);
    const std::size_t from = all_rows ? 0 : std::min(fc.warmup, candles.size());
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot write " + out_path);
    features::write_feature_csv(out, candles, rows, from);
    std::printf("wrote %zu feature rows to %s\n", candles.size() - from, out_path.c_str());
    return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir) {
    std::vector<harness::Report> reports;
    for (const auto& in : inputs) {
        fs::path p = in;
        if (fs::is_directory(p)) p /= "report.csv";
        std::ifstream f(p);
        if (!f) throw ConfigError("cannot open " + p.string());
        for (auto& r : harness::read_reports_csv(f)) reports.push_back(std::move(r));
    }
    const auto agg = harness::aggregate_reports(std::move(reports));
    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "reports.csv");
        harness::write_reports_csv(f, agg.rows);
    }
    {
        std::ofstream f(fs::path(out_dir) / "table.csv");
        harness::write_table_csv(f, agg);
    }
    std::ofstream f(fs::path(out_dir) / "cumulative.csv");
    harness::write_cumulative_csv(f, agg);
    std::printf("aggregated %zu runs into %s\n", agg.rows.size(), out_dir.c_str());
    return 0;
}

int cmd_verify(const std::string& printed_table, bool full) {
    std::vector<verify::CheckResult> results;
    results.push_back(verify::timed("accounting identity", [] { return verify::accounting_identity(); }));
    results.push_back(verify::timed("fee oracle", [] { return verify::fee_oracle(); }));
    results.push_back(verify::timed("reserve continuity", [] { return verify::reserve_continuity(); }));
    results.push_back(verify::timed("network", [] { return verify::network_checks(); }));
    results.push_back(verify::timed("ewa", [] { return verify::ewa_behaviour(); }));
    if (!printed_table.empty()) {
        results.push_back(verify::timed("printed table", [&] { return verify::printed_table(printed_table); }));
    }
    if (full) {
        results.push_back(verify::timed("toy mdp convergence", [] { return verify::toy_convergence(); }));
        results.push_back(verify::timed("drift neutrality", [] { return verify::drift_neutrality(); }));
    }
    bool ok = true;
    for (const auto& r : results) {
        std::printf("%-4s %-22s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concentrated-liquidity market-making lab"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "fetch, import or synthesize hourly candles");
    IngestFlags ing;
    ingest->add_option("--source", ing.source, "subgraph, csv or gbm")->capture_default_str();
    ingest->add_option("--out", ing.out, "output candle CSV");
    ingest->add_option("--endpoint", ing.endpoint, "GraphQL endpoint URL");
    ingest->add_option("--pool-id", ing.pool_id);
    ingest->add_option("--from", ing.from, "YYYY-MM-DD, inclusive");
    ingest->add_option("--to", ing.to, "YYYY-MM-DD, exclusive");
    ingest->add_option("--cache-dir", ing.cache_dir, "default $LPLAB_DATA_DIR/cache");
    ingest->add_option("--decimal-shift", ing.decimal_shift);
    ingest->add_flag("--invert", ing.invert, "take the reciprocal of raw prices");
    ingest->add_option("--page-size", ing.page_size);
    ingest->add_option("--input", ing.input, "candle CSV to import");
    ingest->add_option("--max-fill", ing.max_fill, "longest gap (hours) to forward-fill");
    ingest->add_option("--p0", ing.gbm.p0);
    ingest->add_option("--drift", ing.gbm.drift, "per hour");
    ingest->add_option("--sigma", ing.gbm.sigma, "per sqrt(hour)");
    ingest->add_option("--hours", ing.gbm.hours);
    ingest->add_option("--seed", ing.gbm.seed);
    ingest->add_option("--start", ing.start, "first candle date, YYYY-MM-DD");

    auto* feats = app.add_subcommand("features", "emit the feature matrix as CSV");
    std::string feat_data, feat_out;
    bool feat_all = false;
    feats->add_option("--data", feat_data, "candle CSV")->required();
    feats->add_option("--out", feat_out, "output CSV")->required();
    feats->add_flag("--all-rows", feat_all, "include warm-up rows");

    auto* train = app.add_subcommand("train", "train the DDQN agent");
    RunFlags train_flags;
    train_flags.attach(train);

    auto* backtest = app.add_subcommand("backtest", "backtest a method on one split");
    RunFlags bt_flags;
    bt_flags.attach(backtest);

    auto* report = app.add_subcommand("report", "aggregate run reports into table and cumulative CSVs");
    std::vector<std::string> report_inputs;
    std::string report_out;
    report->add_option("runs", report_inputs, "run directories or report CSVs")->required();
    report->add_option("-o,--output-dir", report_out)->required();

    auto* ver = app.add_subcommand("verify", "run the property and oracle suites");
    std::string printed;
    bool full = false;
    ver->add_option("--printed-table", printed, "printed three-decimal table CSV to check");
    ver->add_flag("--full", full, "also run the toy-MDP and drift studies (minutes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::fprintf(stderr, "lplab: error: usage: %s\n", msg.c_str());
        return 2;
    }

    try {
        if (*ingest) return cmd_ingest(ing);
        if (*feats) return cmd_features(feat_data, feat_out, feat_all);
        if (*train) return cmd_train(train_flags);
        if (*backtest) return cmd_backtest(bt_flags);
        if (*report) return cmd_report(report_inputs, report_out);
        if (*ver) return cmd_verify(printed, full);
    } catch (const Error& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
            if (ch == '\n') ch = ' ';
        }
        std::fprintf(stderr, "lplab: error: %s: %s\n", e.kind().c_str(), msg.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lplab: error: internal: %s\n", e.what());
        return 1;
    }
    return 0;
}
