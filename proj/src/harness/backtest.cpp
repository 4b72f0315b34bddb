#include "lplab/harness/backtest.hpp"

#include <algorithm>
#include <fstream>

#include "lplab/errors.hpp"

namespace lplab::harness {

const marketdata::IndexRange& MarketData::split(SplitName s) const {
    switch (s) {
        case SplitName::Train:
            return train;
        case SplitName::Validation:
            return validation;
        case SplitName::Test:
            break;
    }
    return test;
}

MarketData make_market(std::vector<features::Candle> candles, const RunConfig& config,
                       std::vector<marketdata::SwapEvent> swaps) {
    marketdata::validate_candles(candles);
    MarketData m;
    m.partition = marketdata::partition(candles, config.partition_scheme());
    m.train = marketdata::index_range(candles, m.partition.train);
    m.validation = marketdata::index_range(candles, m.partition.validation);
    m.test = marketdata::index_range(candles, m.partition.test);
    m.series = std::make_shared<env::MarketSeries>(env::MarketSeries::build(std::move(candles), {}, std::move(swaps)));
    m.series->fit_scaler(m.train);
    return m;
}

MarketData load_market(const RunConfig& config) {
    if (config.data.empty()) throw ConfigError("config: field 'data' (candle CSV) is required");
    auto candles = marketdata::load_candles_csv(resolve_data_path(config.data));
    std::vector<marketdata::SwapEvent> swaps;
    if (!config.swaps.empty()) swaps = marketdata::load_swaps_csv(resolve_data_path(config.swaps));
    if (config.env.path_model == env::PathModel::SwapReplay && swaps.empty()) {
        throw ConfigError("config: path_model swap-replay needs field 'swaps'");
    }
    return make_market(std::move(candles), config, std::move(swaps));
}

namespace {

std::string period_label(const RunConfig& c) { return c.period == 0 ? "custom" : std::to_string(c.period); }

ReportMeta meta_for(const RunConfig& c, SplitName split, const std::string& method, bool oracle_tuned) {
    ReportMeta m;
    m.method = method;
    m.pool = c.pool;
    m.pool_spec = c.pool_spec;
    m.period = period_label(c);
    m.split = std::string(to_string(split));
    m.l0 = c.env.l0;
    m.reward_mode = c.env.reward_mode;
    m.seed = c.seed;
    m.config_hash = c.hash();
    m.oracle_tuned = oracle_tuned;
    m.action_count = c.env.max_width + 1;
    return m;
}

// First decision hour with a full warm-up window behind it.
std::size_t first_hour(const marketdata::IndexRange& split, std::size_t warmup) {
    return std::max(split.begin, warmup + 1);
}

std::size_t horizon(const marketdata::IndexRange& split, std::size_t warmup) {
    const std::size_t h = first_hour(split, warmup);
    if (h >= split.end) throw RangeError("backtest: split leaves no hours after the warm-up");
    return split.end - h;
}

}  // namespace

BacktestOutput backtest_policy(const MarketData& market, const RunConfig& config, SplitName split,
                               const std::string& method, int initial_width, const Policy& policy,
                               bool oracle_tuned) {
    const auto& range = market.split(split);
    env::EnvConfig ec = config.env;
    ec.episode_length = horizon(range, ec.warmup);
    ec.initial_width = initial_width;
    env::LiquidityEnv e(ec, market.series, range);
    e.reset(e.first_offset());

    BacktestOutput out;
    out.trace.reserve(ec.episode_length);
    while (!e.done()) {
        const auto r = e.step(policy(e.state()));
        out.trace.push_back(env::TraceRow{r.state.clock - 1, r.info, r.reward, r.state.cash, r.state.center_tick,
                                          r.state.width, r.state.value});
    }
    out.report = make_report(meta_for(config, split, method, oracle_tuned), out.trace);
    return out;
}

BacktestOutput backtest_tau_reset(const MarketData& market, const RunConfig& config, SplitName split, int tau,
                                  bool oracle_tuned) {
    const auto& candles = market.series->candles;
    // The opening position already has width tau, so no reset is paid up front.
    return backtest_policy(
        market, config, split, "tau-reset", tau,
        [&](const env::EnvState& s) { return agents::policy_tau_reset(tau, s.position, candles[s.index].close); },
        oracle_tuned);
}

BacktestOutput backtest_ddqn(const MarketData& market, const RunConfig& config, SplitName split,
                             const nn::NetworkParams& params) {
    if (params.input_dim() != features::kObservationSize ||
        params.action_count() != static_cast<std::size_t>(config.env.max_width + 1)) {
        throw ConfigError("backtest: network shape does not match the environment (input " +
                          std::to_string(params.input_dim()) + ", actions " + std::to_string(params.action_count()) +
                          ")");
    }
    return backtest_policy(market, config, split, "ddqn", config.env.initial_width, [&](const env::EnvState& s) {
        return agents::greedy_action(params, s.observation);
    });
}

BacktestOutput backtest_ewa(const MarketData& market, const RunConfig& config, SplitName split,
                            const agents::EWAConfig& ewa) {
    const auto& range = market.split(split);
    const std::size_t start = first_hour(range, config.env.warmup);
    const auto run = agents::run_ewa(*market.series, config.env, start, horizon(range, config.env.warmup), ewa);

    BacktestOutput out;
    out.trace.reserve(run.hours.size());
    for (const auto& h : run.hours) {
        env::TraceRow row;
        row.t = h.t;
        row.info.action = h.reallocated ? ewa.n_widths : 0;
        row.info.reallocated = h.reallocated;
        row.info.fee = h.fee;
        row.info.lvr = h.lvr;
        row.info.value_change = h.value_change;
        row.info.hedge_pnl = h.hedge_pnl;
        row.info.gas = h.gas;
        row.info.close = h.close;
        row.reward = h.reward;
        row.cash = h.cash;
        row.center_tick = h.center_tick;
        row.width = ewa.n_widths;
        row.value = h.value;
        out.trace.push_back(row);
    }
    auto meta = meta_for(config, split, "ewa", false);
    meta.action_count = std::max(meta.action_count, ewa.n_widths + 1);
    out.report = make_report(meta, out.trace);
    return out;
}

BacktestOutput run_backtest(const MarketData& market, const RunConfig& config) {
    config.validate();
    switch (config.method) {
        case Method::TauReset: {
            bool oracle = false;
            const int tau = config.resolved_tau(&oracle);
            return backtest_tau_reset(market, config, config.eval_split, tau, oracle);
        }
        case Method::Ewa:
            return backtest_ewa(market, config, config.eval_split, config.resolved_ewa());
        case Method::Ddqn: {
            if (config.checkpoint.empty()) throw ConfigError("config: field 'checkpoint' is required for ddqn backtests");
            const auto ck = nn::load_checkpoint(config.checkpoint);
            return backtest_ddqn(market, config, config.eval_split, ck.params);
        }
    }
    throw ConfigError("unknown method");
}

agents::TrainResult run_training(const MarketData& market, const RunConfig& config) {
    config.validate();
    env::EnvConfig val_cfg = config.env;
    val_cfg.episode_length = horizon(market.validation, config.env.warmup);
    env::LiquidityEpisodes train_env(config.env, market.series, market.train, true);
    env::LiquidityEpisodes val_env(val_cfg, market.series, market.validation, false);

    agents::DDQNConfig dc = config.ddqn;
    dc.config_hash = config.hash();
    if (!config.output_dir.empty()) {
        dc.divergence_checkpoint = std::filesystem::path(config.output_dir) / "checkpoint_diverged.json";
    }
    return agents::train_ddqn({train_env, val_env, 0}, dc, config.budget, config.seed);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

void write_config(const std::filesystem::path& dir, const RunConfig& config) {
    auto j = config.to_json();
    j["config_hash"] = config.hash();
    open_out(dir / "config.json") << j.dump(2) << '\n';
}

std::string provenance(const RunConfig& config) {
    return "# config_hash=" + config.hash() + " seed=" + std::to_string(config.seed) + "\n";
}

}  // namespace

void write_backtest_artifacts(const std::filesystem::path& dir, const RunConfig& config, const BacktestOutput& out) {
    std::filesystem::create_directories(dir);
    write_config(dir, config);
    {
        auto f = open_out(dir / "report.csv");
        write_reports_csv(f, std::span<const Report>(&out.report, 1));
    }
    {
        auto f = open_out(dir / "actions.csv");
        write_action_histogram_csv(f, out.report);
    }
    auto f = open_out(dir / "trace.csv");
    f << provenance(config);
    env::write_trace_csv(f, out.trace);
}

void write_train_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                           const agents::TrainResult& result) {
    std::filesystem::create_directories(dir);
    write_config(dir, config);
    nn::save_checkpoint(dir / "checkpoint.json", result.best, result.optimizer, {config.seed, config.hash()});
    auto f = open_out(dir / "train_log.csv");
    f << provenance(config);
    agents::write_train_log_csv(f, result.log);
}

}  // namespace lplab::harness
