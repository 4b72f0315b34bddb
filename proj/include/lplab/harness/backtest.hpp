// Backtests and training runs driven by a RunConfig.
#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

#include "lplab/agents.hpp"
#include "lplab/env.hpp"
#include "lplab/harness/config.hpp"
#include "lplab/harness/report.hpp"

namespace lplab::harness {

struct MarketData {
    std::shared_ptr<env::MarketSeries> series;
    marketdata::DatasetPartition partition;
    marketdata::IndexRange train;
    marketdata::IndexRange validation;
    marketdata::IndexRange test;

    const marketdata::IndexRange& split(SplitName s) const;
};

// Partitions the candles per the config and freezes feature scaling on the
// training split.
MarketData make_market(std::vector<features::Candle> candles, const RunConfig& config,
                       std::vector<marketdata::SwapEvent> swaps = {});
MarketData load_market(const RunConfig& config);

struct BacktestOutput {
    Report report;
    std::vector<env::TraceRow> trace;
};

// Every backtest starts at the first hour of the split with enough warm-up
// history and runs to the split end.
using Policy = std::function<int(const env::EnvState&)>;
BacktestOutput backtest_policy(const MarketData& market, const RunConfig& config, SplitName split,
                               const std::string& method, int initial_width, const Policy& policy,
                               bool oracle_tuned = false);
BacktestOutput backtest_tau_reset(const MarketData& market, const RunConfig& config, SplitName split, int tau,
                                  bool oracle_tuned = false);
BacktestOutput backtest_ddqn(const MarketData& market, const RunConfig& config, SplitName split,
                             const nn::NetworkParams& params);
BacktestOutput backtest_ewa(const MarketData& market, const RunConfig& config, SplitName split,
                            const agents::EWAConfig& ewa);

// Dispatches on config.method and config.eval_split. DDQN loads config.checkpoint.
BacktestOutput run_backtest(const MarketData& market, const RunConfig& config);

agents::TrainResult run_training(const MarketData& market, const RunConfig& config);

// report.csv, actions.csv, trace.csv and config.json under `dir`.
void write_backtest_artifacts(const std::filesystem::path& dir, const RunConfig& config, const BacktestOutput& out);
// checkpoint.json, train_log.csv and config.json under `dir`.
void write_train_artifacts(const std::filesystem::path& dir, const RunConfig& config,
                           const agents::TrainResult& result);

}  // namespace lplab::harness
