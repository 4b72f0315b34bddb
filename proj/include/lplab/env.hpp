// Hourly liquidity-reallocation environment.
//
// At the end of each hour the agent either keeps its position (action 0) or
// re-centres it on the current tick with half-width `a` tick spacings. The
// following hour then elapses along an intra-hour price path on which fees,
// LVR, hedge PnL and value change accrue.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "lplab/amm.hpp"
#include "lplab/features.hpp"
#include "lplab/marketdata.hpp"
#include "lplab/rl.hpp"

namespace lplab::env {

enum class PathModel { CandlePath, OpenClose, SwapReplay };
enum class RewardMode { Hedged, Unhedged };

PathModel parse_path_model(std::string_view name);
RewardMode parse_reward_mode(std::string_view name);
std::string_view to_string(PathModel m);
std::string_view to_string(RewardMode m);

struct EnvConfig {
    amm::PoolSpec pool;
    double l0 = 1000.0;
    int max_width = 10;  // N_a
    double gas = 1.0;    // flat cost per reallocation, Y units
    PathModel path_model = PathModel::CandlePath;
    RewardMode reward_mode = RewardMode::Hedged;
    std::size_t episode_length = 1000;
    std::size_t warmup = features::kDefaultWarmup;
    int initial_width = 1;
    features::NormalizationMode normalization = features::NormalizationMode::Scaled;

    void validate() const;
};

// Immutable market data shared by any number of environments.
struct MarketSeries {
    std::vector<features::Candle> candles;
    std::vector<features::FeatureVector> features;
    std::vector<marketdata::SwapEvent> swaps;
    features::FeatureScaler scaler;

    static MarketSeries build(std::vector<features::Candle> candles, const features::FeatureConfig& config = {},
                              std::vector<marketdata::SwapEvent> swaps = {});

    // Freezes z-score statistics from the rows in `train`.
    void fit_scaler(const marketdata::IndexRange& train);
};

struct EnvState {
    features::Observation observation{};
    std::optional<amm::LiquidityPosition> position;
    amm::Tick center_tick = 0;  // m
    int width = 0;              // w
    double cash = 0.0;          // c
    double value = 0.0;         // l
    std::size_t clock = 0;      // steps taken this episode
    std::size_t index = 0;      // candle index of the last completed hour
};

struct StepInfo {
    int action = 0;
    bool reallocated = false;
    double fee = 0.0;
    double lvr = 0.0;  // signed, <= 0
    double value_change = 0.0;
    double hedge_pnl = 0.0;
    double gas = 0.0;
    double close = 0.0;
};

struct StepResult {
    const EnvState& state;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

// Price path traversed during the hour of candle `index`, starting at the
// previous close.
std::vector<double> intra_hour_path(const MarketSeries& market, PathModel model, std::size_t index);

class LiquidityEnv {
public:
    LiquidityEnv(EnvConfig config, std::shared_ptr<const MarketSeries> market, marketdata::IndexRange split);

    // Opens a fresh position with the full l0 at initial_width, centred on the
    // snapped tick of the last close before hour split.begin + offset.
    const EnvState& reset(std::size_t offset);
    StepResult step(int action);

    const EnvState& state() const { return state_; }
    const EnvConfig& config() const { return config_; }
    bool done() const { return state_.clock >= config_.episode_length; }

    // Admissible reset offsets are first_offset() .. first_offset() + offset_count() - 1.
    std::size_t first_offset() const;
    std::size_t offset_count() const;

    std::vector<double> intra_hour_path(std::size_t index) const {
        return env::intra_hour_path(*market_, config_.path_model, index);
    }
    const MarketSeries& market() const { return *market_; }
    const marketdata::IndexRange& split() const { return split_; }

private:
    void open_position(double price, int width, double budget);
    void refresh_observation();

    EnvConfig config_;
    std::shared_ptr<const MarketSeries> market_;
    marketdata::IndexRange split_;
    EnvState state_;
    bool started_ = false;
};

double relative_pnl(std::span<const double> rewards, double l0);

struct TraceRow {
    std::size_t t = 0;
    StepInfo info;
    double reward = 0.0;
    double cash = 0.0;
    amm::Tick center_tick = 0;
    int width = 0;
    double value = 0.0;
};

// Columns t,action,fee,lvr,gas,dv,reward,c,m,w,l,close.
void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows);

// Adapts LiquidityEnv to the learner interface. With `random_start` each
// reset draws an offset from the seed; otherwise offset 0 is used.
class LiquidityEpisodes : public rl::EpisodicEnv {
public:
    LiquidityEpisodes(EnvConfig config, std::shared_ptr<const MarketSeries> market, marketdata::IndexRange split,
                      bool random_start);

    std::vector<double> reset(std::uint64_t episode_seed) override;
    rl::StepOutcome step(int action) override;
    int action_count() const override { return env_.config().max_width + 1; }
    std::size_t observation_size() const override { return features::kObservationSize; }

    LiquidityEnv& env() { return env_; }

private:
    LiquidityEnv env_;
    bool random_start_;
};

}  // namespace lplab::env
