#include "lplab/env.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "lplab/accounting.hpp"
#include "lplab/csv.hpp"
#include "lplab/errors.hpp"

namespace lplab::env {

PathModel parse_path_model(std::string_view name) {
    if (name == "candle-path") return PathModel::CandlePath;
    if (name == "open-close") return PathModel::OpenClose;
    if (name == "swap-replay") return PathModel::SwapReplay;
    throw ConfigError("unknown path model '" + std::string(name) + "'");
}

RewardMode parse_reward_mode(std::string_view name) {
    if (name == "hedged") return RewardMode::Hedged;
    if (name == "unhedged") return RewardMode::Unhedged;
    throw ConfigError("unknown reward mode '" + std::string(name) + "'");
}

std::string_view to_string(PathModel m) {
    switch (m) {
        case PathModel::CandlePath:
            return "candle-path";
        case PathModel::OpenClose:
            return "open-close";
        case PathModel::SwapReplay:
            return "swap-replay";
    }
    return "?";
}

std::string_view to_string(RewardMode m) { return m == RewardMode::Hedged ? "hedged" : "unhedged"; }

void EnvConfig::validate() const {
    pool.validate(true);
    if (!(l0 > 0.0)) throw ConfigError("env.l0 must be positive");
    if (max_width < 1) throw ConfigError("env.max_width must be >= 1");
    if (!(gas >= 0.0)) throw ConfigError("env.gas must be non-negative");
    if (episode_length < 1) throw ConfigError("env.episode_length must be >= 1");
    if (initial_width < 1) throw ConfigError("env.initial_width must be >= 1");
}

MarketSeries MarketSeries::build(std::vector<features::Candle> candles, const features::FeatureConfig& config,
                                 std::vector<marketdata::SwapEvent> swaps) {
    MarketSeries s;
    s.features = features::compute_feature_matrix(candles, config);
    s.candles = std::move(candles);
    s.swaps = std::move(swaps);
    return s;
}

void MarketSeries::fit_scaler(const marketdata::IndexRange& train) {
    if (train.end > features.size() || train.begin > train.end) throw RangeError("fit_scaler: range out of bounds");
    std::vector<features::FeatureVector> rows;
    for (std::size_t i = train.begin; i < train.end; ++i) {
        bool finite = true;
        for (double v : features[i]) finite = finite && std::isfinite(v);
        if (finite) rows.push_back(features[i]);
    }
    scaler = features::FeatureScaler::fit(rows);
}

LiquidityEnv::LiquidityEnv(EnvConfig config, std::shared_ptr<const MarketSeries> market, marketdata::IndexRange split)
    : config_(std::move(config)), market_(std::move(market)), split_(split) {
    config_.validate();
    if (!market_) throw ConfigError("env: market series is null");
    if (split_.end > market_->candles.size() || split_.begin > split_.end) {
        throw RangeError("env: split lies outside the market series");
    }
}

std::size_t LiquidityEnv::first_offset() const {
    // The last completed hour before the first decision needs warm-up history.
    const std::size_t first_hour = config_.warmup + 1;
    return first_hour > split_.begin ? first_hour - split_.begin : 0;
}

std::size_t LiquidityEnv::offset_count() const {
    if (split_.size() < config_.episode_length) return 0;
    const std::size_t last = split_.size() - config_.episode_length;
    const std::size_t first = first_offset();
    return last >= first ? last - first + 1 : 0;
}

const EnvState& LiquidityEnv::reset(std::size_t offset) {
    const std::size_t hour = split_.begin + offset;
    if (hour == 0 || hour - 1 < config_.warmup) {
        throw WarmupError("env reset: offset " + std::to_string(offset) + " leaves " +
                          std::to_string(hour == 0 ? 0 : hour - 1) + " candles of history, need " +
                          std::to_string(config_.warmup));
    }
    if (hour + config_.episode_length > split_.end) {
        throw RangeError("env reset: offset " + std::to_string(offset) + " with episode length " +
                         std::to_string(config_.episode_length) + " runs past the split end");
    }
    state_ = EnvState{};
    state_.index = hour - 1;
    open_position(market_->candles[state_.index].close, config_.initial_width, config_.l0);
    refresh_observation();
    started_ = true;
    return state_;
}

void LiquidityEnv::open_position(double price, int width, double budget) {
    const int d = config_.pool.tick_spacing;
    const amm::Tick center = amm::snap_tick(amm::price_to_tick(price), d);
    const amm::TickRange range{center - static_cast<amm::Tick>(d) * width, center + static_cast<amm::Tick>(d) * width};
    const double liquidity = amm::liquidity_for_budget(budget, price, range);
    state_.position = amm::LiquidityPosition::from_ticks(range, liquidity, config_.pool);
    state_.center_tick = center;
    state_.width = width;
    state_.cash = 0.0;
    state_.value = amm::position_value(*state_.position, price);
}

void LiquidityEnv::refresh_observation() {
    const auto& f = market_->features[state_.index];
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!std::isfinite(f[i])) {
            throw ValidationError("env: non-finite feature " + std::string(features::feature_names()[i]) +
                                  " at candle " + std::to_string(state_.index));
        }
    }
    const features::PositionSnapshot snap{state_.cash, static_cast<double>(state_.center_tick),
                                          static_cast<double>(state_.width), state_.value};
    features::ScalingContext ctx;
    ctx.l0 = config_.l0;
    ctx.max_width = config_.max_width;
    ctx.tick_spacing = config_.pool.tick_spacing;
    ctx.current_tick = amm::price_to_tick(market_->candles[state_.index].close);
    ctx.scaler = &market_->scaler;
    state_.observation = features::assemble_observation(f, snap, config_.normalization, ctx);
}

std::vector<double> intra_hour_path(const MarketSeries& market, PathModel model, std::size_t index) {
    if (index == 0 || index >= market.candles.size()) throw RangeError("intra_hour_path: index out of range");
    const auto& c = market.candles[index];
    std::vector<double> path{market.candles[index - 1].close, c.open};
    switch (model) {
        case PathModel::CandlePath:
            if (c.close >= c.open) {
                path.push_back(c.low);
                path.push_back(c.high);
            } else {
                path.push_back(c.high);
                path.push_back(c.low);
            }
            break;
        case PathModel::OpenClose:
            break;
        case PathModel::SwapReplay: {
            const auto& swaps = market.swaps;
            auto it = std::lower_bound(swaps.begin(), swaps.end(), c.timestamp,
                                       [](const marketdata::SwapEvent& e, std::int64_t ts) { return e.timestamp < ts; });
            for (; it != swaps.end() && it->timestamp < c.timestamp + marketdata::kHour; ++it) {
                path.push_back(it->price_after);
            }
            break;
        }
    }
    path.push_back(c.close);
    return path;
}

StepResult LiquidityEnv::step(int action) {
    if (!started_) throw DomainError("env step: call reset first");
    if (done()) throw DomainError("env step: episode is done");
    if (action < 0 || action > config_.max_width) {
        throw DomainError("env step: action " + std::to_string(action) + " outside {0.." +
                          std::to_string(config_.max_width) + "}");
    }

    StepInfo info;
    info.action = action;
    if (action != 0) {
        const double price = market_->candles[state_.index].close;
        open_position(price, action, state_.cash + state_.value);
        info.reallocated = true;
        info.gas = config_.gas;
    }

    const std::size_t hour = state_.index + 1;
    const auto path = intra_hour_path(hour);
    const auto ledger = accounting::ledger_over_path(*state_.position, config_.pool.fee_tier, path);
    for (const auto& s : ledger) {
        info.fee += s.fee;
        info.lvr += s.lvr_increment;
        info.value_change += s.value_change;
        info.hedge_pnl += s.hedge_pnl;
    }
    info.close = market_->candles[hour].close;

    const double pnl_term = config_.reward_mode == RewardMode::Hedged ? info.lvr : info.value_change;
    const double reward = -info.gas + info.fee + pnl_term;

    state_.cash += info.fee;
    state_.value = amm::position_value(*state_.position, info.close);
    state_.index = hour;
    state_.clock += 1;
    refresh_observation();
    return StepResult{state_, reward, done(), info};
}

double relative_pnl(std::span<const double> rewards, double l0) {
    if (!(l0 > 0.0)) throw DomainError("relative_pnl: l0 must be positive");
    double total = 0.0;
    for (double r : rewards) total += r;
    return total / l0;
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> rows) {
    out << "t,action,fee,lvr,gas,dv,reward,c,m,w,l,close\n";
    for (const auto& r : rows) {
        out << r.t << ',' << r.info.action << ',' << csv::format(r.info.fee) << ',' << csv::format(r.info.lvr) << ','
            << csv::format(r.info.gas) << ',' << csv::format(r.info.value_change) << ',' << csv::format(r.reward)
            << ',' << csv::format(r.cash) << ',' << r.center_tick << ',' << r.width << ',' << csv::format(r.value)
            << ',' << csv::format(r.info.close) << '\n';
    }
}

LiquidityEpisodes::LiquidityEpisodes(EnvConfig config, std::shared_ptr<const MarketSeries> market,
                                     marketdata::IndexRange split, bool random_start)
    : env_(std::move(config), std::move(market), split), random_start_(random_start) {
    if (env_.offset_count() == 0) throw RangeError("episodes: split too short for one episode");
}

std::vector<double> LiquidityEpisodes::reset(std::uint64_t episode_seed) {
    std::size_t offset = env_.first_offset();
    if (random_start_) {
        std::mt19937_64 rng(episode_seed);
        std::uniform_int_distribution<std::size_t> pick(0, env_.offset_count() - 1);
        offset += pick(rng);
    }
    const auto& s = env_.reset(offset);
    return {s.observation.begin(), s.observation.end()};
}

rl::StepOutcome LiquidityEpisodes::step(int action) {
    const auto r = env_.step(action);
    return {std::vector<double>(r.state.observation.begin(), r.state.observation.end()), r.reward, r.done};
}

}  // namespace lplab::env
