#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lplab/accounting.hpp"
#include "lplab/env.hpp"
#include "lplab/errors.hpp"
#include "lplab/verify/oracles.hpp"

using namespace lplab;
using namespace lplab::env;

namespace {

std::shared_ptr<MarketSeries> market(std::size_t hours = 400, std::uint64_t seed = 21) {
    marketdata::GbmParams g;
    g.hours = hours;
    g.seed = seed;
    auto m = std::make_shared<MarketSeries>(MarketSeries::build(marketdata::synth_gbm(g)));
    m->fit_scaler({0, 300});
    return m;
}

EnvConfig config(std::size_t episode = 50) {
    EnvConfig c;
    c.l0 = 1000.0;
    c.episode_length = episode;
    return c;
}

}  // namespace

TEST(Env, ResetOpensFullPosition) {
    const auto m = market();
    LiquidityEnv e(config(), m, {0, 400});
    const auto& s = e.reset(e.first_offset());
    ASSERT_TRUE(s.position.has_value());
    EXPECT_NEAR(s.value, 1000.0, 1e-9);
    EXPECT_EQ(s.cash, 0.0);
    EXPECT_EQ(s.width, 1);
    EXPECT_EQ(s.center_tick % 60, 0);
    EXPECT_EQ(s.position->ticks->lower, s.center_tick - 60);
    EXPECT_EQ(s.position->ticks->upper, s.center_tick + 60);
    EXPECT_EQ(s.index, 200u);
    EXPECT_NEAR(amm::position_value(*s.position, m->candles[s.index].close), s.value, 1e-9);
}

TEST(Env, ResetIsDeterministic) {
    const auto m = market();
    LiquidityEnv a(config(), m, {0, 400}), b(config(), m, {0, 400});
    const auto& sa = a.reset(250);
    const auto& sb = b.reset(250);
    EXPECT_EQ(sa.observation, sb.observation);
    EXPECT_EQ(sa.center_tick, sb.center_tick);
    EXPECT_EQ(sa.value, sb.value);
}

TEST(Env, ResetPreconditions) {
    const auto m = market();
    LiquidityEnv e(config(), m, {0, 400});
    EXPECT_THROW(e.reset(0), WarmupError);
    EXPECT_THROW(e.reset(200), WarmupError);
    EXPECT_NO_THROW(e.reset(201));
    EXPECT_THROW(e.reset(351), RangeError);
    EXPECT_NO_THROW(e.reset(350));
    EXPECT_EQ(e.first_offset(), 201u);
    EXPECT_EQ(e.offset_count(), 150u);
    // A split that starts after the warm-up needs no offset.
    LiquidityEnv later(config(), m, {300, 400});
    EXPECT_EQ(later.first_offset(), 0u);
    EXPECT_NO_THROW(later.reset(0));
    EXPECT_THROW(LiquidityEnv(config(), m, {0, 401}), RangeError);
}

TEST(Env, StepErrors) {
    const auto m = market();
    LiquidityEnv e(config(2), m, {0, 400});
    EXPECT_THROW(e.step(0), DomainError);
    e.reset(e.first_offset());
    EXPECT_THROW(e.step(-1), DomainError);
    EXPECT_THROW(e.step(11), DomainError);
    e.step(0);
    const auto r = e.step(0);
    EXPECT_TRUE(r.done);
    EXPECT_THROW(e.step(0), DomainError);
}

TEST(Env, RewardMatchesLedger) {
    const auto m = market();
    LiquidityEnv e(config(), m, {0, 400});
    e.reset(e.first_offset());
    const auto before = *e.state().position;
    const std::size_t hour = e.state().index + 1;
    const auto r = e.step(0);
    const auto ledger = accounting::ledger_over_path(before, 0.003, intra_hour_path(*m, PathModel::CandlePath, hour));
    double fee = 0.0, lvr = 0.0;
    for (const auto& s : ledger) {
        fee += s.fee;
        lvr += s.lvr_increment;
    }
    EXPECT_DOUBLE_EQ(r.info.fee, fee);
    EXPECT_DOUBLE_EQ(r.info.lvr, lvr);
    EXPECT_EQ(r.info.gas, 0.0);
    EXPECT_DOUBLE_EQ(r.reward, fee + lvr);
    EXPECT_DOUBLE_EQ(r.state.cash, fee);
}

TEST(Env, ReallocationConservesWealth) {
    const auto m = market();
    LiquidityEnv e(config(), m, {0, 400});
    e.reset(e.first_offset());
    e.step(0);
    e.step(0);
    const double wealth = e.state().cash + e.state().value;
    const auto r = e.step(3);
    EXPECT_TRUE(r.info.reallocated);
    EXPECT_EQ(r.info.gas, 1.0);
    EXPECT_EQ(r.state.width, 3);
    // Value at the open of the hour equals the invested budget.
    EXPECT_NEAR(r.state.value - r.info.value_change, wealth, 1e-9 * wealth);
    EXPECT_DOUBLE_EQ(r.state.cash, r.info.fee);
    EXPECT_DOUBLE_EQ(r.reward, -1.0 + r.info.fee + r.info.lvr);
}

TEST(Env, RewardDecompositionOverEpisode) {
    const auto m = market();
    for (auto mode : {RewardMode::Hedged, RewardMode::Unhedged}) {
        auto c = config(100);
        c.reward_mode = mode;
        LiquidityEnv e(c, m, {0, 400});
        e.reset(e.first_offset());
        double sum_r = 0.0, fee = 0.0, lvr = 0.0, dv = 0.0;
        int reallocations = 0;
        for (int t = 0; !e.done(); ++t) {
            const auto r = e.step(t % 7 == 0 ? 1 + t % 4 : 0);
            sum_r += r.reward;
            fee += r.info.fee;
            lvr += r.info.lvr;
            dv += r.info.value_change;
            reallocations += r.info.reallocated;
        }
        const double expect = fee - reallocations * c.gas + (mode == RewardMode::Hedged ? lvr : dv);
        EXPECT_NEAR(sum_r, expect, 1e-9);
    }
}

TEST(Env, EpisodeDeterminism) {
    const auto m = market();
    auto run = [&] {
        LiquidityEnv e(config(80), m, {0, 400});
        e.reset(230);
        std::vector<double> rewards;
        for (int t = 0; !e.done(); ++t) rewards.push_back(e.step((t * 5) % 11).reward);
        return rewards;
    };
    EXPECT_EQ(run(), run());
}

TEST(Env, FlatHourHoldIsZero) {
    std::vector<features::Candle> c(260);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] = {1627862400 + static_cast<std::int64_t>(i) * 3600, 1600.0, 1600.0, 1600.0, 1600.0, 10.0};
    }
    auto m = std::make_shared<MarketSeries>(MarketSeries::build(c));
    LiquidityEnv e(config(10), m, {0, 260});
    e.reset(e.first_offset());
    const auto before = e.state();
    const auto r = e.step(0);
    EXPECT_EQ(r.reward, 0.0);
    EXPECT_EQ(r.state.cash, before.cash);
    EXPECT_EQ(r.state.value, before.value);
    EXPECT_EQ(r.state.center_tick, before.center_tick);
    EXPECT_EQ(r.state.clock, before.clock + 1);
}

TEST(Env, RangeExitFeeMatchesBruteForce) {
    // Hour that rallies through the upper bound of a width-1 interval.
    std::vector<features::Candle> c(260);
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double p = 1600.0 * (1.0 + 0.001 * std::sin(0.3 * static_cast<double>(i)));
        c[i] = {1627862400 + static_cast<std::int64_t>(i) * 3600, p, p * 1.001, p * 0.999, p, 10.0};
        if (i > 0) c[i].open = c[i - 1].close;
        c[i].high = std::max({c[i].open, c[i].close}) * 1.001;
        c[i].low = std::min({c[i].open, c[i].close}) * 0.999;
    }
    const double base = c[250].close;
    c[251].open = base;
    c[251].close = base * 1.02;
    c[251].high = base * 1.03;
    c[251].low = base * 0.998;
    auto m = std::make_shared<MarketSeries>(MarketSeries::build(c));
    LiquidityEnv e(config(5), m, {0, 260});
    e.reset(251);
    const auto pos = *e.state().position;
    const auto path = intra_hour_path(*m, PathModel::CandlePath, 251);
    ASSERT_GT(path[3], pos.price_upper);
    const auto r = e.step(0);
    const double brute = verify::brute_force_fee_over_path(pos, 0.003, path, 10'000);
    EXPECT_NEAR(r.info.fee, brute, 1e-6 * brute);
    EXPECT_LT(r.info.lvr, 0.0);
}

TEST(Env, PathModels) {
    const auto m = market();
    const auto& k = m->candles[300];
    const auto cp = intra_hour_path(*m, PathModel::CandlePath, 300);
    ASSERT_EQ(cp.size(), 5u);
    EXPECT_EQ(cp[0], m->candles[299].close);
    EXPECT_EQ(cp[1], k.open);
    EXPECT_EQ(cp[4], k.close);
    if (k.close >= k.open) {
        EXPECT_EQ(cp[2], k.low);
        EXPECT_EQ(cp[3], k.high);
    } else {
        EXPECT_EQ(cp[2], k.high);
        EXPECT_EQ(cp[3], k.low);
    }
    EXPECT_EQ(intra_hour_path(*m, PathModel::OpenClose, 300).size(), 3u);
    EXPECT_THROW(intra_hour_path(*m, PathModel::OpenClose, 0), RangeError);
}

TEST(Env, PathModelsAgreeOnMonotoneCandles) {
    marketdata::GbmParams g;
    g.hours = 300;
    g.intra_hour_factor = 0.0;  // high and low sit on the endpoints
    auto candles = marketdata::synth_gbm(g);
    auto m = std::make_shared<MarketSeries>(MarketSeries::build(candles));
    auto a_cfg = config(60), b_cfg = config(60);
    b_cfg.path_model = PathModel::OpenClose;
    LiquidityEnv a(a_cfg, m, {0, 300}), b(b_cfg, m, {0, 300});
    a.reset(220);
    b.reset(220);
    for (int t = 0; t < 60; ++t) {
        const int act = t % 9 == 0 ? 2 : 0;
        const double ra = a.step(act).reward;
        const double rb = b.step(act).reward;
        EXPECT_EQ(ra, rb) << t;
    }
}

TEST(Env, SwapReplayPath) {
    marketdata::GbmParams g;
    g.hours = 260;
    auto candles = marketdata::synth_gbm(g);
    const auto ts = candles[255].timestamp;
    std::vector<marketdata::SwapEvent> swaps{{ts + 10, 1601.0, marketdata::SwapDirection::Up},
                                             {ts + 20, 1599.0, marketdata::SwapDirection::Down},
                                             {ts + 3600, 1700.0, marketdata::SwapDirection::Up}};
    MarketSeries m = MarketSeries::build(candles, {}, swaps);
    const auto p = intra_hour_path(m, PathModel::SwapReplay, 255);
    ASSERT_EQ(p.size(), 5u);
    EXPECT_EQ(p[2], 1601.0);
    EXPECT_EQ(p[3], 1599.0);
    EXPECT_EQ(p[4], candles[255].close);
}

TEST(Env, RelativePnl) {
    EXPECT_EQ(relative_pnl(std::vector<double>{0, 0, 0}, 250.0), 0.0);
    EXPECT_NEAR(relative_pnl(std::vector<double>{200.0, 173.0}, 1000.0), 0.373, 1e-15);
    EXPECT_NEAR(relative_pnl(std::vector<double>{600.0, 519.0}, 1000.0), 3 * 0.373, 1e-12);
    EXPECT_THROW(relative_pnl(std::vector<double>{1.0}, 0.0), DomainError);
}

TEST(Env, TraceCsvHeader) {
    std::ostringstream out;
    write_trace_csv(out, {});
    EXPECT_EQ(out.str(), "t,action,fee,lvr,gas,dv,reward,c,m,w,l,close\n");
}

TEST(Episodes, RandomStartsStayAdmissible) {
    const auto m = market();
    LiquidityEpisodes ep(config(50), m, {0, 400}, true);
    std::set<std::size_t> starts;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        ep.reset(seed);
        const std::size_t idx = ep.env().state().index;
        EXPECT_GE(idx, 200u);
        EXPECT_LE(idx + 1 + 50, 400u);
        starts.insert(idx);
    }
    EXPECT_GT(starts.size(), 50u);
    ep.reset(7);
    const auto a = ep.env().state().index;
    ep.reset(7);
    EXPECT_EQ(ep.env().state().index, a);
    EXPECT_THROW(LiquidityEpisodes(config(250), m, {0, 400}, true), RangeError);
}

TEST(EnvConfigTest, Validation) {
    EnvConfig c;
    EXPECT_NO_THROW(c.validate());
    c.l0 = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.max_width = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.episode_length = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_path_model("bezier"), ConfigError);
    EXPECT_EQ(parse_reward_mode("unhedged"), RewardMode::Unhedged);
}
