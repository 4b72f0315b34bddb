#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lplab/accounting.hpp"
#include "lplab/errors.hpp"
#include "lplab/verify/oracles.hpp"

using namespace lplab;
using namespace lplab::accounting;

namespace {

amm::LiquidityPosition unit_position() { return amm::LiquidityPosition::from_prices(1.0, 4.0, 1.0); }

double value_sum(const amm::LiquidityPosition& pos, const std::vector<double>& path) {
    double dv = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) dv += amm::value_change(pos, path[i - 1], path[i]);
    return dv;
}

}  // namespace

TEST(Lvr, Examples) {
    const auto pos = unit_position();
    EXPECT_EQ(lvr_over_path(pos, std::vector<double>{2.25, 2.25}).lvr_total, 0.0);
    EXPECT_NEAR(lvr_over_path(pos, std::vector<double>{2.25, 1.0}).lvr_total, -1.0 / 6.0, 1e-15);
    // Second leg: V(2.25) - V(1) - x(1)·1.25 = 0.375 - 0.625 = -0.25.
    const auto two = lvr_over_path(pos, std::vector<double>{2.25, 1.0, 2.25});
    EXPECT_NEAR(two.lvr_total, -5.0 / 12.0, 1e-15);
    ASSERT_EQ(two.steps.size(), 2u);
    EXPECT_NEAR(two.steps[1].lvr_increment, -0.25, 1e-15);
    EXPECT_THROW(lvr_over_path(pos, std::vector<double>{}), DomainError);
}

TEST(Lvr, SingletonPathIsZero) {
    const auto r = lvr_over_path(unit_position(), std::vector<double>{3.0});
    EXPECT_EQ(r.lvr_total, 0.0);
    EXPECT_TRUE(r.steps.empty());
}

TEST(Lvr, FinerLegIsWeaklyCloserToZero) {
    // Sub-sampling a monotone leg can only raise the LVR towards zero.
    const auto pos = unit_position();
    const double coarse = lvr_over_path(pos, std::vector<double>{2.25, 1.0}).lvr_total;
    std::vector<double> fine;
    for (int k = 0; k <= 1000; ++k) fine.push_back(2.25 - 1.25 * k / 1000.0);
    const double refined = lvr_over_path(pos, fine).lvr_total;
    EXPECT_GE(refined, coarse);
    EXPECT_LE(refined, 0.0);
}

TEST(Hedge, Examples) {
    const auto pos = unit_position();
    EXPECT_EQ(hedge_pnl_over_path(pos, std::vector<double>{2.0, 2.0, 2.0}), 0.0);
    EXPECT_NEAR(hedge_pnl_over_path(pos, std::vector<double>{2.25, 1.0}), 0.2083333333333333, 1e-15);
    EXPECT_THROW(hedge_pnl_over_path(pos, std::vector<double>{}), DomainError);
}

TEST(Hedge, IdentityOnRandomPaths) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto pos = verify::random_position(rng);
        const auto path = verify::random_path(rng, 1600.0, 12, 0.03);
        const double lvr = lvr_over_path(pos, path).lvr_total;
        const double hedge = hedge_pnl_over_path(pos, path);
        const double dv = value_sum(pos, path);
        const double scale = std::max({std::abs(dv), std::abs(hedge), std::abs(lvr), 1e-300});
        // hedge = -sum x dp, so dv = lvr - hedge.
        EXPECT_NEAR(hedge, lvr - dv, 1e-9 * scale);
        EXPECT_NEAR(-hedge, verify::rebalancing_pnl(pos, path), 1e-12 * scale);
    }
}

TEST(Lvr, TwoFormsAgree) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 2000; ++i) {
        const auto pos = verify::random_position(rng);
        const auto path = verify::random_path(rng, 1600.0, 10, 0.04);
        const auto r = lvr_over_path(pos, path);
        for (const auto& s : r.steps) {
            const double v_form = amm::value_change(pos, s.p_before, s.p_after) -
                                  amm::reserves(pos, s.p_before).x * (s.p_after - s.p_before);
            EXPECT_NEAR(s.lvr_increment, v_form, 1e-9 * std::max(1.0, std::abs(v_form)));
            EXPECT_LE(s.lvr_increment, 1e-12);
        }
    }
}

TEST(Ledger, StepFieldsConsistent) {
    std::mt19937_64 rng(13);
    const auto pos = verify::random_position(rng);
    const auto path = verify::random_path(rng, 1600.0, 20, 0.03);
    const auto steps = ledger_over_path(pos, 0.003, path);
    ASSERT_EQ(steps.size(), path.size() - 1);
    for (const auto& s : steps) {
        EXPECT_NEAR(s.value_change + s.hedge_pnl, s.lvr_increment, 1e-9 * std::max(1.0, std::abs(s.value_change)));
        EXPECT_DOUBLE_EQ(s.fee, amm::fee_one_move(pos, 0.003, s.p_before, s.p_after));
        EXPECT_DOUBLE_EQ(s.hedge_pnl, -amm::reserves(pos, s.p_before).x * (s.p_after - s.p_before));
    }
}

TEST(Rate, Examples) {
    const auto pos = unit_position();
    EXPECT_EQ(instantaneous_lvr_rate(pos, 4.41, 0.1), 0.0);
    EXPECT_EQ(instantaneous_lvr_rate(pos, 0.81, 0.1), 0.0);
    EXPECT_NEAR(instantaneous_lvr_rate(pos, 2.25, 0.1), -0.0075, 1e-15);
    EXPECT_NEAR(instantaneous_lvr_rate(pos, 1.0, 0.1), -0.005, 1e-15);
    EXPECT_NEAR(instantaneous_lvr_rate(pos, 4.0, 0.1), -0.01, 1e-15);
    EXPECT_THROW(instantaneous_lvr_rate(pos, 0.0, 0.1), DomainError);
    EXPECT_THROW(instantaneous_lvr_rate(pos, 1.0, 0.0), DomainError);
}

TEST(Rate, NeverPositive) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        const auto pos = verify::random_position(rng);
        EXPECT_LE(instantaneous_lvr_rate(pos, 1600.0 * std::exp(u(rng) - 0.5), 0.01 + u(rng)), 0.0);
    }
}

TEST(Rate, MatchesSmallStepLedger) {
    // For a symmetric +/- h move, LVR per step ~ rate·dt with sigma^2 dt = (h/p)^2.
    const auto pos = unit_position();
    const double p = 2.25, h = 1e-4;
    const double lvr = lvr_over_path(pos, std::vector<double>{p, p + h}).lvr_total +
                       lvr_over_path(pos, std::vector<double>{p, p - h}).lvr_total;
    const double rate = instantaneous_lvr_rate(pos, p, h / p);
    EXPECT_NEAR(lvr, rate, 1e-5 * std::abs(rate));
}

TEST(Summary, Examples) {
    const auto empty = summarize({}, 0, 1.0);
    EXPECT_EQ(empty.total_fee, 0.0);
    EXPECT_EQ(empty.pnl_hedged, 0.0);
    EXPECT_EQ(empty.pnl_unhedged, 0.0);

    LedgerStep s;
    s.fee = 0.3;
    s.lvr_increment = -0.1;
    const auto one = summarize(std::vector<LedgerStep>{s}, 1, 1.0);
    EXPECT_NEAR(one.pnl_hedged, -0.8, 1e-15);
    EXPECT_EQ(one.total_gas, 1.0);
    EXPECT_NEAR(one.total_lvr_magnitude, 0.1, 1e-15);

    // Relative figures scaled by l0 = 1000.
    LedgerStep t;
    t.fee = 691.0;
    t.lvr_increment = -205.0;
    const auto table = summarize(std::vector<LedgerStep>{t}, 113, 1.0);
    EXPECT_NEAR(table.pnl_hedged / 1000.0, 0.373, 1e-12);
}

TEST(Summary, Identities) {
    std::mt19937_64 rng(15);
    const auto pos = verify::random_position(rng);
    const auto steps = ledger_over_path(pos, 0.003, verify::random_path(rng, 1600.0, 50, 0.02));
    const auto s = summarize(steps, 7, 1.5);
    EXPECT_NEAR(s.pnl_hedged, s.total_fee - s.total_gas - s.total_lvr_magnitude, 1e-9);
    EXPECT_NEAR(s.pnl_unhedged, s.total_fee - s.total_gas + s.total_value_change, 1e-9);
    EXPECT_DOUBLE_EQ(s.total_gas, 10.5);
}

TEST(Ledger, CsvColumns) {
    const auto steps = ledger_over_path(unit_position(), 0.003, std::vector<double>{2.25, 1.0, 2.0});
    std::ostringstream out;
    write_ledger_csv(out, steps);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,p_before,p_after,fee,lvr,hedge_pnl,dv");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 2);
}
