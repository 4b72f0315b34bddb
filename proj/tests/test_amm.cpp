#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lplab/amm.hpp"
#include "lplab/errors.hpp"
#include "lplab/verify/oracles.hpp"

using namespace lplab;
using namespace lplab::amm;

namespace {

LiquidityPosition unit_position() { return LiquidityPosition::from_prices(1.0, 4.0, 1.0); }

}  // namespace

TEST(Ticks, Basics) {
    EXPECT_EQ(tick_to_price(0), 1.0);
    EXPECT_NEAR(price_to_tick(std::pow(1.0001, 100)), 100.0, 1e-9);
    // 40-digit evaluation of 1.0001^60.
    EXPECT_NEAR(tick_to_price(60), 1.0060177342688182, 1e-15);
    EXPECT_THROW(price_to_tick(0.0), DomainError);
    EXPECT_THROW(price_to_tick(-1.0), DomainError);
}

TEST(Ticks, RoundTrip) {
    for (Tick i = -887220; i <= 887220; i += 7919) {
        EXPECT_NEAR(price_to_tick(tick_to_price(i)), static_cast<double>(i), 1e-9);
    }
}

TEST(Ticks, SnapTiesAwayFromZero) {
    EXPECT_EQ(snap_tick(30.0, 60), 60);
    EXPECT_EQ(snap_tick(-30.0, 60), -60);
    EXPECT_EQ(snap_tick(29.9, 60), 0);
    EXPECT_EQ(snap_tick(-89.9, 60), -60);
    EXPECT_EQ(snap_tick(74105.3, 60), 74100);
}

TEST(PoolSpecTest, Validation) {
    EXPECT_NO_THROW(PoolSpec{}.validate());
    EXPECT_NO_THROW(PoolSpec::for_fee_tier(0.0005).validate());
    EXPECT_EQ(PoolSpec::for_fee_tier(0.01).tick_spacing, 200);
    EXPECT_THROW((PoolSpec{0.003, 10, 0}.validate()), ConfigError);
    EXPECT_NO_THROW((PoolSpec{0.003, 10, 0}.validate(true)));
    EXPECT_THROW((PoolSpec{1.0, 60, 0}.validate(true)), ConfigError);
    EXPECT_THROW((PoolSpec{0.003, 0, 0}.validate(true)), ConfigError);
}

TEST(Position, Invariants) {
    EXPECT_THROW(LiquidityPosition::from_prices(2.0, 1.0, 1.0), DomainError);
    EXPECT_THROW(LiquidityPosition::from_prices(1.0, 2.0, -1.0), DomainError);
    const PoolSpec spec;
    EXPECT_THROW(LiquidityPosition::from_ticks({0, 90}, 1.0, spec), DomainError);
    const auto p = LiquidityPosition::from_ticks({-120, 60}, 1.0, spec);
    EXPECT_DOUBLE_EQ(p.price_lower, tick_to_price(-120));
    EXPECT_DOUBLE_EQ(p.price_upper, tick_to_price(60));
}

TEST(Reserves, Examples) {
    const auto pos = unit_position();
    auto r = reserves(pos, 0.5);
    EXPECT_DOUBLE_EQ(r.x, 0.5);
    EXPECT_DOUBLE_EQ(r.y, 0.0);
    r = reserves(pos, 2.25);
    EXPECT_NEAR(r.x, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(r.y, 0.5, 1e-15);
    r = reserves(pos, 9.0);
    EXPECT_DOUBLE_EQ(r.x, 0.0);
    EXPECT_DOUBLE_EQ(r.y, 1.0);
    EXPECT_THROW(reserves(pos, 0.0), DomainError);
}

TEST(Value, Examples) {
    const auto pos = unit_position();
    EXPECT_NEAR(position_value(pos, 2.25), 0.875, 1e-15);
    EXPECT_NEAR(position_value(pos, 1.0), 0.5, 1e-15);
    EXPECT_NEAR(position_value(pos, 4.0), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(value_change(pos, 2.25, 2.25), 0.0);
    EXPECT_NEAR(value_change(pos, 2.25, 1.0), -0.375, 1e-15);
    EXPECT_NEAR(value_change(pos, 1.0, 4.0), 0.5, 1e-15);
}

TEST(Fees, Examples) {
    const auto pos = unit_position();
    const double k = 0.003 / 0.997;
    EXPECT_NEAR(fee_one_move(pos, 0.003, 1.0, 1.21), k * 0.1, 1e-18);
    EXPECT_NEAR(fee_one_move(pos, 0.003, 1.0, 1.21), 3.0090e-4, 5e-9);
    EXPECT_EQ(fee_one_move(pos, 0.003, 0.5, 0.9), 0.0);
    EXPECT_NEAR(fee_one_move(pos, 0.003, 2.25, 9.0), k * 0.5, 1e-18);
    EXPECT_NEAR(fee_one_move(pos, 0.003, 2.25, 9.0), 1.5045e-3, 5e-8);

    const std::vector<double> one{2.0};
    EXPECT_EQ(fee_over_path(pos, 0.003, one), 0.0);
    const std::vector<double> up{1.0, 1.21};
    EXPECT_DOUBLE_EQ(fee_over_path(pos, 0.003, up), fee_one_move(pos, 0.003, 1.0, 1.21));
    // Up leg 3.0090e-4 plus down leg (1 - 1/1.1)·k = 2.7354e-4.
    const std::vector<double> round{1.0, 1.21, 1.0};
    EXPECT_NEAR(fee_over_path(pos, 0.003, round), 5.7445e-4, 5e-9);
    EXPECT_THROW(fee_over_path(pos, 0.003, std::vector<double>{}), DomainError);
}

TEST(Fees, BruteForceOracle) {
    const auto pos = unit_position();
    for (auto [a, b] : std::vector<std::pair<double, double>>{{2.25, 9.0}, {0.5, 3.0}, {9.0, 0.3}, {3.0, 1.5}}) {
        const double closed = fee_one_move(pos, 0.003, a, b);
        const double brute = verify::brute_force_fee(pos, 0.003, a, b, 10'000);
        EXPECT_NEAR(closed, brute, 1e-6 * closed) << a << " -> " << b;
    }
}

TEST(Fees, BoundaryTouchEarnsNothing) {
    const auto pos = unit_position();
    EXPECT_EQ(fee_one_move(pos, 0.003, 0.5, 1.0), 0.0);
    EXPECT_EQ(fee_one_move(pos, 0.003, 4.0, 9.0), 0.0);
}

TEST(Budget, Examples) {
    EXPECT_EQ(liquidity_for_budget(0.0, 2.0, 1.0, 4.0), 0.0);
    EXPECT_NEAR(liquidity_for_budget(0.875, 2.25, 1.0, 4.0), 1.0, 1e-15);
    EXPECT_NEAR(liquidity_for_budget(1.0, 9.0, 1.0, 4.0), 1.0, 1e-15);
    EXPECT_NEAR(liquidity_for_budget(0.5, 0.25, 1.0, 4.0), 4.0, 1e-15);
    EXPECT_THROW(liquidity_for_budget(-1.0, 2.0, 1.0, 4.0), DomainError);
}

// ---- properties over random positions ----

class AmmProperty : public ::testing::Test {
protected:
    std::mt19937_64 rng{20240601};
    std::uniform_real_distribution<double> u{0.0, 1.0};

    LiquidityPosition random_pos() {
        const double pa = std::exp(-2.0 + 4.0 * u(rng));
        const double pb = pa * (1.0 + 3.0 * u(rng) + 1e-3);
        return LiquidityPosition::from_prices(pa, pb, std::exp(-3.0 + 6.0 * u(rng)));
    }
};

TEST_F(AmmProperty, BranchContinuity) {
    for (int i = 0; i < 2000; ++i) {
        const auto pos = random_pos();
        for (double edge : {pos.price_lower, pos.price_upper}) {
            const double lo = edge * (1.0 - 1e-13), hi = edge * (1.0 + 1e-13);
            const double v = position_value(pos, edge);
            EXPECT_NEAR(position_value(pos, lo), v, 1e-9 * v);
            EXPECT_NEAR(position_value(pos, hi), v, 1e-9 * v);
            EXPECT_NEAR(reserves(pos, lo).x * edge, reserves(pos, hi).x * edge, 1e-9 * v);
            EXPECT_NEAR(reserves(pos, lo).y, reserves(pos, hi).y, 1e-9 * v);
        }
    }
}

TEST_F(AmmProperty, UpwardFeeAdditivity) {
    for (int i = 0; i < 2000; ++i) {
        const auto pos = random_pos();
        double p[3];
        for (double& x : p) x = pos.price_lower * std::exp(-0.5 + 2.0 * u(rng));
        std::sort(p, p + 3);
        const double whole = fee_one_move(pos, 0.003, p[0], p[2]);
        const double parts = fee_one_move(pos, 0.003, p[0], p[1]) + fee_one_move(pos, 0.003, p[1], p[2]);
        EXPECT_NEAR(whole, parts, 1e-12 * std::max(whole, 1e-300));
    }
}

TEST_F(AmmProperty, DownwardTokenFeeAdditivity) {
    // Downward fees are paid in X and valued at the end price, so additivity
    // holds for the X amount.
    for (int i = 0; i < 2000; ++i) {
        const auto pos = random_pos();
        double p[3];
        for (double& x : p) x = pos.price_lower * std::exp(-0.5 + 2.0 * u(rng));
        std::sort(p, p + 3, std::greater<>());
        auto x_fee = [&](double a, double b) {
            const double f = fee_one_move(pos, 0.003, a, b);
            return f == 0.0 ? 0.0 : f / std::clamp(b, pos.price_lower, pos.price_upper);
        };
        const double whole = x_fee(p[0], p[2]);
        EXPECT_NEAR(whole, x_fee(p[0], p[1]) + x_fee(p[1], p[2]), 1e-12 * std::max(whole, 1e-300));
    }
}

TEST_F(AmmProperty, FeeNonNegative) {
    for (int i = 0; i < 5000; ++i) {
        const auto pos = random_pos();
        const double a = std::exp(-3.0 + 6.0 * u(rng)), b = std::exp(-3.0 + 6.0 * u(rng));
        EXPECT_GE(fee_one_move(pos, 0.003, a, b), 0.0);
    }
}

TEST_F(AmmProperty, Concavity) {
    for (int i = 0; i < 5000; ++i) {
        const auto pos = random_pos();
        double p1 = std::exp(-3.0 + 6.0 * u(rng)), p2 = std::exp(-3.0 + 6.0 * u(rng));
        if (p1 > p2) std::swap(p1, p2);
        const double lam = u(rng);
        const double mid = position_value(pos, lam * p1 + (1 - lam) * p2);
        const double chord = lam * position_value(pos, p1) + (1 - lam) * position_value(pos, p2);
        EXPECT_GE(mid, chord - 1e-12 * std::max(1.0, chord));
    }
}

TEST_F(AmmProperty, MonotoneValue) {
    for (int i = 0; i < 2000; ++i) {
        const auto pos = random_pos();
        double p1 = std::exp(-3.0 + 6.0 * u(rng)), p2 = std::exp(-3.0 + 6.0 * u(rng));
        if (p1 > p2) std::swap(p1, p2);
        EXPECT_LE(position_value(pos, p1), position_value(pos, p2) * (1 + 1e-15));
    }
}

TEST_F(AmmProperty, ValueReserveConsistency) {
    for (int i = 0; i < 2000; ++i) {
        const auto pos = random_pos();
        const double p = std::exp(-3.0 + 6.0 * u(rng));
        const auto r = reserves(pos, p);
        EXPECT_EQ(position_value(pos, p), p * r.x + r.y);
    }
}

TEST_F(AmmProperty, BudgetRoundTrip) {
    for (int i = 0; i < 5000; ++i) {
        const auto pos = random_pos();
        const double p = std::exp(-3.0 + 6.0 * u(rng));
        const double B = std::exp(-5.0 + 15.0 * u(rng));
        const double L = liquidity_for_budget(B, p, pos.price_lower, pos.price_upper);
        const auto sized = LiquidityPosition::from_prices(pos.price_lower, pos.price_upper, L);
        EXPECT_NEAR(position_value(sized, p), B, 1e-9 * B);
    }
}
