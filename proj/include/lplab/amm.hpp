// Concentrated-liquidity pool mathematics.
//
// Prices are decimal-adjusted reals (Y per X). A position holds L liquidity
// units over [p_a, p_b]; every formula here is a pure function of the
// position and one or two prices.
#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace lplab::amm {

using Tick = std::int64_t;

// Price growth factor of one tick.
inline constexpr double kTickBase = 1.0001;

struct PoolSpec {
    double fee_tier = 0.003;
    int tick_spacing = 60;
    // Power of ten applied to the raw on-chain price to obtain the human price.
    int decimal_shift = 0;

    // Standard (fee tier, spacing) pairs: 1% / 200, 0.3% / 60, 0.05% / 10.
    static PoolSpec for_fee_tier(double fee_tier, int decimal_shift = 0);

    // Throws ConfigError. Non-standard pairs require allow_custom.
    void validate(bool allow_custom = false) const;

    // δ / (1 − δ): fee earned per unit of token flowing into the pool.
    double fee_multiplier() const { return fee_tier / (1.0 - fee_tier); }

    bool operator==(const PoolSpec&) const = default;
};

struct TickRange {
    Tick lower = 0;
    Tick upper = 0;

    bool operator==(const TickRange&) const = default;
};

struct LiquidityPosition {
    double price_lower = 1.0;
    double price_upper = 1.0;
    double liquidity = 0.0;
    // Set when the bounds came from ticks.
    std::optional<TickRange> ticks;

    // Bounds from arbitrary prices; 0 < price_lower < price_upper, L >= 0.
    static LiquidityPosition from_prices(double price_lower, double price_upper, double liquidity);

    // Bounds from ticks; both must be multiples of spec.tick_spacing.
    static LiquidityPosition from_ticks(TickRange range, double liquidity, const PoolSpec& spec);

    bool in_range(double price) const { return price >= price_lower && price <= price_upper; }
};

struct Reserves {
    double x = 0.0;  // volatile token X
    double y = 0.0;  // stable token Y
};

double tick_to_price(Tick tick);

// Real-valued tick index of a price; exact inverse of tick_to_price.
double price_to_tick(double price);

// Nearest multiple of spacing, ties away from zero.
Tick snap_tick(double tick, int spacing);

Reserves reserves(const LiquidityPosition& pos, double price);

// V(p) = p·x(p) + y(p), in Y units.
double position_value(const LiquidityPosition& pos, double price);

// Trading fee (Y units) earned over one swap moving the price from `from` to
// `to`. Only the part of the move inside [p_a, p_b] earns; a downward move's
// X-denominated fee is valued at the clipped end price.
double fee_one_move(const LiquidityPosition& pos, double fee_tier, double from, double to);

// Sum of fee_one_move over consecutive pairs. Empty path is a DomainError.
double fee_over_path(const LiquidityPosition& pos, double fee_tier, std::span<const double> path);

double value_change(const LiquidityPosition& pos, double from, double to);

// L such that position_value(L, price) == budget.
double liquidity_for_budget(double budget, double price, double price_lower, double price_upper);
double liquidity_for_budget(double budget, double price, TickRange range);

}  // namespace lplab::amm
