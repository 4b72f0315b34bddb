#include "lplab/amm.hpp"

#include <cmath>
#include <string>

#include "lplab/errors.hpp"

namespace lplab::amm {
namespace {

const double kLogTickBase = std::log(kTickBase);

void require_positive_price(double p, const char* what) {
    if (!(p > 0.0) || !std::isfinite(p)) {
        throw DomainError(std::string(what) + " must be a positive finite price, got " + std::to_string(p));
    }
}

}  // namespace

PoolSpec PoolSpec::for_fee_tier(double fee_tier, int decimal_shift) {
    PoolSpec spec;
    spec.fee_tier = fee_tier;
    spec.decimal_shift = decimal_shift;
    if (fee_tier == 0.01) {
        spec.tick_spacing = 200;
    } else if (fee_tier == 0.003) {
        spec.tick_spacing = 60;
    } else if (fee_tier == 0.0005) {
        spec.tick_spacing = 10;
    } else {
        throw ConfigError("no standard tick spacing for fee tier " + std::to_string(fee_tier));
    }
    return spec;
}

void PoolSpec::validate(bool allow_custom) const {
    if (!(fee_tier > 0.0 && fee_tier < 1.0)) {
        throw ConfigError("pool.fee_tier must lie in (0, 1)");
    }
    if (tick_spacing < 1) {
        throw ConfigError("pool.tick_spacing must be >= 1");
    }
    if (allow_custom) return;
    const bool standard = (fee_tier == 0.01 && tick_spacing == 200) || (fee_tier == 0.003 && tick_spacing == 60) ||
                          (fee_tier == 0.0005 && tick_spacing == 10);
    if (!standard) {
        throw ConfigError("pool: (fee_tier, tick_spacing) is not a standard pair");
    }
}

LiquidityPosition LiquidityPosition::from_prices(double price_lower, double price_upper, double liquidity) {
    require_positive_price(price_lower, "price_lower");
    require_positive_price(price_upper, "price_upper");
    if (!(price_lower < price_upper)) {
        throw DomainError("position requires price_lower < price_upper");
    }
    if (!(liquidity >= 0.0) || !std::isfinite(liquidity)) {
        throw DomainError("liquidity must be a non-negative finite number");
    }
    return LiquidityPosition{price_lower, price_upper, liquidity, std::nullopt};
}

LiquidityPosition LiquidityPosition::from_ticks(TickRange range, double liquidity, const PoolSpec& spec) {
    if (range.lower >= range.upper) {
        throw DomainError("position requires tick_lower < tick_upper");
    }
    if (range.lower % spec.tick_spacing != 0 || range.upper % spec.tick_spacing != 0) {
        throw DomainError("position ticks must be multiples of the tick spacing");
    }
    auto pos = from_prices(tick_to_price(range.lower), tick_to_price(range.upper), liquidity);
    pos.ticks = range;
    return pos;
}

double tick_to_price(Tick tick) { return std::pow(kTickBase, static_cast<double>(tick)); }

double price_to_tick(double price) {
    require_positive_price(price, "price");
    return std::log(price) / kLogTickBase;
}

Tick snap_tick(double tick, int spacing) {
    // std::round rounds halfway cases away from zero.
    return static_cast<Tick>(std::round(tick / spacing)) * spacing;
}

Reserves reserves(const LiquidityPosition& pos, double price) {
    require_positive_price(price, "price");
    const double L = pos.liquidity;
    const double sa = std::sqrt(pos.price_lower);
    const double sb = std::sqrt(pos.price_upper);
    if (price <= pos.price_lower) {
        return {L * (1.0 / sa - 1.0 / sb), 0.0};
    }
    if (price >= pos.price_upper) {
        return {0.0, L * (sb - sa)};
    }
    const double sp = std::sqrt(price);
    return {L * (1.0 / sp - 1.0 / sb), L * (sp - sa)};
}

double position_value(const LiquidityPosition& pos, double price) {
    const Reserves r = reserves(pos, price);
    return price * r.x + r.y;
}

double fee_one_move(const LiquidityPosition& pos, double fee_tier, double from, double to) {
    require_positive_price(from, "from");
    require_positive_price(to, "to");
    const double c = fee_tier / (1.0 - fee_tier) * pos.liquidity;
    if (from <= to) {
        const double lo = std::max(from, pos.price_lower);
        const double hi = std::min(to, pos.price_upper);
        if (!(lo < hi)) return 0.0;
        return c * (std::sqrt(hi) - std::sqrt(lo));
    }
    const double hi = std::min(from, pos.price_upper);
    const double lo = std::max(to, pos.price_lower);
    if (!(lo < hi)) return 0.0;
    return c * (1.0 / std::sqrt(lo) - 1.0 / std::sqrt(hi)) * lo;
}

double fee_over_path(const LiquidityPosition& pos, double fee_tier, std::span<const double> path) {
    if (path.empty()) throw DomainError("fee_over_path: empty path");
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        total += fee_one_move(pos, fee_tier, path[i - 1], path[i]);
    }
    return total;
}

double value_change(const LiquidityPosition& pos, double from, double to) {
    return position_value(pos, to) - position_value(pos, from);
}

double liquidity_for_budget(double budget, double price, double price_lower, double price_upper) {
    if (!(budget >= 0.0) || !std::isfinite(budget)) {
        throw DomainError("budget must be non-negative and finite");
    }
    require_positive_price(price, "price");
    // Value of one liquidity unit at `price`.
    const auto unit = LiquidityPosition::from_prices(price_lower, price_upper, 1.0);
    return budget / position_value(unit, price);
}

double liquidity_for_budget(double budget, double price, TickRange range) {
    return liquidity_for_budget(budget, price, tick_to_price(range.lower), tick_to_price(range.upper));
}

}  // namespace lplab::amm
