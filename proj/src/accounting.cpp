#include "lplab/accounting.hpp"

#include <cmath>
#include <ostream>

#include "lplab/errors.hpp"

namespace lplab::accounting {

LedgerStep ledger_step(const amm::LiquidityPosition& pos, double fee_tier, double p_before, double p_after) {
    const amm::Reserves before = amm::reserves(pos, p_before);
    const amm::Reserves after = amm::reserves(pos, p_after);
    LedgerStep s;
    s.p_before = p_before;
    s.p_after = p_after;
    s.fee = fee_tier > 0.0 ? amm::fee_one_move(pos, fee_tier, p_before, p_after) : 0.0;
    s.lvr_increment = p_after * (after.x - before.x) + (after.y - before.y);
    s.hedge_pnl = -before.x * (p_after - p_before);
    s.value_change = (p_after * after.x + after.y) - (p_before * before.x + before.y);
    return s;
}

std::vector<LedgerStep> ledger_over_path(const amm::LiquidityPosition& pos, double fee_tier,
                                         std::span<const double> path) {
    if (path.empty()) throw DomainError("ledger: empty path");
    std::vector<LedgerStep> steps;
    steps.reserve(path.size() - 1);
    for (std::size_t i = 1; i < path.size(); ++i) {
        steps.push_back(ledger_step(pos, fee_tier, path[i - 1], path[i]));
    }
    return steps;
}

LvrResult lvr_over_path(const amm::LiquidityPosition& pos, std::span<const double> path) {
    if (path.empty()) throw DomainError("lvr_over_path: empty path");
    LvrResult result;
    result.steps = ledger_over_path(pos, 0.0, path);
    for (const auto& s : result.steps) result.lvr_total += s.lvr_increment;
    return result;
}

double hedge_pnl_over_path(const amm::LiquidityPosition& pos, std::span<const double> path) {
    if (path.empty()) throw DomainError("hedge_pnl_over_path: empty path");
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        total += -amm::reserves(pos, path[i - 1]).x * (path[i] - path[i - 1]);
    }
    return total;
}

double instantaneous_lvr_rate(const amm::LiquidityPosition& pos, double price, double sigma) {
    if (!(price > 0.0)) throw DomainError("instantaneous_lvr_rate: price must be positive");
    if (!(sigma > 0.0)) throw DomainError("instantaneous_lvr_rate: sigma must be positive");
    if (price < pos.price_lower || price > pos.price_upper) return 0.0;
    // V'' = -L / (2 p^1.5)
    return -pos.liquidity * sigma * sigma * std::sqrt(price) / 2.0;
}

PeriodSummary summarize(std::span<const LedgerStep> steps, std::size_t gas_events, double gas_unit_cost) {
    PeriodSummary s;
    double lvr = 0.0;
    for (const auto& step : steps) {
        s.total_fee += step.fee;
        lvr += step.lvr_increment;
        s.total_hedge_pnl += step.hedge_pnl;
        s.total_value_change += step.value_change;
    }
    s.total_lvr_magnitude = -lvr;
    s.total_gas = gas_unit_cost * static_cast<double>(gas_events);
    s.pnl_hedged = s.total_fee - s.total_gas - s.total_lvr_magnitude;
    s.pnl_unhedged = s.total_fee - s.total_gas + s.total_value_change;
    return s;
}

void write_ledger_csv(std::ostream& out, std::span<const LedgerStep> steps) {
    out << "t,p_before,p_after,fee,lvr,hedge_pnl,dv\n";
    out.precision(17);
    for (std::size_t t = 0; t < steps.size(); ++t) {
        const auto& s = steps[t];
        out << t << ',' << s.p_before << ',' << s.p_after << ',' << s.fee << ',' << s.lvr_increment << ','
            << s.hedge_pnl << ',' << s.value_change << '\n';
    }
}

}  // namespace lplab::accounting
