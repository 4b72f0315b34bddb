// LVR ledger and hedged/unhedged PnL bookkeeping.
//
// The ledger keeps LVR signed (<= 0). Reports use the positive magnitude so
// that pnl = fee - gas - lvr.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "lplab/amm.hpp"

namespace lplab::accounting {

struct LedgerStep {
    double p_before = 0.0;
    double p_after = 0.0;
    double fee = 0.0;
    double lvr_increment = 0.0;  // <= 0
    double hedge_pnl = 0.0;      // -x(p_before)(p_after - p_before)
    double value_change = 0.0;   // V(p_after) - V(p_before)
};

struct LvrResult {
    double lvr_total = 0.0;
    std::vector<LedgerStep> steps;
};

struct PeriodSummary {
    double total_fee = 0.0;
    double total_lvr_magnitude = 0.0;
    double total_gas = 0.0;
    double total_hedge_pnl = 0.0;
    double total_value_change = 0.0;
    double pnl_hedged = 0.0;
    double pnl_unhedged = 0.0;
};

// One ledger entry for a single move; fee is computed with fee_tier.
LedgerStep ledger_step(const amm::LiquidityPosition& pos, double fee_tier, double p_before, double p_after);

// LVR over a sampled path, using the p_{t+1}[x' - x] + y' - y form. The fee
// field of each step is left at zero; see ledger_over_path for fees.
LvrResult lvr_over_path(const amm::LiquidityPosition& pos, std::span<const double> path);

// Full ledger (fees included) over a path.
std::vector<LedgerStep> ledger_over_path(const amm::LiquidityPosition& pos, double fee_tier,
                                         std::span<const double> path);

// PnL of shorting the rebalancing portfolio, rebalanced at every sample.
double hedge_pnl_over_path(const amm::LiquidityPosition& pos, std::span<const double> path);

// V''(p)·σ²·p²; the in-range branch is used at the exact boundaries.
double instantaneous_lvr_rate(const amm::LiquidityPosition& pos, double price, double sigma);

PeriodSummary summarize(std::span<const LedgerStep> steps, std::size_t gas_events, double gas_unit_cost);

// CSV with columns t,p_before,p_after,fee,lvr,hedge_pnl,dv.
void write_ledger_csv(std::ostream& out, std::span<const LedgerStep> steps);

}  // namespace lplab::accounting
