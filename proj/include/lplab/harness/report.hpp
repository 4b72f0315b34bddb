// Per-run reports, aggregation across runs, and the printed-table arithmetic
// check.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lplab/amm.hpp"
#include "lplab/env.hpp"

namespace lplab::harness {

// All relative_* values are totals divided by l0; relative_lvr is a magnitude.
struct Report {
    std::string method;
    std::string pool;
    amm::PoolSpec pool_spec;
    std::string period;  // "1".."4" or "custom"
    std::string split;
    double l0 = 0.0;
    std::string reward_mode;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t hours = 0;
    std::size_t reallocations = 0;
    bool oracle_tuned = false;

    double relative_fee = 0.0;
    double relative_gas = 0.0;
    double relative_lvr = 0.0;
    double relative_dv = 0.0;
    double relative_hedge = 0.0;
    double relative_pnl = 0.0;  // sum of rewards / l0

    std::vector<std::size_t> action_histogram;  // index = action

    // Hedged: pnl = fee - gas - lvr. Unhedged: pnl = fee - gas + dv.
    // Throws ValidationError naming the row when violated.
    void check_identity(double tol = 1e-9) const;
};

struct ReportMeta {
    std::string method;
    std::string pool;
    amm::PoolSpec pool_spec;
    std::string period;
    std::string split;
    double l0 = 0.0;
    env::RewardMode reward_mode = env::RewardMode::Hedged;
    std::uint64_t seed = 0;
    std::string config_hash;
    bool oracle_tuned = false;
    int action_count = 0;
};

Report make_report(const ReportMeta& meta, std::span<const env::TraceRow> trace);

// One row per report.
void write_reports_csv(std::ostream& out, std::span<const Report> reports);
std::vector<Report> read_reports_csv(std::istream& in);

// Columns action,count.
void write_action_histogram_csv(std::ostream& out, const Report& report);

// Table-5 layout: pool,l0,period,metric,<one column per method>, and the
// per-period / running-sum relative PnL series for the cumulative plot.
struct Aggregate {
    std::vector<std::string> methods;
    std::vector<Report> rows;  // sorted by pool, l0, period, method
};

// Refuses runs whose pool specs disagree or that repeat a
// (pool, l0, period, method) cell.
Aggregate aggregate_reports(std::vector<Report> reports);
void write_table_csv(std::ostream& out, const Aggregate& agg);
// Columns pool,l0,method,period,relative_pnl,cumulative_relative_pnl.
void write_cumulative_csv(std::ostream& out, const Aggregate& agg);

// Printed three-decimal table rows.
struct PrintedRow {
    std::string pool;
    int period = 0;
    std::string method;
    std::string fee, gas, lvr, pnl;
};

std::vector<PrintedRow> read_printed_table(std::istream& in);

// Exact decimal string to thousandths; more than three decimals is a DecodeError.
std::int64_t parse_thousandths(const std::string& text);

struct PrintedCheck {
    std::int64_t computed = 0;  // fee - gas - lvr in thousandths
    std::int64_t printed = 0;
    bool exact() const { return computed == printed; }
};

PrintedCheck check_printed_row(const PrintedRow& row);

}  // namespace lplab::harness
