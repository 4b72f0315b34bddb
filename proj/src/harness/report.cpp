#include "lplab/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "lplab/csv.hpp"
#include "lplab/errors.hpp"

namespace lplab::harness {

namespace {

constexpr std::string_view kReportHeader =
    "method,pool,fee_tier,tick_spacing,period,split,l0,reward_mode,seed,config_hash,hours,reallocations,"
    "oracle_tuned,relative_fee,relative_gas,relative_lvr,relative_dv,relative_hedge,relative_pnl";

constexpr std::string_view kPrintedHeader =
    "pool,period,method,relative_fee,relative_gas,relative_lvr,relative_pnl";

std::string row_label(const Report& r) {
    return r.method + "/" + r.pool + "/period " + r.period + "/l0 " + csv::format(r.l0);
}

}  // namespace

void Report::check_identity(double tol) const {
    const bool hedged = reward_mode == "hedged";
    const double rhs = hedged ? relative_fee - relative_gas - relative_lvr : relative_fee - relative_gas + relative_dv;
    const double scale = std::max({1.0, std::abs(relative_fee), std::abs(relative_gas), std::abs(relative_lvr),
                                   std::abs(relative_dv)});
    if (!(std::abs(relative_pnl - rhs) <= tol * scale)) {
        throw ValidationError("report " + row_label(*this) + ": relative_pnl " + csv::format(relative_pnl) +
                              " differs from " + (hedged ? "fee - gas - lvr = " : "fee - gas + dv = ") +
                              csv::format(rhs));
    }
}

Report make_report(const ReportMeta& meta, std::span<const env::TraceRow> trace) {
    if (!(meta.l0 > 0.0)) throw DomainError("make_report: l0 must be positive");
    Report r;
    r.method = meta.method;
    r.pool = meta.pool;
    r.pool_spec = meta.pool_spec;
    r.period = meta.period;
    r.split = meta.split;
    r.l0 = meta.l0;
    r.reward_mode = std::string(env::to_string(meta.reward_mode));
    r.seed = meta.seed;
    r.config_hash = meta.config_hash;
    r.oracle_tuned = meta.oracle_tuned;
    r.hours = trace.size();
    r.action_histogram.assign(static_cast<std::size_t>(std::max(meta.action_count, 1)), 0);

    double fee = 0.0, gas = 0.0, lvr = 0.0, dv = 0.0, hedge = 0.0, pnl = 0.0;
    for (const auto& row : trace) {
        fee += row.info.fee;
        gas += row.info.gas;
        lvr += row.info.lvr;
        dv += row.info.value_change;
        hedge += row.info.hedge_pnl;
        pnl += row.reward;
        if (row.info.reallocated) ++r.reallocations;
        const auto a = static_cast<std::size_t>(std::max(row.info.action, 0));
        if (a >= r.action_histogram.size()) r.action_histogram.resize(a + 1, 0);
        ++r.action_histogram[a];
    }
    r.relative_fee = fee / meta.l0;
    r.relative_gas = gas / meta.l0;
    r.relative_lvr = -lvr / meta.l0;
    r.relative_dv = dv / meta.l0;
    r.relative_hedge = hedge / meta.l0;
    r.relative_pnl = pnl / meta.l0;
    return r;
}

void write_reports_csv(std::ostream& out, std::span<const Report> reports) {
    out << kReportHeader << '\n';
    for (const auto& r : reports) {
        out << r.method << ',' << r.pool << ',' << csv::format(r.pool_spec.fee_tier) << ',' << r.pool_spec.tick_spacing
            << ',' << r.period << ',' << r.split << ',' << csv::format(r.l0) << ',' << r.reward_mode << ',' << r.seed
            << ',' << r.config_hash << ',' << r.hours << ',' << r.reallocations << ',' << (r.oracle_tuned ? 1 : 0)
            << ',' << csv::format(r.relative_fee) << ',' << csv::format(r.relative_gas) << ','
            << csv::format(r.relative_lvr) << ',' << csv::format(r.relative_dv) << ','
            << csv::format(r.relative_hedge) << ',' << csv::format(r.relative_pnl) << '\n';
    }
}

std::vector<Report> read_reports_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DecodeError("report csv: empty input");
    csv::expect_header(line, kReportHeader, "report csv");
    std::vector<Report> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        const std::string where = "report csv row " + std::to_string(row);
        if (f.size() != 19) throw DecodeError(where + ": expected 19 fields, got " + std::to_string(f.size()));
        Report r;
        r.method = std::string(f[0]);
        r.pool = std::string(f[1]);
        r.pool_spec.fee_tier = csv::parse_double(f[2], where + " fee_tier");
        r.pool_spec.tick_spacing = static_cast<int>(csv::parse_int(f[3], where + " tick_spacing"));
        r.period = std::string(f[4]);
        r.split = std::string(f[5]);
        r.l0 = csv::parse_double(f[6], where + " l0");
        r.reward_mode = std::string(f[7]);
        if (r.reward_mode != "hedged" && r.reward_mode != "unhedged") {
            throw DecodeError(where + ": reward_mode must be hedged or unhedged");
        }
        r.seed = static_cast<std::uint64_t>(csv::parse_int(f[8], where + " seed"));
        r.config_hash = std::string(f[9]);
        r.hours = static_cast<std::size_t>(csv::parse_int(f[10], where + " hours"));
        r.reallocations = static_cast<std::size_t>(csv::parse_int(f[11], where + " reallocations"));
        r.oracle_tuned = csv::parse_int(f[12], where + " oracle_tuned") != 0;
        r.relative_fee = csv::parse_double(f[13], where + " relative_fee");
        r.relative_gas = csv::parse_double(f[14], where + " relative_gas");
        r.relative_lvr = csv::parse_double(f[15], where + " relative_lvr");
        r.relative_dv = csv::parse_double(f[16], where + " relative_dv");
        r.relative_hedge = csv::parse_double(f[17], where + " relative_hedge");
        r.relative_pnl = csv::parse_double(f[18], where + " relative_pnl");
        out.push_back(std::move(r));
    }
    return out;
}

void write_action_histogram_csv(std::ostream& out, const Report& report) {
    out << "action,count\n";
    for (std::size_t a = 0; a < report.action_histogram.size(); ++a) {
        out << a << ',' << report.action_histogram[a] << '\n';
    }
}

Aggregate aggregate_reports(std::vector<Report> reports) {
    if (reports.empty()) throw ValidationError("report: nothing to aggregate");
    const auto& spec = reports.front().pool_spec;
    std::set<std::tuple<std::string, double, std::string, std::string>> cells;
    std::set<std::string> methods;
    for (const auto& r : reports) {
        if (!(r.pool_spec == spec)) {
            throw ValidationError("report: pool spec of " + row_label(r) + " (fee_tier " +
                                  csv::format(r.pool_spec.fee_tier) + ", tick_spacing " +
                                  std::to_string(r.pool_spec.tick_spacing) + ") differs from " +
                                  row_label(reports.front()));
        }
        r.check_identity();
        if (!cells.emplace(r.pool, r.l0, r.period, r.method).second) {
            throw ValidationError("report: duplicate run for " + row_label(r));
        }
        methods.insert(r.method);
    }
    std::sort(reports.begin(), reports.end(), [](const Report& a, const Report& b) {
        return std::tie(a.pool, a.l0, a.period, a.method) < std::tie(b.pool, b.l0, b.period, b.method);
    });
    return Aggregate{{methods.begin(), methods.end()}, std::move(reports)};
}

void write_table_csv(std::ostream& out, const Aggregate& agg) {
    out << "pool,l0,period,metric";
    for (const auto& m : agg.methods) out << ',' << m;
    out << '\n';
    using Key = std::tuple<std::string, double, std::string>;
    std::map<Key, std::map<std::string, const Report*>> grid;
    for (const auto& r : agg.rows) grid[{r.pool, r.l0, r.period}][r.method] = &r;
    static constexpr std::pair<const char*, double Report::*> metrics[] = {
        {"relative_fee", &Report::relative_fee},
        {"relative_gas", &Report::relative_gas},
        {"relative_lvr", &Report::relative_lvr},
        {"relative_pnl", &Report::relative_pnl},
    };
    for (const auto& [key, by_method] : grid) {
        for (const auto& [name, member] : metrics) {
            out << std::get<0>(key) << ',' << csv::format(std::get<1>(key)) << ',' << std::get<2>(key) << ',' << name;
            for (const auto& m : agg.methods) {
                out << ',';
                if (auto it = by_method.find(m); it != by_method.end()) out << csv::format(it->second->*member);
            }
            out << '\n';
        }
    }
}

void write_cumulative_csv(std::ostream& out, const Aggregate& agg) {
    out << "pool,l0,method,period,relative_pnl,cumulative_relative_pnl\n";
    using Key = std::tuple<std::string, double, std::string>;
    std::map<Key, std::vector<const Report*>> series;
    for (const auto& r : agg.rows) series[{r.pool, r.l0, r.method}].push_back(&r);
    for (auto& [key, rows] : series) {
        std::sort(rows.begin(), rows.end(), [](const Report* a, const Report* b) { return a->period < b->period; });
        double running = 0.0;
        for (const auto* r : rows) {
            running += r->relative_pnl;
            out << std::get<0>(key) << ',' << csv::format(std::get<1>(key)) << ',' << std::get<2>(key) << ','
                << r->period << ',' << csv::format(r->relative_pnl) << ',' << csv::format(running) << '\n';
        }
    }
}

std::vector<PrintedRow> read_printed_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DecodeError("printed table: empty input");
    csv::expect_header(line, kPrintedHeader, "printed table");
    std::vector<PrintedRow> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = csv::split(line);
        const std::string where = "printed table row " + std::to_string(row);
        if (f.size() != 7) throw DecodeError(where + ": expected 7 fields");
        PrintedRow r{std::string(f[0]), static_cast<int>(csv::parse_int(f[1], where + " period")), std::string(f[2]),
                     std::string(f[3]), std::string(f[4]), std::string(f[5]), std::string(f[6])};
        for (const auto* s : {&r.fee, &r.gas, &r.lvr, &r.pnl}) parse_thousandths(*s);
        out.push_back(std::move(r));
    }
    return out;
}

std::int64_t parse_thousandths(const std::string& text) {
    std::string_view s = text;
    bool negative = false;
    if (!s.empty() && s.front() == '-') {
        negative = true;
        s.remove_prefix(1);
    }
    const auto dot = s.find('.');
    const std::string_view whole = s.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    auto digits = [](std::string_view d) { return std::all_of(d.begin(), d.end(), [](char c) { return c >= '0' && c <= '9'; }); };
    if (whole.empty() || !digits(whole) || !digits(frac) || frac.size() > 3) {
        throw DecodeError("'" + text + "' is not a decimal with at most three places");
    }
    std::int64_t v = csv::parse_int(whole, "decimal") * 1000;
    std::int64_t scale = 100;
    for (char c : frac) {
        v += (c - '0') * scale;
        scale /= 10;
    }
    return negative ? -v : v;
}

PrintedCheck check_printed_row(const PrintedRow& row) {
    PrintedCheck c;
    c.computed = parse_thousandths(row.fee) - parse_thousandths(row.gas) - parse_thousandths(row.lvr);
    c.printed = parse_thousandths(row.pnl);
    return c;
}

}  // namespace lplab::harness
