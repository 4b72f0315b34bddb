#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lplab/errors.hpp"
#include "lplab/harness/backtest.hpp"
#include "lplab/harness/config.hpp"
#include "lplab/harness/report.hpp"
#include "lplab/harness/studies.hpp"
#include "lplab/marketdata.hpp"

using namespace lplab;
using namespace lplab::harness;
using nlohmann::json;

namespace {

RunConfig custom_config() {
    RunConfig c;
    c.merge_json(json::parse(R"({"period":0,"split_start":"2021-08-02","train_hours":400,
        "validation_hours":150,"test_hours":150,"tau":3,"episode_length":50,
        "ewa":{"n":5,"eta":1,"t_re":6},"seed":5})"));
    return c;
}

std::vector<features::Candle> synthetic(std::size_t hours) {
    marketdata::GbmParams g;
    g.hours = hours;
    g.seed = 31;
    g.start = 1627862400 - 250 * 3600;  // warm-up history ahead of the split
    return marketdata::synth_gbm(g);
}

Report sample_report(const std::string& method, double l0, const std::string& period) {
    Report r;
    r.method = method;
    r.pool = "ETH-USDC-0.3";
    r.period = period;
    r.split = "test";
    r.l0 = l0;
    r.reward_mode = "hedged";
    r.relative_fee = 0.691;
    r.relative_gas = 0.113;
    r.relative_lvr = 0.205;
    r.relative_pnl = 0.691 - 0.113 - 0.205;
    r.hours = 10;
    r.action_histogram = {3, 4, 3};
    return r;
}

}  // namespace

TEST(Config, DefaultsAndMerge) {
    RunConfig c;
    EXPECT_EQ(c.env.l0, 250.0);
    EXPECT_EQ(c.ddqn.hidden, (std::vector<std::size_t>{64, 64}));
    c.merge_json(json::parse(R"({"l0":500,"method":"ewa","ddqn":{"batch_size":64}})"));
    EXPECT_EQ(c.env.l0, 500.0);
    EXPECT_EQ(c.method, Method::Ewa);
    EXPECT_EQ(c.ddqn.batch_size, 64u);
    EXPECT_EQ(c.ddqn.gamma, 0.9);
}

TEST(Config, RejectsUnknownAndMistyped) {
    RunConfig c;
    try {
        c.merge_json(json::parse(R"({"l_0":500})"));
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("l_0"), std::string::npos);
    }
    EXPECT_THROW(c.merge_json(json::parse(R"({"l0":"big"})")), ConfigError);
    EXPECT_THROW(c.merge_json(json::parse(R"({"method":"sarsa"})")), ConfigError);
    EXPECT_THROW(c.merge_json(json::parse("[1]")), ConfigError);
}

TEST(Config, Conflicts) {
    RunConfig c;
    c.split_start = "2021-08-02";
    EXPECT_THROW(c.validate(), ConfigError);  // period 1 and a custom start
    c.period = 0;
    c.tau = 12;
    EXPECT_THROW(c.validate(), ConfigError);  // exceeds max_width
    c.tau = 3;
    EXPECT_NO_THROW(c.validate());
    c.tau.reset();
    EXPECT_THROW(c.resolved_tau(), ConfigError);
    EXPECT_THROW(c.resolved_ewa(), ConfigError);
}

TEST(Config, HashIgnoresOutputDir) {
    auto a = custom_config(), b = custom_config();
    b.output_dir = "/tmp/elsewhere";
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    b.env.l0 = 500.0;
    EXPECT_NE(a.hash(), b.hash());
    // Round-trip through JSON keeps the hash.
    RunConfig c;
    c.merge_json(a.to_json());
    EXPECT_EQ(c.hash(), a.hash());
    EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
}

TEST(Config, ReferenceTables) {
    EXPECT_EQ(reference_tau("ETH-USDC-0.3", 1, 250), 6);
    EXPECT_EQ(reference_tau("ETH-USDC-0.3", 3, 1000), 2);
    EXPECT_EQ(reference_tau("ETH-USDT-0.3", 3, 250), 10);
    EXPECT_EQ(reference_tau("ETH-USDT-0.3", 4, 1000), 1);
    const auto e = reference_ewa("ETH-USDC-0.3", 1, 1000);
    EXPECT_EQ(e.n_widths, 10);
    EXPECT_EQ(e.t_re, 6);
    EXPECT_THROW(reference_tau("ETH-DAI-0.3", 1, 250), ConfigError);
    EXPECT_THROW(reference_tau("ETH-USDC-0.3", 0, 250), ConfigError);
    EXPECT_THROW(reference_tau("ETH-USDC-0.3", 1, 750), ConfigError);
    RunConfig c;
    bool tuned = false;
    EXPECT_EQ(c.resolved_tau(&tuned), 6);  // USDC, period 1, l0 250
    EXPECT_TRUE(tuned);
    c.tau = 2;
    EXPECT_EQ(c.resolved_tau(&tuned), 2);
    EXPECT_FALSE(tuned);
}

TEST(Report, IdentityCheck) {
    auto r = sample_report("tau_reset", 1000, "1");
    EXPECT_NO_THROW(r.check_identity());
    r.relative_pnl += 0.01;
    EXPECT_THROW(r.check_identity(), ValidationError);
    r.reward_mode = "unhedged";
    r.relative_dv = 0.373 - 0.691 + 0.113 + 0.01;
    EXPECT_NO_THROW(r.check_identity());
}

TEST(Report, CsvRoundTrip) {
    std::vector<Report> rs{sample_report("tau_reset", 1000, "1"), sample_report("ewa", 500, "custom")};
    rs[1].oracle_tuned = true;
    rs[1].seed = 99;
    std::ostringstream out;
    write_reports_csv(out, rs);
    std::istringstream in(out.str());
    const auto back = read_reports_csv(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].method, "ewa");
    EXPECT_EQ(back[1].period, "custom");
    EXPECT_TRUE(back[1].oracle_tuned);
    EXPECT_EQ(back[1].seed, 99u);
    EXPECT_EQ(back[0].relative_pnl, rs[0].relative_pnl);
}

TEST(Report, AggregationRefusals) {
    auto a = sample_report("tau_reset", 1000, "1");
    auto b = sample_report("ewa", 1000, "1");
    EXPECT_NO_THROW(aggregate_reports({a, b}));
    EXPECT_THROW(aggregate_reports({a, a}), ValidationError);
    b.pool_spec.tick_spacing = 10;
    EXPECT_THROW(aggregate_reports({a, b}), ValidationError);
}

TEST(Report, AggregateTables) {
    std::vector<Report> rs;
    for (const char* p : {"2", "1"}) {
        rs.push_back(sample_report("tau_reset", 1000, p));
        rs.push_back(sample_report("ewa", 1000, p));
    }
    const auto agg = aggregate_reports(rs);
    EXPECT_EQ(agg.rows.front().period, "1");
    std::ostringstream cum;
    write_cumulative_csv(cum, agg);
    EXPECT_NE(cum.str().find("ETH-USDC-0.3,1000,tau_reset,2,0.373,0.746"), std::string::npos) << cum.str();
    std::ostringstream table;
    write_table_csv(table, agg);
    EXPECT_EQ(table.str().substr(0, table.str().find('\n')).rfind("pool,l0,period,metric", 0), 0u);
}

TEST(PrintedTable, Arithmetic) {
    EXPECT_EQ(parse_thousandths("0.373"), 373);
    EXPECT_EQ(parse_thousandths("-0.062"), -62);
    EXPECT_EQ(parse_thousandths("0.63"), 630);
    EXPECT_EQ(parse_thousandths("1"), 1000);
    EXPECT_THROW(parse_thousandths("0.1234"), DecodeError);
    EXPECT_THROW(parse_thousandths("abc"), DecodeError);
    const PrintedRow row{"ETH-USDC-0.3", 1, "M1", "0.691", "0.113", "0.205", "0.373"};
    const auto c = check_printed_row(row);
    EXPECT_TRUE(c.exact());
    EXPECT_EQ(c.computed, 373);
}

TEST(PrintedTable, FixtureParses) {
    std::ifstream in(std::string(LPLAB_TEST_DATA) + "/table5.csv");
    const auto rows = read_printed_table(in);
    EXPECT_EQ(rows.size(), 32u);
    EXPECT_EQ(rows[0].method, "M1");
    EXPECT_TRUE(check_printed_row(rows[0]).exact());
}

TEST(ToyMdp, OracleProperties) {
    const auto toy = build_toy_mdp();
    EXPECT_EQ(toy.mdp.states, 238u);
    const auto vi = agents::value_iteration(toy.mdp, 0.9, 1e-12);
    EXPECT_LT(agents::bellman_residual(toy.mdp, vi.q, 0.9), 1e-8);
    EXPECT_NEAR(vi.v[toy.initial_state], 4.288971, 1e-6);
    // Always holding never opens a position, so every reward is zero.
    const std::vector<int> hold(toy.mdp.states, 0);
    EXPECT_EQ(toy_policy_return(toy, hold, 0.9, 100), 0.0);
    EXPECT_GT(toy_policy_return(toy, vi.policy, 0.9, 100), 0.0);
    // Myopic optimum takes the best one-step reward.
    const auto myopic = agents::value_iteration(toy.mdp, 0.0, 1e-12);
    for (std::size_t s = 0; s < toy.mdp.states; ++s) {
        double best = -INFINITY;
        for (std::size_t a = 0; a < toy.mdp.actions; ++a) best = std::max(best, toy.mdp.r(s, a));
        EXPECT_DOUBLE_EQ(myopic.v[s], best);
    }
    for (std::size_t s = 0; s < toy.mdp.states; s += 17) EXPECT_EQ(toy.encode(toy.decode(s)), s);
}

TEST(Backtest, DeterministicAndConsistent) {
    const auto cfg = custom_config();
    const auto market = make_market(synthetic(1000), cfg);
    const auto a = backtest_tau_reset(market, cfg, SplitName::Test, 3);
    const auto b = backtest_tau_reset(market, cfg, SplitName::Test, 3);
    EXPECT_EQ(a.report.relative_pnl, b.report.relative_pnl);
    EXPECT_EQ(a.trace.size(), b.trace.size());
    EXPECT_EQ(a.report.hours, a.trace.size());
    EXPECT_NO_THROW(a.report.check_identity());
    const auto e = backtest_ewa(market, cfg, SplitName::Test, *cfg.ewa);
    EXPECT_NO_THROW(e.report.check_identity());
    EXPECT_EQ(e.report.method, "ewa");
}

TEST(DriftStudy, SmallRunIsWellFormed) {
    DriftStudyConfig c;
    c.seeds = 4;
    c.hours = 100;
    const auto r = drift_neutrality_study(c);
    EXPECT_EQ(r.up.hedged.size(), 4u);
    EXPECT_EQ(r.down.unhedged.size(), 4u);
    EXPECT_GT(r.hedged_se, 0.0);
    EXPECT_EQ(sample_stats({1.0, 3.0}).mean, 2.0);
    EXPECT_DOUBLE_EQ(sample_stats({1.0, 3.0}).se, 1.0);
}
