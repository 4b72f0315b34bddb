// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Usage: lplab_acceptance [--report-only] [criterion numbers...]   (default: all)
// --report-only exits 0 once every criterion has run, whatever the outcome.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "lplab/errors.hpp"
#include "lplab/harness/backtest.hpp"
#include "lplab/harness/config.hpp"
#include "lplab/harness/report.hpp"
#include "lplab/verify/checks.hpp"

using namespace lplab;
namespace fs = std::filesystem;

namespace {

const fs::path kData = LPLAB_TEST_DATA;
const fs::path kCli = LPLAB_CLI_PATH;

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("lplab_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

verify::CheckResult within(verify::CheckResult r, double limit_seconds) {
    if (r.seconds >= limit_seconds) {
        r.passed = false;
        r.detail += "; took " + std::to_string(r.seconds) + " s, limit " + std::to_string(limit_seconds) + " s";
    }
    return r;
}

harness::RunConfig smoke_config() {
    return harness::RunConfig::load(kData / "smoke_config.json");
}

// Runs every artifact-producing path twice with the same config, output
// directory included, and compares the files byte for byte.
verify::CheckResult determinism() {
    verify::CheckResult r;
    const auto base = smoke_config();
    const auto market = harness::load_market(base);
    std::vector<std::string> diffs;
    std::size_t compared = 0;

    // Produces the artifacts in `dir` twice; the first copy is moved aside.
    auto twice = [&](const std::string& name, const std::function<void(const fs::path&)>& produce) {
        const auto dir = scratch(name);
        const auto first = fs::path(dir.string() + ".first");
        produce(dir);
        fs::remove_all(first);
        fs::rename(dir, first);
        fs::create_directories(dir);
        produce(dir);
        for (const auto& e : fs::directory_iterator(first)) {
            const auto other = dir / e.path().filename();
            ++compared;
            if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
                diffs.push_back(name + "/" + e.path().filename().string());
            }
        }
        return dir;
    };

    for (auto method : {harness::Method::TauReset, harness::Method::Ewa}) {
        twice(std::string(harness::to_string(method)), [&](const fs::path& dir) {
            auto cfg = base;
            cfg.method = method;
            cfg.output_dir = dir.string();
            harness::write_backtest_artifacts(dir, cfg, harness::run_backtest(market, cfg));
        });
    }
    const auto train_dir = twice("train", [&](const fs::path& dir) {
        auto cfg = base;
        cfg.method = harness::Method::Ddqn;
        cfg.ddqn.max_episodes = 10;
        cfg.ddqn.eval_every = 5;
        cfg.output_dir = dir.string();
        harness::write_train_artifacts(dir, cfg, harness::run_training(market, cfg));
    });
    twice("ddqn", [&](const fs::path& dir) {
        auto cfg = base;
        cfg.method = harness::Method::Ddqn;
        cfg.checkpoint = (train_dir / "checkpoint.json").string();
        cfg.output_dir = dir.string();
        harness::write_backtest_artifacts(dir, cfg, harness::run_backtest(market, cfg));
    });

    r.passed = diffs.empty() && compared >= 12;
    std::ostringstream d;
    d << compared << " artifact files compared across tau-reset, EWA, DDQN backtests and training";
    for (const auto& f : diffs) d << "; differs: " << f;
    r.detail = d.str();
    return r;
}

int run(const std::string& cmd) {
    const int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
    return rc;
}

// Drives the CLI with the bundled 1200-hour fixture.
verify::CheckResult end_to_end() {
    verify::CheckResult r;
    const auto root = scratch("e2e");
    const std::string cli = kCli.string();
    const std::string cfg = (kData / "smoke_config.json").string();
    const std::vector<std::pair<std::string, std::string>> steps{
        {"tau", cli + " backtest -c " + cfg + " --method tau-reset -o " + (root / "tau").string()},
        {"ewa", cli + " backtest -c " + cfg + " --method ewa -o " + (root / "ewa").string()},
        {"train", cli + " train -c " + cfg + " --max-episodes 50 -o " + (root / "train").string()},
        {"ddqn", cli + " backtest -c " + cfg + " --method ddqn --checkpoint " + (root / "train" / "checkpoint.json").string() +
                     " -o " + (root / "ddqn").string()},
        {"report", cli + " report " + (root / "tau").string() + " " + (root / "ewa").string() + " " +
                       (root / "ddqn").string() + " -o " + (root / "agg").string()},
    };
    for (const auto& [name, cmd] : steps) {
        if (int rc = run(cmd); rc != 0) {
            r.detail = name + " exited with status " + std::to_string(rc);
            return r;
        }
    }

    std::ostringstream d;
    bool ok = true;
    for (const char* run_dir : {"tau", "ewa", "ddqn"}) {
        std::ifstream in(root / run_dir / "report.csv");
        try {
            const auto reports = harness::read_reports_csv(in);
            if (reports.size() != 1) throw ValidationError("expected one report row");
            reports[0].check_identity();
            d << run_dir << " pnl " << reports[0].relative_pnl << " over " << reports[0].hours << " h; ";
        } catch (const Error& e) {
            ok = false;
            d << run_dir << ": " << e.what() << "; ";
        }
    }
    std::ifstream log(root / "train" / "train_log.csv");
    std::string line;
    std::size_t episodes = 0;
    bool header = false;
    while (std::getline(log, line)) {
        if (line.empty() || line[0] == '#') continue;  // provenance line
        if (!header) {
            header = true;
            continue;
        }
        ++episodes;
    }
    d << "train log " << episodes << " episodes";
    ok = ok && episodes == 50 && fs::exists(root / "agg" / "table.csv") && fs::exists(root / "train" / "checkpoint.json");
    r.passed = ok;
    r.detail = d.str();
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    bool report_only = false;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--report-only") {
            report_only = true;
        } else {
            only.insert(std::atoi(argv[i]));
        }
    }
    // The smoke config names its candle file relative to the fixture dir.
    ::setenv("LPLAB_DATA_DIR", kData.c_str(), 1);
    const auto wanted = [&](int k) { return only.empty() || only.count(k) > 0; };

    const std::vector<std::pair<int, std::function<verify::CheckResult()>>> criteria{
        {1, [] { return within(verify::timed("accounting identity", [] { return verify::accounting_identity(); }), 10); }},
        {2, [] { return within(verify::timed("fee oracle", [] { return verify::fee_oracle(); }), 30); }},
        {3, [] { return verify::timed("reserve continuity", [] { return verify::reserve_continuity(); }); }},
        {4, [] { return verify::timed("printed table arithmetic", [] { return verify::printed_table(kData / "table5.csv"); }); }},
        {5, [] { return verify::timed("network checks", [] { return verify::network_checks(4, scratch("nn")); }); }},
        {6, [] { return within(verify::timed("toy MDP convergence", [] { return verify::toy_convergence(); }), 600); }},
        {7, [] { return within(verify::timed("drift neutrality", [] { return verify::drift_neutrality(); }), 300); }},
        {8, [] { return verify::timed("EWA behaviour", [] { return verify::ewa_behaviour(); }); }},
        {9, [] { return verify::timed("determinism", determinism); }},
        {10, [] { return within(verify::timed("end-to-end smoke", end_to_end), 900); }},
    };

    int failed = 0;
    for (const auto& [k, fn] : criteria) {
        if (!wanted(k)) continue;
        const auto r = fn();
        if (!r.passed) ++failed;
        std::printf("criterion %2d %s  %-26s %7.1fs  %s\n", k, r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
    }
    fs::remove_all(fs::temp_directory_path() / ("lplab_acceptance_" + std::to_string(::getpid())));
    std::printf("%d criterion(s) failed\n", failed);
    return failed == 0 || report_only ? 0 : 1;
}
