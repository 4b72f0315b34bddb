// Property and oracle suites shared by `lplab verify` and the acceptance
// binary. Each check returns one pass/fail line.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lplab/harness/studies.hpp"

namespace lplab::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

// Times `fn` and turns an escaping lplab::Error into a failed result.
CheckResult timed(const std::string& name, const std::function<CheckResult()>& fn);

// Sum of value changes equals rebalancing PnL plus LVR on random paths, and
// no LVR increment is positive.
CheckResult accounting_identity(std::size_t trials = 10'000, std::uint64_t seed = 1);

// Closed-form path fees against micro-stepped reserve accrual.
CheckResult fee_oracle(std::size_t paths = 1'000, std::size_t micro_steps = 10'000, std::uint64_t seed = 2);

// Reserves and value agree across each range boundary; budget round-trip.
CheckResult reserve_continuity(std::size_t positions = 10'000, std::uint64_t seed = 3);

// fee - gas - lvr against every row of a printed three-decimal table.
CheckResult printed_table(const std::filesystem::path& fixture);

// Dueling mean identity, finite-difference gradients, checkpoint round-trip.
CheckResult network_checks(std::uint64_t seed = 4, const std::filesystem::path& scratch_dir = {});

// Weight normalization, small-eta uniformity and a worked softmax example.
CheckResult ewa_behaviour(std::uint64_t seed = 5);

struct ToyConvergenceConfig {
    std::size_t seeds = 10;
    std::size_t required = 8;
    std::size_t budget = 20'000;
    std::size_t horizon = 100;
    double gamma = 0.9;
    double fraction = 0.95;
    std::size_t buffer_capacity = 10'000;
};

// DDQN greedy return on the toy MDP against the value-iteration optimum.
CheckResult toy_convergence(const ToyConvergenceConfig& config = {});

// Hedged PnL is neutral to the drift sign; unhedged PnL follows it.
CheckResult drift_neutrality(const harness::DriftStudyConfig& config = {});

}  // namespace lplab::verify
