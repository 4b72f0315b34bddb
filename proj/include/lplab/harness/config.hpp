// Run configuration shared by the CLI and the experiment drivers.
#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "lplab/agents.hpp"
#include "lplab/amm.hpp"
#include "lplab/env.hpp"
#include "lplab/marketdata.hpp"

namespace lplab::harness {

enum class Method { Ddqn, TauReset, Ewa };

Method parse_method(std::string_view name);
std::string_view to_string(Method m);

enum class SplitName { Train, Validation, Test };

SplitName parse_split(std::string_view name);
std::string_view to_string(SplitName s);

struct RunConfig {
    std::string pool = "ETH-USDC-0.3";
    amm::PoolSpec pool_spec;
    std::string data;    // candle CSV
    std::string swaps;   // optional swap CSV for swap-replay

    int period = 1;  // 1..4, or 0 for the custom split below
    std::string split_start;
    std::int64_t train_hours = 8000;
    std::int64_t validation_hours = 1000;
    std::int64_t test_hours = 1000;
    SplitName eval_split = SplitName::Test;

    Method method = Method::TauReset;
    env::EnvConfig env;
    std::uint64_t seed = 0;
    std::string output_dir;

    std::optional<int> tau;                  // unset: reference table
    std::optional<agents::EWAConfig> ewa;    // unset: reference table
    agents::DDQNConfig ddqn;
    std::size_t budget = 200'000;  // DDQN environment steps
    std::string checkpoint;        // DDQN parameters for backtests

    RunConfig();

    // Overlays the fields present in `j`; unknown fields are rejected.
    void merge_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static RunConfig load(const std::filesystem::path& path);

    // FNV-1a over the canonical JSON, output_dir excluded.
    std::string hash() const;

    void validate() const;
    marketdata::DatasetPartition partition_scheme() const;

    // tau or the reference value; sets *oracle_tuned when taken from the table.
    int resolved_tau(bool* oracle_tuned = nullptr) const;
    agents::EWAConfig resolved_ewa() const;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Reference hyperparameter tables; pools "ETH-USDC-0.3" and "ETH-USDT-0.3",
// periods 1..4, l0 in {250, 500, 1000}. ConfigError when absent.
int reference_tau(const std::string& pool, int period, double l0);
agents::EWAConfig reference_ewa(const std::string& pool, int period, double l0);

// Relative paths that do not exist are retried under $LPLAB_DATA_DIR.
std::filesystem::path resolve_data_path(const std::string& path);

}  // namespace lplab::harness
