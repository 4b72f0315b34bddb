// Verification scaffolds: a small tabular liquidity MDP with an exact oracle,
// and the drift-neutrality study on synthetic GBM paths.
#pragma once

#include <cstdint>
#include <vector>

#include "lplab/agents.hpp"
#include "lplab/amm.hpp"
#include "lplab/env.hpp"
#include "lplab/rl.hpp"

namespace lplab::harness {

// Price walks up and down a ladder of `levels` ticks one tick spacing apart:
// 0, 1, ..., L-1, L-2, ..., 1, then repeats, so the phase count is 2(L-1).
// The position is either absent or (centre level, width 1..max_width).
// Action 0 holds; action a >= 1 re-centres on the current level with width a
// and a fresh `budget` (wealth does not carry over, which keeps the state
// space finite). Rewards are the hedged env reward over the two-point move.
// With a standard (fee, spacing) pair a one-spacing jump earns about what it
// loses to LVR, so the default pool is a custom 0.3% / 10-tick spec.
struct ToyMdpSpec {
    int levels = 8;
    int max_width = 2;
    amm::PoolSpec pool{0.003, 10, 0};
    double budget = 1000.0;
    double gas = 1.0;
};

struct ToyState {
    int phase = 0;
    int center = -1;  // level, -1 when there is no position
    int width = 0;
};

struct ToyMdp {
    ToyMdpSpec spec;
    agents::TabularMDP mdp;
    std::vector<std::size_t> next;  // [s][a], the process is deterministic
    std::size_t initial_state = 0;

    int phases() const { return 2 * (spec.levels - 1); }
    int level_at(int phase) const;
    double price_at_level(int level) const;

    std::size_t encode(const ToyState& s) const;
    ToyState decode(std::size_t s) const;
    // One-hot phase, position centre (or none) and width (or none).
    std::vector<double> observation(std::size_t s) const;
    std::size_t observation_size() const;
};

ToyMdp build_toy_mdp(const ToyMdpSpec& spec = {});

class ToyEnv : public rl::EpisodicEnv {
public:
    // With random_start each reset draws a uniform state from the seed;
    // otherwise it starts at the MDP's initial state.
    ToyEnv(const ToyMdp& mdp, std::size_t horizon, bool random_start);

    std::vector<double> reset(std::uint64_t episode_seed) override;
    rl::StepOutcome step(int action) override;
    int action_count() const override { return static_cast<int>(mdp_.mdp.actions); }
    std::size_t observation_size() const override { return mdp_.observation_size(); }

    std::size_t state() const { return state_; }

private:
    const ToyMdp& mdp_;
    std::size_t horizon_;
    bool random_start_;
    std::size_t state_ = 0;
    std::size_t clock_ = 0;
};

// Discounted return over `horizon` steps from the initial state.
double toy_policy_return(const ToyMdp& mdp, const std::vector<int>& policy, double gamma, std::size_t horizon);
double toy_network_return(const ToyMdp& mdp, const nn::NetworkParams& params, double gamma, std::size_t horizon);

struct DriftStudyConfig {
    double mu = 0.0005;    // per hour
    double sigma = 0.01;   // per sqrt(hour)
    std::size_t hours = 1000;
    std::size_t seeds = 100;
    std::uint64_t first_seed = 1;
    int tau = 4;
    double p0 = 1600.0;
    env::EnvConfig env;  // l0, gas, pool, path model, warm-up
};

struct DriftArm {
    double mu = 0.0;
    std::vector<double> hedged;    // relative PnL per seed
    std::vector<double> unhedged;
};

struct SampleStats {
    double mean = 0.0;
    double se = 0.0;  // standard error of the mean
};

SampleStats sample_stats(const std::vector<double>& xs);

struct DriftStudyResult {
    DriftArm up;
    DriftArm down;
    double hedged_diff = 0.0;  // mean(up) - mean(down)
    double hedged_se = 0.0;    // sqrt(se_up^2 + se_down^2)
    double unhedged_diff = 0.0;
    double unhedged_se = 0.0;

    bool hedged_neutral() const;   // |hedged_diff| < 2 se
    bool unhedged_follows() const;  // unhedged_diff > 2 se
};

// Runs tau-reset on GBM paths with drifts +mu and -mu. Seed k drives both
// arms, so the two arms see the same shocks.
DriftStudyResult drift_neutrality_study(const DriftStudyConfig& config);

// Hedged and unhedged relative PnL of tau-reset over `hours` steps after the
// warm-up on one candle series.
std::pair<double, double> tau_reset_relative_pnl(std::vector<features::Candle> candles, const env::EnvConfig& env,
                                                 int tau, std::size_t hours);

}  // namespace lplab::harness
