// Liquidity allocation agents: Dueling Double-DQN, uniform tau-reset,
// exponential weights over widths, and a tabular value-iteration oracle.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lplab/amm.hpp"
#include "lplab/env.hpp"
#include "lplab/nn.hpp"
#include "lplab/rl.hpp"

namespace lplab::agents {

// ---- replay ----

// Fixed-capacity FIFO ring of transitions. Storage grows on demand up to the
// capacity, so a large nominal capacity costs nothing until it is filled.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim);

    void push(std::span<const double> s, int a, double r, std::span<const double> s2, bool done);

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t obs_dim() const { return dim_; }

    // Slot accessors, 0 <= i < size().
    std::span<const double> state(std::size_t i) const { return {s_.data() + i * dim_, dim_}; }
    std::span<const double> next_state(std::size_t i) const { return {s2_.data() + i * dim_, dim_}; }
    int action(std::size_t i) const { return a_[i]; }
    double reward(std::size_t i) const { return r_[i]; }
    bool done(std::size_t i) const { return done_[i] != 0; }

    // n distinct slots drawn uniformly (Floyd's algorithm).
    std::vector<std::size_t> sample(std::size_t n, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
    std::vector<double> s_, s2_, r_;
    std::vector<int> a_;
    std::vector<std::uint8_t> done_;
};

// ---- DDQN ----

struct DDQNConfig {
    std::vector<std::size_t> hidden{64, 64};
    double gamma = 0.9;
    std::size_t batch_size = 256;
    std::size_t buffer_capacity = 1'000'000;
    double learning_rate = 1e-4;
    double clip_norm = 0.7;
    double target_rate = 0.01;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_fraction = 0.5;  // of the step budget
    std::size_t learn_every = 1;
    std::size_t warm_start = 0;  // 0 means batch_size
    std::size_t eval_every = 20;  // episodes
    std::size_t patience = 15;    // evaluations without improvement
    std::size_t max_episodes = 0;  // 0 means unlimited
    std::filesystem::path divergence_checkpoint;  // written if training diverges
    std::string config_hash;

    void validate() const;
    std::size_t effective_warm_start() const { return warm_start == 0 ? batch_size : warm_start; }
};

// Lowest index wins ties.
int greedy_action(const nn::NetworkParams& params, std::span<const double> s);

double ddqn_target(double r, std::span<const double> s2, bool done, const nn::NetworkParams& local,
                   const nn::NetworkParams& target, double gamma);

// Batched form; next_states is obs_dim x B.
Eigen::VectorXd ddqn_targets(const Eigen::VectorXd& rewards, const Eigen::MatrixXd& next_states,
                             const std::vector<std::uint8_t>& done, const nn::NetworkParams& local,
                             const nn::NetworkParams& target, double gamma);

double epsilon_at(const DDQNConfig& config, std::size_t step, std::size_t budget);

struct RolloutResult {
    double total = 0.0;
    double discounted = 0.0;
    std::vector<int> actions;
};

// Greedy episode from env.reset(episode_seed) until done or max_steps.
RolloutResult greedy_rollout(rl::EpisodicEnv& env, const nn::NetworkParams& params, std::uint64_t episode_seed,
                             double gamma = 1.0, std::size_t max_steps = 0);

struct TrainLogRow {
    std::size_t episode = 0;
    std::size_t steps = 0;  // cumulative environment steps
    double epsilon = 0.0;
    double train_return = 0.0;
    std::optional<double> val_return;
    std::optional<double> loss;  // mean over the episode's gradient steps
};

// Columns episode,steps,epsilon,train_return,val_return,loss; absent values are empty.
void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows);

struct TrainingEnvs {
    rl::EpisodicEnv& train;
    rl::EpisodicEnv& validation;
    std::uint64_t validation_seed = 0;
};

struct TrainResult {
    nn::NetworkParams best;
    nn::NetworkParams final_params;
    nn::OptimizerState optimizer;
    std::vector<TrainLogRow> log;
    std::size_t env_steps = 0;
    std::size_t gradient_steps = 0;
    std::size_t evaluations = 0;
    double best_validation_return = 0.0;
    bool early_stopped = false;
};

// Budget counts environment steps. The initial network is evaluated first and
// the best validation parameters are returned.
TrainResult train_ddqn(TrainingEnvs envs, const DDQNConfig& config, std::size_t budget, std::uint64_t seed);

// ---- tau-reset ----

// tau when there is no position or the close lies strictly outside it, else 0.
int policy_tau_reset(int tau, const std::optional<amm::LiquidityPosition>& position, double close);

// ---- EWA ----

struct EWAConfig {
    int n_widths = 10;  // N
    double eta = 1.0;
    int t_re = 1;

    void validate() const;
};

// Softmax of eta * cumulative, computed with the max subtracted.
std::vector<double> ewa_weights(std::span<const double> cumulative, double eta);

struct EwaHour {
    std::size_t t = 0;
    bool reallocated = false;
    double fee = 0.0;
    double lvr = 0.0;
    double value_change = 0.0;
    double hedge_pnl = 0.0;
    double gas = 0.0;
    double reward = 0.0;  // per the env config's reward mode
    double cash = 0.0;
    double value = 0.0;  // sum of position values at the close
    double close = 0.0;
    amm::Tick center_tick = 0;
    std::vector<double> weights;  // allocation in force during the hour
};

struct EwaRun {
    std::vector<EwaHour> hours;
    std::vector<double> cumulative;  // per-width reward sums at the end
};

// Runs `hours` hourly steps starting with the decision at candle `start_hour`
// (whose previous close sets the first allocation). Uses env_cfg for pool,
// l0, gas, path model and reward mode.
EwaRun run_ewa(const env::MarketSeries& market, const env::EnvConfig& env_cfg, std::size_t start_hour,
               std::size_t hours, const EWAConfig& config);

// ---- value iteration ----

struct TabularMDP {
    std::size_t states = 0;
    std::size_t actions = 0;
    std::vector<double> transition;  // [s][a][s']
    std::vector<double> reward;      // [s][a]

    static TabularMDP make(std::size_t states, std::size_t actions);
    double& p(std::size_t s, std::size_t a, std::size_t s2) { return transition[(s * actions + a) * states + s2]; }
    double p(std::size_t s, std::size_t a, std::size_t s2) const { return transition[(s * actions + a) * states + s2]; }
    double& r(std::size_t s, std::size_t a) { return reward[s * actions + a]; }
    double r(std::size_t s, std::size_t a) const { return reward[s * actions + a]; }

    // Throws ValidationError unless every (s, a) row is a distribution.
    void validate(double tol = 1e-9) const;
};

struct ValueIterationResult {
    std::vector<double> q;  // [s][a]
    std::vector<double> v;
    std::vector<int> policy;  // greedy, lowest index on ties
    std::size_t iterations = 0;
    double last_change = 0.0;
};

ValueIterationResult value_iteration(const TabularMDP& mdp, double gamma, double tol,
                                     std::size_t max_iterations = 1'000'000);

// One Bellman optimality backup of q.
std::vector<double> bellman_backup(const TabularMDP& mdp, std::span<const double> q, double gamma);
double bellman_residual(const TabularMDP& mdp, std::span<const double> q, double gamma);

// Exact discounted value of a deterministic policy.
std::vector<double> evaluate_policy(const TabularMDP& mdp, std::span<const int> policy, double gamma);

}  // namespace lplab::agents
