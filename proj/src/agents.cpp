#include "lplab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "lplab/accounting.hpp"
#include "lplab/csv.hpp"
#include "lplab/errors.hpp"

namespace lplab::agents {

// ---- replay ----

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim) : capacity_(capacity), dim_(obs_dim) {
    if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
    if (obs_dim == 0) throw ConfigError("replay buffer observation size must be positive");
}

void ReplayBuffer::push(std::span<const double> s, int a, double r, std::span<const double> s2, bool done) {
    if (s.size() != dim_ || s2.size() != dim_) throw ConfigError("replay push: observation size mismatch");
    if (size_ < capacity_ && head_ == size_) {
        s_.insert(s_.end(), s.begin(), s.end());
        s2_.insert(s2_.end(), s2.begin(), s2.end());
        a_.push_back(a);
        r_.push_back(r);
        done_.push_back(done ? 1 : 0);
        ++size_;
    } else {
        std::copy(s.begin(), s.end(), s_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
        std::copy(s2.begin(), s2.end(), s2_.begin() + static_cast<std::ptrdiff_t>(head_ * dim_));
        a_[head_] = a;
        r_[head_] = r;
        done_[head_] = done ? 1 : 0;
    }
    head_ = (head_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (n > size_) throw DomainError("replay sample: requested " + std::to_string(n) + " of " + std::to_string(size_));
    std::vector<std::size_t> out;
    out.reserve(n);
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = size_ - n; j < size_; ++j) {
        const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
        const std::size_t pick = seen.insert(t).second ? t : j;
        if (pick == j) seen.insert(j);
        out.push_back(pick);
    }
    return out;
}

// ---- DDQN ----

void DDQNConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("ddqn.gamma must lie in (0, 1)");
    if (batch_size == 0) throw ConfigError("ddqn.batch_size must be positive");
    if (buffer_capacity < batch_size) throw ConfigError("ddqn.buffer_capacity must be >= batch_size");
    if (!(learning_rate > 0.0)) throw ConfigError("ddqn.learning_rate must be positive");
    if (!(clip_norm > 0.0)) throw ConfigError("ddqn.clip_norm must be positive");
    if (!(target_rate > 0.0 && target_rate <= 1.0)) throw ConfigError("ddqn.target_rate must lie in (0, 1]");
    for (double e : {epsilon_start, epsilon_end}) {
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("ddqn.epsilon_start/epsilon_end must lie in [0, 1]");
    }
    if (!(epsilon_fraction >= 0.0 && epsilon_fraction <= 1.0)) {
        throw ConfigError("ddqn.epsilon_fraction must lie in [0, 1]");
    }
    if (learn_every == 0) throw ConfigError("ddqn.learn_every must be positive");
    if (effective_warm_start() < batch_size) throw ConfigError("ddqn.warm_start must be >= batch_size");
    if (eval_every == 0) throw ConfigError("ddqn.eval_every must be positive");
    if (patience == 0) throw ConfigError("ddqn.patience must be positive");
}

namespace {

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& q) {
    int best = 0;
    for (Eigen::Index a = 1; a < q.size(); ++a) {
        if (q(a) > q(best)) best = static_cast<int>(a);
    }
    return best;
}

}  // namespace

int greedy_action(const nn::NetworkParams& params, std::span<const double> s) {
    return argmax_lowest(nn::forward(params, s).q);
}

double ddqn_target(double r, std::span<const double> s2, bool done, const nn::NetworkParams& local,
                   const nn::NetworkParams& target, double gamma) {
    if (done) return r;
    const int a = greedy_action(local, s2);
    return r + gamma * nn::forward(target, s2).q(a);
}

Eigen::VectorXd ddqn_targets(const Eigen::VectorXd& rewards, const Eigen::MatrixXd& next_states,
                             const std::vector<std::uint8_t>& done, const nn::NetworkParams& local,
                             const nn::NetworkParams& target, double gamma) {
    const Eigen::MatrixXd ql = nn::forward_batch(local, next_states);
    const Eigen::MatrixXd qt = nn::forward_batch(target, next_states);
    Eigen::VectorXd y = rewards;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (done[static_cast<std::size_t>(i)]) continue;
        y(i) += gamma * qt(argmax_lowest(ql.col(i)), i);
    }
    return y;
}

double epsilon_at(const DDQNConfig& config, std::size_t step, std::size_t budget) {
    const double horizon = config.epsilon_fraction * static_cast<double>(budget);
    if (horizon <= 0.0) return config.epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(step) / horizon);
    return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
}

RolloutResult greedy_rollout(rl::EpisodicEnv& env, const nn::NetworkParams& params, std::uint64_t episode_seed,
                             double gamma, std::size_t max_steps) {
    RolloutResult out;
    auto s = env.reset(episode_seed);
    double discount = 1.0;
    for (std::size_t t = 0; max_steps == 0 || t < max_steps; ++t) {
        const int a = greedy_action(params, s);
        auto step = env.step(a);
        out.actions.push_back(a);
        out.total += step.reward;
        out.discounted += discount * step.reward;
        discount *= gamma;
        s = std::move(step.observation);
        if (step.done) break;
    }
    return out;
}

void write_train_log_csv(std::ostream& out, std::span<const TrainLogRow> rows) {
    out << "episode,steps,epsilon,train_return,val_return,loss\n";
    for (const auto& r : rows) {
        out << r.episode << ',' << r.steps << ',' << csv::format(r.epsilon) << ',' << csv::format(r.train_return)
            << ',' << (r.val_return ? csv::format(*r.val_return) : "") << ','
            << (r.loss ? csv::format(*r.loss) : "") << '\n';
    }
}

TrainResult train_ddqn(TrainingEnvs envs, const DDQNConfig& config, std::size_t budget, std::uint64_t seed) {
    config.validate();
    const std::size_t dim = envs.train.observation_size();
    const int actions = envs.train.action_count();
    if (envs.validation.observation_size() != dim || envs.validation.action_count() != actions) {
        throw ConfigError("train_ddqn: training and validation environments differ in shape");
    }

    std::mt19937_64 rng(seed);
    nn::NetworkParams local = nn::NetworkParams::init(dim, config.hidden, static_cast<std::size_t>(actions), rng());
    nn::NetworkParams target = local;
    nn::OptimizerState opt = nn::OptimizerState::for_params(local);
    opt.learning_rate = config.learning_rate;
    opt.clip_norm = config.clip_norm;
    ReplayBuffer buffer(config.buffer_capacity, dim);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> random_action(0, actions - 1);

    TrainResult result;
    auto evaluate = [&] {
        ++result.evaluations;
        return greedy_rollout(envs.validation, local, envs.validation_seed).total;
    };
    result.best = local;
    result.best_validation_return = evaluate();

    const std::size_t warm = config.effective_warm_start();
    const auto n = static_cast<Eigen::Index>(config.batch_size);
    nn::Minibatch batch{Eigen::MatrixXd(dim, n), std::vector<int>(config.batch_size), Eigen::VectorXd(n)};
    Eigen::MatrixXd next(dim, n);
    Eigen::VectorXd rewards(n);
    std::vector<std::uint8_t> done(config.batch_size);

    auto learn = [&]() -> double {
        const auto idx = buffer.sample(config.batch_size, rng);
        for (Eigen::Index i = 0; i < n; ++i) {
            const std::size_t k = idx[static_cast<std::size_t>(i)];
            const auto s = buffer.state(k);
            const auto s2 = buffer.next_state(k);
            for (std::size_t j = 0; j < dim; ++j) {
                batch.states(static_cast<Eigen::Index>(j), i) = s[j];
                next(static_cast<Eigen::Index>(j), i) = s2[j];
            }
            batch.actions[static_cast<std::size_t>(i)] = buffer.action(k);
            rewards(i) = buffer.reward(k);
            done[static_cast<std::size_t>(i)] = buffer.done(k) ? 1 : 0;
        }
        batch.targets = ddqn_targets(rewards, next, done, local, target, config.gamma);
        const auto lg = nn::loss_and_gradients(local, batch);
        try {
            if (!std::isfinite(lg.loss)) throw DivergenceError("train_ddqn: non-finite loss");
            nn::apply_update(local, opt, lg.grads);
        } catch (const DivergenceError& e) {
            // local still holds the last finite parameters here.
            if (!config.divergence_checkpoint.empty()) {
                nn::save_checkpoint(config.divergence_checkpoint, local, opt, {seed, config.config_hash});
            }
            throw DivergenceError(std::string(e.what()) + " after " + std::to_string(result.gradient_steps) +
                                  " gradient steps");
        }
        nn::soft_update(target, local, config.target_rate);
        ++result.gradient_steps;
        return lg.loss;
    };

    std::size_t step = 0;
    std::size_t episode = 0;
    std::size_t stale = 0;
    while (step < budget && (config.max_episodes == 0 || episode < config.max_episodes)) {
        auto s = envs.train.reset(rng());
        TrainLogRow row;
        row.epsilon = epsilon_at(config, step, budget);
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        bool finished = false;
        while (!finished && step < budget) {
            const double eps = epsilon_at(config, step, budget);
            const int a = unit(rng) < eps ? random_action(rng) : greedy_action(local, s);
            auto out = envs.train.step(a);
            buffer.push(s, a, out.reward, out.observation, out.done);
            ++step;
            row.train_return += out.reward;
            if (buffer.size() >= warm && step % config.learn_every == 0) {
                loss_sum += learn();
                ++loss_n;
            }
            s = std::move(out.observation);
            finished = out.done;
        }
        ++episode;
        row.episode = episode;
        row.steps = step;
        if (loss_n > 0) row.loss = loss_sum / static_cast<double>(loss_n);

        const bool last = step >= budget || (config.max_episodes != 0 && episode >= config.max_episodes);
        if (episode % config.eval_every == 0 || last) {
            const double val = evaluate();
            row.val_return = val;
            if (val > result.best_validation_return) {
                result.best_validation_return = val;
                result.best = local;
                stale = 0;
            } else {
                ++stale;
            }
        }
        result.log.push_back(row);
        if (stale >= config.patience) {
            result.early_stopped = true;
            break;
        }
    }
    result.env_steps = step;
    result.final_params = std::move(local);
    result.optimizer = std::move(opt);
    return result;
}

// ---- tau-reset ----

int policy_tau_reset(int tau, const std::optional<amm::LiquidityPosition>& position, double close) {
    if (tau < 1) throw ConfigError("tau must be >= 1");
    if (!position) return tau;
    return close < position->price_lower || close > position->price_upper ? tau : 0;
}

// ---- EWA ----

void EWAConfig::validate() const {
    if (n_widths < 1) throw ConfigError("ewa.n_widths must be >= 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("ewa.eta must be positive");
    if (t_re < 1) throw ConfigError("ewa.t_re must be >= 1");
}

std::vector<double> ewa_weights(std::span<const double> cumulative, double eta) {
    if (cumulative.empty()) throw DomainError("ewa_weights: no widths");
    double top = -std::numeric_limits<double>::infinity();
    for (double c : cumulative) top = std::max(top, eta * c);
    std::vector<double> w;
    w.reserve(cumulative.size());
    for (double c : cumulative) w.push_back(std::exp(eta * c - top));
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= z;
    return w;
}

EwaRun run_ewa(const env::MarketSeries& market, const env::EnvConfig& env_cfg, std::size_t start_hour,
               std::size_t hours, const EWAConfig& config) {
    config.validate();
    env_cfg.validate();
    if (start_hour == 0 || start_hour + hours > market.candles.size()) {
        throw RangeError("run_ewa: window [" + std::to_string(start_hour) + ", " + std::to_string(start_hour + hours) +
                         ") does not fit the series");
    }
    const auto n_widths = static_cast<std::size_t>(config.n_widths);
    const int d = env_cfg.pool.tick_spacing;
    const double fee_tier = env_cfg.pool.fee_tier;

    std::vector<amm::LiquidityPosition> positions(n_widths);
    std::vector<amm::LiquidityPosition> shadows(n_widths);  // unit budget, for r_t(n)
    amm::Tick center = 0;
    auto allocate = [&](double price, double wealth, const std::vector<double>& weights) {
        center = amm::snap_tick(amm::price_to_tick(price), d);
        for (std::size_t i = 0; i < n_widths; ++i) {
            const auto width = static_cast<amm::Tick>(i + 1) * d;
            const amm::TickRange range{center - width, center + width};
            shadows[i] = amm::LiquidityPosition::from_ticks(range, amm::liquidity_for_budget(1.0, price, range),
                                                            env_cfg.pool);
            positions[i] = amm::LiquidityPosition::from_ticks(
                range, amm::liquidity_for_budget(wealth * weights[i], price, range), env_cfg.pool);
        }
    };

    EwaRun run;
    run.cumulative.assign(n_widths, 0.0);
    std::vector<double> weights(n_widths, 1.0 / static_cast<double>(n_widths));
    allocate(market.candles[start_hour - 1].close, env_cfg.l0, weights);
    double cash = 0.0;

    for (std::size_t h = 0; h < hours; ++h) {
        const std::size_t idx = start_hour + h;
        EwaHour row;
        row.t = h;
        if (h > 0 && h % static_cast<std::size_t>(config.t_re) == 0) {
            const double price = market.candles[idx - 1].close;
            double wealth = cash;
            for (const auto& p : positions) wealth += amm::position_value(p, price);
            weights = ewa_weights(run.cumulative, config.eta);
            allocate(price, wealth, weights);
            cash = 0.0;
            row.reallocated = true;
            row.gas = env_cfg.gas;
        }
        row.weights = weights;
        row.center_tick = center;

        const auto path = env::intra_hour_path(market, env_cfg.path_model, idx);
        for (std::size_t i = 0; i < n_widths; ++i) {
            for (const auto& s : accounting::ledger_over_path(positions[i], fee_tier, path)) {
                row.fee += s.fee;
                row.lvr += s.lvr_increment;
                row.value_change += s.value_change;
                row.hedge_pnl += s.hedge_pnl;
            }
            double r = 0.0;
            for (const auto& s : accounting::ledger_over_path(shadows[i], fee_tier, path)) r += s.fee + s.lvr_increment;
            run.cumulative[i] += r;
        }
        row.close = market.candles[idx].close;
        cash += row.fee;
        row.cash = cash;
        for (const auto& p : positions) row.value += amm::position_value(p, row.close);
        const double pnl_term = env_cfg.reward_mode == env::RewardMode::Hedged ? row.lvr : row.value_change;
        row.reward = -row.gas + row.fee + pnl_term;
        run.hours.push_back(std::move(row));
    }
    return run;
}

// ---- value iteration ----

TabularMDP TabularMDP::make(std::size_t states, std::size_t actions) {
    if (states == 0 || actions == 0) throw ConfigError("tabular MDP needs at least one state and action");
    TabularMDP m;
    m.states = states;
    m.actions = actions;
    m.transition.assign(states * actions * states, 0.0);
    m.reward.assign(states * actions, 0.0);
    return m;
}

void TabularMDP::validate(double tol) const {
    if (transition.size() != states * actions * states || reward.size() != states * actions) {
        throw ValidationError("tabular MDP: tensor sizes do not match state/action counts");
    }
    for (std::size_t s = 0; s < states; ++s) {
        for (std::size_t a = 0; a < actions; ++a) {
            double sum = 0.0;
            for (std::size_t s2 = 0; s2 < states; ++s2) {
                const double x = p(s, a, s2);
                if (!(x >= 0.0) || !std::isfinite(x)) {
                    throw ValidationError("tabular MDP: negative or non-finite probability at (" + std::to_string(s) +
                                          ", " + std::to_string(a) + ")");
                }
                sum += x;
            }
            if (std::abs(sum - 1.0) > tol) {
                throw ValidationError("tabular MDP: row (" + std::to_string(s) + ", " + std::to_string(a) +
                                      ") sums to " + std::to_string(sum));
            }
            if (!std::isfinite(r(s, a))) throw ValidationError("tabular MDP: non-finite reward");
        }
    }
}

std::vector<double> bellman_backup(const TabularMDP& mdp, std::span<const double> q, double gamma) {
    std::vector<double> v(mdp.states);
    for (std::size_t s = 0; s < mdp.states; ++s) {
        v[s] = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(s * mdp.actions),
                                 q.begin() + static_cast<std::ptrdiff_t>((s + 1) * mdp.actions));
    }
    std::vector<double> out(mdp.states * mdp.actions);
    for (std::size_t s = 0; s < mdp.states; ++s) {
        for (std::size_t a = 0; a < mdp.actions; ++a) {
            double ev = 0.0;
            const double* row = &mdp.transition[(s * mdp.actions + a) * mdp.states];
            for (std::size_t s2 = 0; s2 < mdp.states; ++s2) ev += row[s2] * v[s2];
            out[s * mdp.actions + a] = mdp.r(s, a) + gamma * ev;
        }
    }
    return out;
}

double bellman_residual(const TabularMDP& mdp, std::span<const double> q, double gamma) {
    const auto next = bellman_backup(mdp, q, gamma);
    double worst = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) worst = std::max(worst, std::abs(next[i] - q[i]));
    return worst;
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double gamma, double tol, std::size_t max_iterations) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("value_iteration: gamma must lie in [0, 1)");
    if (!(tol > 0.0)) throw ConfigError("value_iteration: tol must be positive");
    mdp.validate();

    ValueIterationResult res;
    res.q.assign(mdp.states * mdp.actions, 0.0);
    while (true) {
        auto next = bellman_backup(mdp, res.q, gamma);
        double change = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) change = std::max(change, std::abs(next[i] - res.q[i]));
        res.q = std::move(next);
        ++res.iterations;
        res.last_change = change;
        // The residual of the returned q is at most gamma * change.
        if (change < tol) break;
        if (res.iterations >= max_iterations) throw DomainError("value_iteration: no convergence within the limit");
    }
    res.v.resize(mdp.states);
    res.policy.resize(mdp.states);
    for (std::size_t s = 0; s < mdp.states; ++s) {
        int best = 0;
        for (std::size_t a = 1; a < mdp.actions; ++a) {
            if (res.q[s * mdp.actions + a] > res.q[s * mdp.actions + static_cast<std::size_t>(best)]) {
                best = static_cast<int>(a);
            }
        }
        res.policy[s] = best;
        res.v[s] = res.q[s * mdp.actions + static_cast<std::size_t>(best)];
    }
    return res;
}

std::vector<double> evaluate_policy(const TabularMDP& mdp, std::span<const int> policy, double gamma) {
    if (policy.size() != mdp.states) throw ConfigError("evaluate_policy: policy size mismatch");
    const auto n = static_cast<Eigen::Index>(mdp.states);
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd b(n);
    for (std::size_t s = 0; s < mdp.states; ++s) {
        const auto act = static_cast<std::size_t>(policy[s]);
        if (act >= mdp.actions) throw ConfigError("evaluate_policy: action out of range");
        b(static_cast<Eigen::Index>(s)) = mdp.r(s, act);
        for (std::size_t s2 = 0; s2 < mdp.states; ++s2) {
            a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s2)) -= gamma * mdp.p(s, act, s2);
        }
    }
    const Eigen::VectorXd v = a.partialPivLu().solve(b);
    return {v.data(), v.data() + v.size()};
}

}  // namespace lplab::agents
