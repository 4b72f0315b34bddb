#include "lplab/harness/studies.hpp"

#include <cmath>
#include <random>

#include "lplab/accounting.hpp"
#include "lplab/errors.hpp"
#include "lplab/marketdata.hpp"

namespace lplab::harness {

int ToyMdp::level_at(int phase) const {
    const int top = spec.levels - 1;
    phase %= phases();
    return phase <= top ? phase : 2 * top - phase;
}

double ToyMdp::price_at_level(int level) const {
    return amm::tick_to_price(static_cast<amm::Tick>(level) * spec.pool.tick_spacing);
}

std::size_t ToyMdp::encode(const ToyState& s) const {
    const std::size_t per_phase = 1 + static_cast<std::size_t>(spec.levels * spec.max_width);
    const std::size_t pos =
        s.center < 0 ? 0 : 1 + static_cast<std::size_t>(s.center * spec.max_width + (s.width - 1));
    return static_cast<std::size_t>(s.phase) * per_phase + pos;
}

ToyState ToyMdp::decode(std::size_t s) const {
    const std::size_t per_phase = 1 + static_cast<std::size_t>(spec.levels * spec.max_width);
    ToyState t;
    t.phase = static_cast<int>(s / per_phase);
    const std::size_t pos = s % per_phase;
    if (pos > 0) {
        t.center = static_cast<int>((pos - 1) / static_cast<std::size_t>(spec.max_width));
        t.width = static_cast<int>((pos - 1) % static_cast<std::size_t>(spec.max_width)) + 1;
    }
    return t;
}

std::size_t ToyMdp::observation_size() const {
    return static_cast<std::size_t>(phases() + 1 + spec.levels + 1 + spec.max_width);
}

std::vector<double> ToyMdp::observation(std::size_t s) const {
    const ToyState t = decode(s);
    std::vector<double> o(observation_size(), 0.0);
    o[static_cast<std::size_t>(t.phase)] = 1.0;
    o[static_cast<std::size_t>(phases() + 1 + t.center)] = 1.0;  // centre -1 maps to the "none" slot
    o[static_cast<std::size_t>(phases() + 1 + spec.levels + t.width)] = 1.0;
    return o;
}

ToyMdp build_toy_mdp(const ToyMdpSpec& spec) {
    if (spec.levels < 2) throw ConfigError("toy mdp: levels must be >= 2");
    if (spec.max_width < 1) throw ConfigError("toy mdp: max_width must be >= 1");
    if (!(spec.budget > 0.0) || !(spec.gas >= 0.0)) throw ConfigError("toy mdp: budget > 0 and gas >= 0 required");
    spec.pool.validate(true);

    ToyMdp m;
    m.spec = spec;
    const auto per_phase = 1 + static_cast<std::size_t>(spec.levels * spec.max_width);
    const std::size_t states = static_cast<std::size_t>(m.phases()) * per_phase;
    const auto actions = static_cast<std::size_t>(spec.max_width + 1);
    m.mdp = agents::TabularMDP::make(states, actions);
    m.next.assign(states * actions, 0);

    // Liquidity of a position depends only on (centre, width): it is always
    // opened at its centre price with the same budget.
    auto position = [&](int center, int width) {
        const auto d = static_cast<amm::Tick>(spec.pool.tick_spacing);
        const amm::TickRange range{(center - width) * d, (center + width) * d};
        const double L = amm::liquidity_for_budget(spec.budget, m.price_at_level(center), range);
        return amm::LiquidityPosition::from_ticks(range, L, spec.pool);
    };

    for (std::size_t s = 0; s < states; ++s) {
        const ToyState t = m.decode(s);
        const int level = m.level_at(t.phase);
        const std::vector<double> path{m.price_at_level(level), m.price_at_level(m.level_at(t.phase + 1))};
        for (std::size_t a = 0; a < actions; ++a) {
            ToyState n = t;
            n.phase = (t.phase + 1) % m.phases();
            double reward = 0.0;
            if (a > 0) {
                n.center = level;
                n.width = static_cast<int>(a);
                reward -= spec.gas;
            }
            if (n.center >= 0) {
                for (const auto& step : accounting::ledger_over_path(position(n.center, n.width), spec.pool.fee_tier, path)) {
                    reward += step.fee + step.lvr_increment;
                }
            }
            const std::size_t s2 = m.encode(n);
            m.mdp.p(s, a, s2) = 1.0;
            m.mdp.r(s, a) = reward;
            m.next[s * actions + a] = s2;
        }
    }
    m.initial_state = m.encode(ToyState{0, -1, 0});
    return m;
}

ToyEnv::ToyEnv(const ToyMdp& mdp, std::size_t horizon, bool random_start)
    : mdp_(mdp), horizon_(horizon), random_start_(random_start) {
    if (horizon == 0) throw ConfigError("toy env: horizon must be positive");
}

std::vector<double> ToyEnv::reset(std::uint64_t episode_seed) {
    state_ = mdp_.initial_state;
    if (random_start_) {
        std::mt19937_64 rng(episode_seed);
        state_ = std::uniform_int_distribution<std::size_t>(0, mdp_.mdp.states - 1)(rng);
    }
    clock_ = 0;
    return mdp_.observation(state_);
}

rl::StepOutcome ToyEnv::step(int action) {
    if (action < 0 || static_cast<std::size_t>(action) >= mdp_.mdp.actions) {
        throw DomainError("toy env: action out of range");
    }
    if (clock_ >= horizon_) throw DomainError("toy env: episode is done");
    const auto a = static_cast<std::size_t>(action);
    const double r = mdp_.mdp.r(state_, a);
    state_ = mdp_.next[state_ * mdp_.mdp.actions + a];
    ++clock_;
    return {mdp_.observation(state_), r, clock_ >= horizon_};
}

double toy_policy_return(const ToyMdp& mdp, const std::vector<int>& policy, double gamma, std::size_t horizon) {
    std::size_t s = mdp.initial_state;
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto a = static_cast<std::size_t>(policy[s]);
        total += discount * mdp.mdp.r(s, a);
        discount *= gamma;
        s = mdp.next[s * mdp.mdp.actions + a];
    }
    return total;
}

double toy_network_return(const ToyMdp& mdp, const nn::NetworkParams& params, double gamma, std::size_t horizon) {
    ToyEnv env(mdp, horizon, false);
    return agents::greedy_rollout(env, params, 0, gamma).discounted;
}

// ---- drift study ----

SampleStats sample_stats(const std::vector<double>& xs) {
    if (xs.size() < 2) throw DomainError("sample_stats: need at least two samples");
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

bool DriftStudyResult::hedged_neutral() const { return std::abs(hedged_diff) < 2.0 * hedged_se; }
bool DriftStudyResult::unhedged_follows() const { return unhedged_diff > 2.0 * unhedged_se; }

std::pair<double, double> tau_reset_relative_pnl(std::vector<features::Candle> candles, const env::EnvConfig& env,
                                                 int tau, std::size_t hours) {
    env::EnvConfig ec = env;
    ec.initial_width = tau;
    ec.episode_length = hours;
    const marketdata::IndexRange split{0, candles.size()};
    auto series = std::make_shared<env::MarketSeries>(env::MarketSeries::build(std::move(candles)));
    env::LiquidityEnv e(ec, series, split);
    e.reset(e.first_offset());
    double fee = 0.0, gas = 0.0, lvr = 0.0, dv = 0.0;
    while (!e.done()) {
        const auto& s = e.state();
        const int a = agents::policy_tau_reset(tau, s.position, series->candles[s.index].close);
        const auto r = e.step(a);
        fee += r.info.fee;
        gas += r.info.gas;
        lvr += r.info.lvr;
        dv += r.info.value_change;
    }
    return {(fee - gas + lvr) / ec.l0, (fee - gas + dv) / ec.l0};
}

DriftStudyResult drift_neutrality_study(const DriftStudyConfig& config) {
    if (config.seeds < 2) throw ConfigError("drift study: need at least two seeds");
    DriftStudyResult res;
    res.up.mu = config.mu;
    res.down.mu = -config.mu;
    for (std::size_t k = 0; k < config.seeds; ++k) {
        for (DriftArm* arm : {&res.up, &res.down}) {
            marketdata::GbmParams g;
            g.p0 = config.p0;
            g.drift = arm->mu;
            g.sigma = config.sigma;
            g.hours = config.env.warmup + 1 + config.hours;
            g.seed = config.first_seed + k;
            const auto [h, u] = tau_reset_relative_pnl(marketdata::synth_gbm(g), config.env, config.tau, config.hours);
            arm->hedged.push_back(h);
            arm->unhedged.push_back(u);
        }
    }
    const auto hu = sample_stats(res.up.hedged), hd = sample_stats(res.down.hedged);
    const auto uu = sample_stats(res.up.unhedged), ud = sample_stats(res.down.unhedged);
    res.hedged_diff = hu.mean - hd.mean;
    res.hedged_se = std::hypot(hu.se, hd.se);
    res.unhedged_diff = uu.mean - ud.mean;
    res.unhedged_se = std::hypot(uu.se, ud.se);
    return res;
}

}  // namespace lplab::harness
