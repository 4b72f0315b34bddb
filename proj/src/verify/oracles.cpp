#include "lplab/verify/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace lplab::verify {

double brute_force_fee(const amm::LiquidityPosition& pos, double fee_tier, double from, double to,
                       std::size_t micro_steps) {
    if (from == to || micro_steps == 0) return 0.0;
    const double ratio = to / from;
    double inflow = 0.0;
    amm::Reserves prev = amm::reserves(pos, from);
    for (std::size_t k = 1; k <= micro_steps; ++k) {
        const double p = k == micro_steps ? to : from * std::pow(ratio, static_cast<double>(k) / micro_steps);
        const amm::Reserves cur = amm::reserves(pos, p);
        inflow += to > from ? cur.y - prev.y : cur.x - prev.x;
        prev = cur;
    }
    const double fee = fee_tier / (1.0 - fee_tier) * inflow;
    if (to > from) return fee;
    return fee * std::clamp(to, pos.price_lower, pos.price_upper);
}

double brute_force_fee_over_path(const amm::LiquidityPosition& pos, double fee_tier, std::span<const double> path,
                                 std::size_t micro_steps) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        total += brute_force_fee(pos, fee_tier, path[i - 1], path[i], micro_steps);
    }
    return total;
}

double rebalancing_pnl(const amm::LiquidityPosition& pos, std::span<const double> path) {
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        total += amm::reserves(pos, path[i - 1]).x * (path[i] - path[i - 1]);
    }
    return total;
}

amm::LiquidityPosition random_position(std::mt19937_64& rng, double center) {
    const amm::PoolSpec spec;
    std::normal_distribution<double> jitter(0.0, 0.05);
    std::uniform_int_distribution<int> half_width(1, 20);
    std::uniform_real_distribution<double> log_l(-3.0, 3.0);
    const amm::Tick mid = amm::snap_tick(amm::price_to_tick(center * std::exp(jitter(rng))), spec.tick_spacing);
    const amm::Tick w = static_cast<amm::Tick>(half_width(rng)) * spec.tick_spacing;
    return amm::LiquidityPosition::from_ticks({mid - w, mid + w}, std::exp(log_l(rng)), spec);
}

std::vector<double> random_path(std::mt19937_64& rng, double p0, std::size_t moves, double sigma) {
    std::normal_distribution<double> z(0.0, sigma);
    std::vector<double> path{p0};
    path.reserve(moves + 1);
    for (std::size_t i = 0; i < moves; ++i) path.push_back(path.back() * std::exp(z(rng)));
    return path;
}

std::vector<double> numeric_gradient(const nn::NetworkParams& params, const nn::Minibatch& batch, double h) {
    nn::NetworkParams work = params;
    std::vector<double> flat = params.flatten();
    std::vector<double> grad(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + h;
        work.assign(flat);
        const double up = nn::loss_and_gradients(work, batch).loss;
        flat[i] = keep - h;
        work.assign(flat);
        const double down = nn::loss_and_gradients(work, batch).loss;
        flat[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace lplab::verify
