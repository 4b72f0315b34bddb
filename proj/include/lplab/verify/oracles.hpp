// Independent reference computations used by the verification suites and
// the unit tests.
#pragma once

#include <random>
#include <span>
#include <vector>

#include "lplab/amm.hpp"
#include "lplab/nn.hpp"

namespace lplab::verify {

// Fee of one move accrued over `micro_steps` geometric sub-moves from the
// reserve deltas of each sub-move. Token Y flowing in on the way up is fee
// in Y; token X flowing in on the way down is valued at the clipped end price.
double brute_force_fee(const amm::LiquidityPosition& pos, double fee_tier, double from, double to,
                       std::size_t micro_steps);
double brute_force_fee_over_path(const amm::LiquidityPosition& pos, double fee_tier, std::span<const double> path,
                                 std::size_t micro_steps);

// PnL of holding x(p_t) token X over each step: sum x(p_t)(p_{t+1} - p_t).
double rebalancing_pnl(const amm::LiquidityPosition& pos, std::span<const double> path);

// Random position with bounds on the tick grid around `center`.
amm::LiquidityPosition random_position(std::mt19937_64& rng, double center = 1600.0);

// Random path of `moves` log-normal moves starting at p0; some moves are
// large enough to leave the range.
std::vector<double> random_path(std::mt19937_64& rng, double p0, std::size_t moves, double sigma);

// Central finite-difference gradient of the minibatch loss, flattened in the
// same order as NetworkParams::flatten.
std::vector<double> numeric_gradient(const nn::NetworkParams& params, const nn::Minibatch& batch, double h);

}  // namespace lplab::verify
