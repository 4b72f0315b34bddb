#include "lplab/verify/checks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "lplab/accounting.hpp"
#include "lplab/agents.hpp"
#include "lplab/errors.hpp"
#include "lplab/harness/report.hpp"
#include "lplab/verify/oracles.hpp"

namespace lplab::verify {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

CheckResult result(bool ok, std::string detail) { return {"", ok, std::move(detail), 0.0}; }

double max_abs(std::initializer_list<double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

CheckResult timed(const std::string& name, const std::function<CheckResult()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
        r = fn();
    } catch (const Error& e) {
        r = result(false, "error: " + e.kind() + ": " + e.what());
    } catch (const std::exception& e) {
        r = result(false, std::string("error: ") + e.what());
    }
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

CheckResult accounting_identity(std::size_t trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> moves(1, 40);
    double worst_rel = 0.0;
    double worst_inc = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trials; ++i) {
        const auto pos = random_position(rng);
        const auto path = random_path(rng, 1600.0, moves(rng), 0.03);
        const auto lvr = accounting::lvr_over_path(pos, path);
        double dv = 0.0;
        for (std::size_t t = 1; t < path.size(); ++t) dv += amm::value_change(pos, path[t - 1], path[t]);
        const double rebal = rebalancing_pnl(pos, path);
        const double scale = max_abs({dv, rebal, lvr.lvr_total});
        const double err = std::abs(dv - (rebal + lvr.lvr_total));
        if (scale > 0.0) worst_rel = std::max(worst_rel, err / scale);
        for (const auto& s : lvr.steps) worst_inc = std::max(worst_inc, s.lvr_increment);
    }
    const bool ok = worst_rel <= 1e-9 && worst_inc <= 1e-12;
    return result(ok, fmt("%zu trials, worst relative error %.3g (tol 1e-9), max LVR increment %.3g (tol 1e-12)",
                          trials, worst_rel, worst_inc));
}

CheckResult fee_oracle(std::size_t paths, std::size_t micro_steps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> moves(2, 8);
    double worst = 0.0;
    std::size_t done = 0;
    while (done < paths) {
        const auto pos = random_position(rng);
        const auto path = random_path(rng, 1600.0, moves(rng), 0.05);
        const bool crosses = std::any_of(path.begin(), path.end(), [&](double p) { return !pos.in_range(p); }) &&
                             std::any_of(path.begin(), path.end(), [&](double p) { return pos.in_range(p); });
        if (!crosses) continue;
        const double closed = amm::fee_over_path(pos, 0.003, path);
        const double brute = brute_force_fee_over_path(pos, 0.003, path, micro_steps);
        const double scale = std::max(std::abs(closed), std::abs(brute));
        if (scale > 0.0) worst = std::max(worst, std::abs(closed - brute) / scale);
        ++done;
    }
    return result(worst <= 1e-6, fmt("%zu boundary-crossing paths, %zu micro-steps per move, worst relative "
                                     "error %.3g (tol 1e-6)",
                                     paths, micro_steps, worst));
}

CheckResult reserve_continuity(std::size_t positions, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> budget_log(-2.0, 6.0);
    std::normal_distribution<double> price_jitter(0.0, 0.1);
    double worst_edge = 0.0;
    double worst_budget = 0.0;
    auto rel = [](double a, double b) {
        const double s = std::max(std::abs(a), std::abs(b));
        return s > 0.0 ? std::abs(a - b) / s : 0.0;
    };
    for (std::size_t i = 0; i < positions; ++i) {
        const auto pos = random_position(rng);
        for (double edge : {pos.price_lower, pos.price_upper}) {
            const double in = edge == pos.price_lower ? std::nextafter(edge, pos.price_upper)
                                                      : std::nextafter(edge, pos.price_lower);
            const double out = edge == pos.price_lower ? std::nextafter(edge, 0.0)
                                                       : std::nextafter(edge, std::numeric_limits<double>::max());
            const auto a = amm::reserves(pos, in), b = amm::reserves(pos, out), c = amm::reserves(pos, edge);
            const double vscale = amm::position_value(pos, edge);
            // x and y are compared on the value scale, where one of them is zero.
            worst_edge = std::max({worst_edge, std::abs(a.x - b.x) * edge / vscale, std::abs(a.y - b.y) / vscale,
                                   std::abs(c.x - a.x) * edge / vscale, std::abs(c.y - a.y) / vscale,
                                   rel(amm::position_value(pos, in), amm::position_value(pos, out))});
        }
        const double B = std::exp(budget_log(rng));
        const double p = 1600.0 * std::exp(price_jitter(rng));
        const double L = amm::liquidity_for_budget(B, p, pos.price_lower, pos.price_upper);
        const auto sized = amm::LiquidityPosition::from_prices(pos.price_lower, pos.price_upper, L);
        worst_budget = std::max(worst_budget, rel(amm::position_value(sized, p), B));
    }
    const bool ok = worst_edge <= 1e-9 && worst_budget <= 1e-9;
    return result(ok, fmt("%zu positions, worst boundary gap %.3g, worst budget round-trip %.3g (tol 1e-9)",
                          positions, worst_edge, worst_budget));
}

CheckResult printed_table(const std::filesystem::path& fixture) {
    std::ifstream in(fixture);
    if (!in) throw ConfigError("cannot open " + fixture.string());
    const auto rows = harness::read_printed_table(in);
    std::size_t exact = 0;
    std::string misses;
    for (const auto& r : rows) {
        const auto c = harness::check_printed_row(r);
        if (c.exact()) {
            ++exact;
            continue;
        }
        if (!misses.empty()) misses += "; ";
        misses += fmt("%s P%d %s: %s-%s-%s=%+.3f, printed %s", r.pool.c_str(), r.period, r.method.c_str(),
                      r.fee.c_str(), r.gas.c_str(), r.lvr.c_str(), c.computed / 1000.0, r.pnl.c_str());
    }
    std::string detail = fmt("%zu/%zu rows exact to 3 decimals", exact, rows.size());
    if (!misses.empty()) detail += " (mismatches: " + misses + ")";
    return result(exact == rows.size() && rows.size() == 32, detail);
}

namespace {

// Redraws inputs until no trunk pre-activation sits within `margin` of the
// ReLU kink, so that finite differences do not straddle it.
Eigen::MatrixXd inputs_off_kink(const nn::NetworkParams& net, Eigen::Index batch, std::mt19937_64& rng,
                                double margin) {
    std::normal_distribution<double> z(0.0, 1.0);
    const auto dim = static_cast<Eigen::Index>(net.input_dim());
    for (;;) {
        Eigen::MatrixXd x(dim, batch);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
        Eigen::MatrixXd h = x;
        bool clear = true;
        for (const auto& layer : net.trunk) {
            Eigen::MatrixXd pre = (layer.weights * h).colwise() + layer.bias;
            if ((pre.array().abs() < margin).any()) {
                clear = false;
                break;
            }
            h = pre.cwiseMax(0.0);
        }
        if (clear) return x;
    }
}

}  // namespace

CheckResult network_checks(std::uint64_t seed, const std::filesystem::path& scratch_dir) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 3.0);

    // Mean identity.
    const auto net = nn::NetworkParams::init(12, {32, 32}, 6, seed);
    double worst_mean = 0.0;
    std::vector<double> s(12);
    for (int i = 0; i < 1000; ++i) {
        for (double& v : s) v = z(rng);
        const auto out = nn::forward(net, s);
        worst_mean = std::max(worst_mean, std::abs(out.q.mean() - out.v));
    }

    // Gradients.
    double worst_grad = 0.0;
    const std::vector<std::vector<std::size_t>> shapes{{5}, {6, 4}, {4, 5, 3}};
    for (int trial = 0; trial < 6; ++trial) {
        const auto& hidden = shapes[static_cast<std::size_t>(trial) % shapes.size()];
        const std::size_t in = 3 + static_cast<std::size_t>(trial % 3), actions = 2 + static_cast<std::size_t>(trial % 2);
        const auto p = nn::NetworkParams::init(in, hidden, actions, seed * 100 + static_cast<std::uint64_t>(trial));
        nn::Minibatch b;
        b.states = inputs_off_kink(p, 4, rng, 1e-3);
        std::uniform_int_distribution<int> act(0, static_cast<int>(actions) - 1);
        for (int k = 0; k < 4; ++k) b.actions.push_back(act(rng));
        b.targets = Eigen::VectorXd::NullaryExpr(4, [&] { return z(rng); });
        const auto analytic = nn::loss_and_gradients(p, b).grads.flatten();
        const auto numeric = numeric_gradient(p, b, 1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-6});
            worst_grad = std::max(worst_grad, std::abs(analytic[i] - numeric[i]) / scale);
        }
    }

    // Checkpoint round-trip after a few optimizer steps, so the moments are non-trivial.
    auto params = nn::NetworkParams::init(7, {9, 8}, 4, seed + 7);
    auto opt = nn::OptimizerState::for_params(params);
    for (int k = 0; k < 3; ++k) {
        nn::Minibatch b;
        b.states = Eigen::MatrixXd::NullaryExpr(7, 5, [&] { return z(rng); });
        b.actions = {0, 1, 2, 3, 1};
        b.targets = Eigen::VectorXd::NullaryExpr(5, [&] { return z(rng); });
        nn::apply_update(params, opt, nn::loss_and_gradients(params, b).grads);
    }
    const auto dir = scratch_dir.empty() ? std::filesystem::temp_directory_path() : scratch_dir;
    const auto file = dir / ("lplab_verify_ckpt_" + std::to_string(seed) + ".json");
    nn::save_checkpoint(file, params, opt, {seed, "verify"});
    const auto back = nn::load_checkpoint(file, "verify");
    std::filesystem::remove(file);
    const auto a = params.flatten(), bflat = back.params.flatten();
    const auto am = opt.m.flatten(), bm = back.optimizer.m.flatten();
    const auto av = opt.v.flatten(), bv = back.optimizer.v.flatten();
    auto bits_equal = [](const std::vector<double>& x, const std::vector<double>& y) {
        return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0;
    };
    const bool round_trip = bits_equal(a, bflat) && bits_equal(am, bm) && bits_equal(av, bv) &&
                            back.optimizer.step == opt.step && back.params.same_shape(params) &&
                            back.meta.seed == seed && back.warnings.empty();

    const bool ok = worst_mean <= 1e-6 && worst_grad <= 1e-4 && round_trip;
    return result(ok, fmt("mean identity worst %.3g (tol 1e-6), gradient worst relative %.3g (tol 1e-4), "
                          "checkpoint round-trip %s",
                          worst_mean, worst_grad, round_trip ? "bit-exact" : "MISMATCH"));
}

CheckResult ewa_behaviour(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_dist(1, 20);
    std::normal_distribution<double> z(0.0, 50.0);
    double worst_sum = 0.0;
    double worst_shift = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> cum(static_cast<std::size_t>(n_dist(rng)));
        for (double& c : cum) c = z(rng);
        const auto w = agents::ewa_weights(cum, 1.0);
        double sum = 0.0;
        for (double x : w) sum += x;
        worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        auto shifted = cum;
        for (double& c : shifted) c += 123.0;
        const auto w2 = agents::ewa_weights(shifted, 1.0);
        for (std::size_t i = 0; i < w.size(); ++i) worst_shift = std::max(worst_shift, std::abs(w[i] - w2[i]));
    }
    const std::vector<double> spread{5.0, -3.0, 12.0, 0.0};
    double worst_uniform = 0.0;
    for (double x : agents::ewa_weights(spread, 1e-12)) worst_uniform = std::max(worst_uniform, std::abs(x - 0.25));
    const std::vector<double> ex{1.0, 0.0, 0.0};
    const auto w = agents::ewa_weights(ex, 1.0);
    const bool example = std::lround(w[0] * 1000) == 576 && std::lround(w[1] * 1000) == 212 &&
                         std::lround(w[2] * 1000) == 212;
    const bool ok = worst_sum <= 1e-12 && worst_shift <= 1e-12 && worst_uniform <= 1e-9 && example;
    return result(ok, fmt("sum error %.3g (tol 1e-12), shift invariance %.3g, eta->0 deviation %.3g, "
                          "softmax(1,0,0) = (%.3f, %.3f, %.3f)",
                          worst_sum, worst_shift, worst_uniform, w[0], w[1], w[2]));
}

CheckResult toy_convergence(const ToyConvergenceConfig& config) {
    const auto toy = harness::build_toy_mdp();
    const auto vi = agents::value_iteration(toy.mdp, config.gamma, 1e-10);
    const double oracle = harness::toy_policy_return(toy, vi.policy, config.gamma, config.horizon);
    if (!(oracle > 0.0)) throw ValidationError("toy mdp: oracle return is not positive");
    std::size_t hits = 0;
    std::string ratios;
    for (std::size_t seed = 0; seed < config.seeds; ++seed) {
        harness::ToyEnv train(toy, config.horizon, true), validation(toy, config.horizon, false);
        agents::DDQNConfig c;
        c.gamma = config.gamma;
        c.buffer_capacity = config.buffer_capacity;
        c.patience = 1000;
        const auto res = agents::train_ddqn({train, validation, 0}, c, config.budget, seed);
        const double ratio = harness::toy_network_return(toy, res.best, config.gamma, config.horizon) / oracle;
        if (ratio >= config.fraction) ++hits;
        ratios += fmt("%s%.3f", ratios.empty() ? "" : " ", ratio);
    }
    return result(hits >= config.required,
                  fmt("%zu/%zu seeds >= %.0f%% of oracle return %.4f (ratios %s)", hits, config.seeds,
                      config.fraction * 100, oracle, ratios.c_str()));
}

CheckResult drift_neutrality(const harness::DriftStudyConfig& config) {
    const auto r = harness::drift_neutrality_study(config);
    const auto hu = harness::sample_stats(r.up.hedged), hd = harness::sample_stats(r.down.hedged);
    const auto uu = harness::sample_stats(r.up.unhedged), ud = harness::sample_stats(r.down.unhedged);
    const bool ok = r.hedged_neutral() && r.unhedged_follows();
    return result(ok, fmt("hedged %+.4f vs %+.4f, diff %+.4f (2se %.4f, %s); unhedged %+.4f vs %+.4f, diff %+.4f "
                          "(2se %.4f, %s)",
                          hu.mean, hd.mean, r.hedged_diff, 2 * r.hedged_se,
                          r.hedged_neutral() ? "neutral" : "NOT neutral", uu.mean, ud.mean, r.unhedged_diff,
                          2 * r.unhedged_se, r.unhedged_follows() ? "follows drift" : "does NOT follow drift"));
}

}  // namespace lplab::verify
