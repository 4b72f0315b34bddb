#include "lplab/harness/config.hpp"

#include <cstdlib>
#include <fstream>

#include "lplab/errors.hpp"

namespace lplab::harness {

using nlohmann::json;

Method parse_method(std::string_view name) {
    if (name == "ddqn") return Method::Ddqn;
    if (name == "tau-reset") return Method::TauReset;
    if (name == "ewa") return Method::Ewa;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected ddqn, tau-reset or ewa)");
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::Ddqn:
            return "ddqn";
        case Method::TauReset:
            return "tau-reset";
        case Method::Ewa:
            return "ewa";
    }
    return "?";
}

SplitName parse_split(std::string_view name) {
    if (name == "train") return SplitName::Train;
    if (name == "validation") return SplitName::Validation;
    if (name == "test") return SplitName::Test;
    throw ConfigError("unknown split '" + std::string(name) + "' (expected train, validation or test)");
}

std::string_view to_string(SplitName s) {
    switch (s) {
        case SplitName::Train:
            return "train";
        case SplitName::Validation:
            return "validation";
        case SplitName::Test:
            return "test";
    }
    return "?";
}

RunConfig::RunConfig() { env.l0 = 250.0; }

namespace {

[[noreturn]] void type_error(const std::string& key, const char* what) {
    throw ConfigError("config: field '" + key + "' must be " + what);
}

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) type_error(key, "a number");
    return v.get<double>();
}

std::int64_t get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) type_error(key, "an integer");
    return v.get<std::int64_t>();
}

std::size_t get_count(const json& v, const std::string& key) {
    const auto x = get_int(v, key);
    if (x < 0) type_error(key, "non-negative");
    return static_cast<std::size_t>(x);
}

std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string()) type_error(key, "a string");
    return v.get<std::string>();
}

void merge_ddqn(agents::DDQNConfig& d, const json& j) {
    if (!j.is_object()) type_error("ddqn", "an object");
    for (const auto& [key, v] : j.items()) {
        const std::string k = "ddqn." + key;
        if (key == "hidden") {
            if (!v.is_array()) type_error(k, "an array of layer sizes");
            d.hidden.clear();
            for (const auto& h : v) d.hidden.push_back(get_count(h, k));
        } else if (key == "gamma") {
            d.gamma = get_number(v, k);
        } else if (key == "batch_size") {
            d.batch_size = get_count(v, k);
        } else if (key == "buffer_capacity") {
            d.buffer_capacity = get_count(v, k);
        } else if (key == "learning_rate") {
            d.learning_rate = get_number(v, k);
        } else if (key == "clip_norm") {
            d.clip_norm = get_number(v, k);
        } else if (key == "target_rate") {
            d.target_rate = get_number(v, k);
        } else if (key == "epsilon_start") {
            d.epsilon_start = get_number(v, k);
        } else if (key == "epsilon_end") {
            d.epsilon_end = get_number(v, k);
        } else if (key == "epsilon_fraction") {
            d.epsilon_fraction = get_number(v, k);
        } else if (key == "learn_every") {
            d.learn_every = get_count(v, k);
        } else if (key == "warm_start") {
            d.warm_start = get_count(v, k);
        } else if (key == "eval_every") {
            d.eval_every = get_count(v, k);
        } else if (key == "patience") {
            d.patience = get_count(v, k);
        } else if (key == "max_episodes") {
            d.max_episodes = get_count(v, k);
        } else {
            throw ConfigError("config: unknown field '" + k + "'");
        }
    }
}

json ddqn_json(const agents::DDQNConfig& d) {
    return json{{"hidden", d.hidden},
                {"gamma", d.gamma},
                {"batch_size", d.batch_size},
                {"buffer_capacity", d.buffer_capacity},
                {"learning_rate", d.learning_rate},
                {"clip_norm", d.clip_norm},
                {"target_rate", d.target_rate},
                {"epsilon_start", d.epsilon_start},
                {"epsilon_end", d.epsilon_end},
                {"epsilon_fraction", d.epsilon_fraction},
                {"learn_every", d.learn_every},
                {"warm_start", d.warm_start},
                {"eval_every", d.eval_every},
                {"patience", d.patience},
                {"max_episodes", d.max_episodes}};
}

}  // namespace

void RunConfig::merge_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "pool") {
            pool = get_string(v, key);
        } else if (key == "fee_tier") {
            pool_spec.fee_tier = get_number(v, key);
        } else if (key == "tick_spacing") {
            pool_spec.tick_spacing = static_cast<int>(get_int(v, key));
        } else if (key == "data") {
            data = get_string(v, key);
        } else if (key == "swaps") {
            swaps = get_string(v, key);
        } else if (key == "period") {
            period = static_cast<int>(get_int(v, key));
        } else if (key == "split_start") {
            split_start = get_string(v, key);
        } else if (key == "train_hours") {
            train_hours = get_int(v, key);
        } else if (key == "validation_hours") {
            validation_hours = get_int(v, key);
        } else if (key == "test_hours") {
            test_hours = get_int(v, key);
        } else if (key == "eval_split") {
            eval_split = parse_split(get_string(v, key));
        } else if (key == "method") {
            method = parse_method(get_string(v, key));
        } else if (key == "l0") {
            env.l0 = get_number(v, key);
        } else if (key == "gas") {
            env.gas = get_number(v, key);
        } else if (key == "max_width") {
            env.max_width = static_cast<int>(get_int(v, key));
        } else if (key == "episode_length") {
            env.episode_length = get_count(v, key);
        } else if (key == "warmup") {
            env.warmup = get_count(v, key);
        } else if (key == "reward_mode") {
            env.reward_mode = env::parse_reward_mode(get_string(v, key));
        } else if (key == "path_model") {
            env.path_model = env::parse_path_model(get_string(v, key));
        } else if (key == "normalization") {
            env.normalization = features::parse_normalization_mode(get_string(v, key));
        } else if (key == "seed") {
            if (!v.is_number_unsigned() && !v.is_number_integer()) type_error(key, "an integer");
            seed = v.get<std::uint64_t>();
        } else if (key == "output_dir") {
            output_dir = get_string(v, key);
        } else if (key == "tau") {
            if (v.is_null()) {
                tau.reset();
            } else {
                tau = static_cast<int>(get_int(v, key));
            }
        } else if (key == "ewa") {
            if (v.is_null()) {
                ewa.reset();
                continue;
            }
            if (!v.is_object()) type_error(key, "an object or null");
            agents::EWAConfig e = ewa.value_or(agents::EWAConfig{});
            for (const auto& [k2, v2] : v.items()) {
                const std::string k = "ewa." + k2;
                if (k2 == "n") {
                    e.n_widths = static_cast<int>(get_int(v2, k));
                } else if (k2 == "eta") {
                    e.eta = get_number(v2, k);
                } else if (k2 == "t_re") {
                    e.t_re = static_cast<int>(get_int(v2, k));
                } else {
                    throw ConfigError("config: unknown field '" + k + "'");
                }
            }
            ewa = e;
        } else if (key == "ddqn") {
            merge_ddqn(ddqn, v);
        } else if (key == "budget") {
            budget = get_count(v, key);
        } else if (key == "checkpoint") {
            checkpoint = get_string(v, key);
        } else {
            throw ConfigError("config: unknown field '" + key + "'");
        }
    }
    env.pool = pool_spec;
}

json RunConfig::to_json() const {
    json j{{"pool", pool},
           {"fee_tier", pool_spec.fee_tier},
           {"tick_spacing", pool_spec.tick_spacing},
           {"data", data},
           {"swaps", swaps},
           {"period", period},
           {"split_start", split_start},
           {"train_hours", train_hours},
           {"validation_hours", validation_hours},
           {"test_hours", test_hours},
           {"eval_split", std::string(to_string(eval_split))},
           {"method", std::string(to_string(method))},
           {"l0", env.l0},
           {"gas", env.gas},
           {"max_width", env.max_width},
           {"episode_length", env.episode_length},
           {"warmup", env.warmup},
           {"reward_mode", std::string(env::to_string(env.reward_mode))},
           {"path_model", std::string(env::to_string(env.path_model))},
           {"normalization", std::string(features::to_string(env.normalization))},
           {"seed", seed},
           {"output_dir", output_dir},
           {"tau", tau ? json(*tau) : json(nullptr)},
           {"ddqn", ddqn_json(ddqn)},
           {"budget", budget},
           {"checkpoint", checkpoint}};
    j["ewa"] = ewa ? json{{"n", ewa->n_widths}, {"eta", ewa->eta}, {"t_re", ewa->t_re}} : json(nullptr);
    return j;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfig c;
    c.merge_json(j);
    return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string RunConfig::hash() const {
    json j = to_json();
    j.erase("output_dir");
    return hex64(fnv1a64(j.dump()));
}

void RunConfig::validate() const {
    try {
        pool_spec.validate(true);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: fee_tier/tick_spacing: ") + e.what());
    }
    if (!(env.pool == pool_spec)) throw ConfigError("config: env pool differs from fee_tier/tick_spacing");
    env.validate();
    if (period != 0 && !split_start.empty()) {
        throw ConfigError("config: fields 'period' and 'split_start' conflict; set period to 0 for a custom split");
    }
    if (period == 0 && split_start.empty()) throw ConfigError("config: field 'split_start' is required when period is 0");
    if (period < 0 || period > 4) throw ConfigError("config: field 'period' must lie in 0..4");
    if (train_hours <= 0 || validation_hours <= 0 || test_hours <= 0) {
        throw ConfigError("config: fields 'train_hours', 'validation_hours', 'test_hours' must be positive");
    }
    if (tau && *tau < 1) throw ConfigError("config: field 'tau' must be >= 1");
    if (tau && *tau > env.max_width) throw ConfigError("config: field 'tau' exceeds 'max_width'");
    if (ewa) ewa->validate();
    if (method == Method::Ddqn) ddqn.validate();
}

marketdata::DatasetPartition RunConfig::partition_scheme() const {
    if (period != 0) return marketdata::period_partition(period);
    return marketdata::custom_partition(marketdata::parse_utc_date(split_start), train_hours, validation_hours,
                                        test_hours);
}

int RunConfig::resolved_tau(bool* oracle_tuned) const {
    if (oracle_tuned) *oracle_tuned = !tau.has_value();
    if (tau) return *tau;
    if (period == 0) throw ConfigError("config: field 'tau' is required for custom splits");
    return reference_tau(pool, period, env.l0);
}

agents::EWAConfig RunConfig::resolved_ewa() const {
    if (ewa) return *ewa;
    if (period == 0) throw ConfigError("config: field 'ewa' is required for custom splits");
    return reference_ewa(pool, period, env.l0);
}

namespace {

int pool_row(const std::string& pool) {
    if (pool == "ETH-USDC-0.3") return 0;
    if (pool == "ETH-USDT-0.3") return 1;
    throw ConfigError("no reference hyperparameters for pool '" + pool + "'");
}

int l0_column(double l0) {
    if (l0 == 250.0) return 0;
    if (l0 == 500.0) return 1;
    if (l0 == 1000.0) return 2;
    throw ConfigError("no reference hyperparameters for l0 " + std::to_string(l0));
}

int period_row(int period) {
    if (period < 1 || period > 4) throw ConfigError("no reference hyperparameters for period " + std::to_string(period));
    return period - 1;
}

// [pool][period][l0]
constexpr int kTau[2][4][3] = {
    {{6, 4, 1}, {5, 2, 1}, {6, 3, 2}, {4, 3, 1}},
    {{6, 4, 1}, {5, 2, 1}, {10, 3, 1}, {4, 3, 1}},
};

struct EwaEntry {
    int n;
    double eta;
    int t_re;
};

constexpr EwaEntry kEwa[2][4][3] = {
    {{{10, 1, 21}, {10, 1, 14}, {10, 1, 6}},
     {{10, 10, 24}, {10, 10, 24}, {10, 10, 9}},
     {{10, 1, 22}, {10, 4, 15}, {10, 1, 13}},
     {{10, 7, 24}, {10, 1, 21}, {10, 1, 18}}},
    {{{10, 1, 21}, {10, 1, 6}, {10, 1, 6}},
     {{10, 10, 24}, {10, 10, 24}, {10, 10, 12}},
     {{10, 1, 22}, {10, 7, 22}, {10, 10, 3}},
     {{10, 7, 21}, {10, 1, 21}, {10, 1, 21}}},
};

}  // namespace

int reference_tau(const std::string& pool, int period, double l0) {
    return kTau[pool_row(pool)][period_row(period)][l0_column(l0)];
}

agents::EWAConfig reference_ewa(const std::string& pool, int period, double l0) {
    const auto& e = kEwa[pool_row(pool)][period_row(period)][l0_column(l0)];
    return agents::EWAConfig{e.n, e.eta, e.t_re};
}

std::filesystem::path resolve_data_path(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative() && !std::filesystem::exists(p)) {
        if (const char* root = std::getenv("LPLAB_DATA_DIR"); root && *root) {
            auto alt = std::filesystem::path(root) / p;
            if (std::filesystem::exists(alt)) return alt;
        }
    }
    return p;
}

}  // namespace lplab::harness
