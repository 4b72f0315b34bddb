#include "lplab/nn.hpp"

#include <json.hpp>

#include <cassert>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "lplab/errors.hpp"

namespace lplab::nn {

namespace {

DenseLayer make_layer(std::size_t in, std::size_t out) {
    return DenseLayer{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
}

void init_layer(DenseLayer& layer, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
}

struct Activations {
    std::vector<Eigen::MatrixXd> pre;   // Z_k per trunk layer
    std::vector<Eigen::MatrixXd> post;  // H_0 = input, H_k = relu(Z_k)
    Eigen::RowVectorXd v;
    Eigen::MatrixXd adv;
    Eigen::MatrixXd q;
};

Activations run(const NetworkParams& p, const Eigen::MatrixXd& x) {
    if (static_cast<std::size_t>(x.rows()) != p.input_dim()) {
        throw ConfigError("forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                          std::to_string(p.input_dim()));
    }
    Activations a;
    a.post.push_back(x);
    for (const auto& layer : p.trunk) {
        Eigen::MatrixXd z = (layer.weights * a.post.back()).colwise() + layer.bias;
        a.post.push_back(z.cwiseMax(0.0));
        a.pre.push_back(std::move(z));
    }
    const auto& h = a.post.back();
    a.v = ((p.value_head.weights * h).colwise() + p.value_head.bias).row(0);
    a.adv = (p.advantage_head.weights * h).colwise() + p.advantage_head.bias;
    const Eigen::RowVectorXd mean = a.adv.colwise().mean();
    a.q = a.adv.rowwise() - mean;
    a.q.rowwise() += a.v;
#ifndef NDEBUG
    for (Eigen::Index i = 0; i < a.q.cols(); ++i) {
        assert(std::abs(a.q.col(i).mean() - a.v(i)) <= 1e-6 * (1.0 + std::abs(a.v(i))));
    }
#endif
    return a;
}

template <typename F>
void zip_layers(NetworkParams& a, const NetworkParams& b, F&& fn) {
    for (std::size_t i = 0; i < a.trunk.size(); ++i) fn(a.trunk[i], b.trunk[i]);
    fn(a.value_head, b.value_head);
    fn(a.advantage_head, b.advantage_head);
}

}  // namespace

NetworkParams NetworkParams::zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                   std::size_t actions) {
    if (input_dim == 0 || actions == 0) throw ConfigError("network: input_dim and actions must be positive");
    NetworkParams p;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        if (h == 0) throw ConfigError("network: hidden sizes must be positive");
        p.trunk.push_back(make_layer(in, h));
        in = h;
    }
    p.value_head = make_layer(in, 1);
    p.advantage_head = make_layer(in, actions);
    return p;
}

NetworkParams NetworkParams::init(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t actions,
                                  std::uint64_t seed) {
    NetworkParams p = zeros(input_dim, hidden, actions);
    std::mt19937_64 rng(seed);
    p.for_each_layer([&](DenseLayer& l) { init_layer(l, rng); });
    return p;
}

NetworkParams NetworkParams::zeros_like() const { return zeros(input_dim(), hidden_sizes(), action_count()); }

std::size_t NetworkParams::input_dim() const {
    return static_cast<std::size_t>(trunk.empty() ? value_head.inputs() : trunk.front().inputs());
}

std::size_t NetworkParams::action_count() const { return static_cast<std::size_t>(advantage_head.outputs()); }

std::vector<std::size_t> NetworkParams::hidden_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& l : trunk) out.push_back(static_cast<std::size_t>(l.outputs()));
    return out;
}

void NetworkParams::for_each_layer(const std::function<void(DenseLayer&)>& fn) {
    for (auto& l : trunk) fn(l);
    fn(value_head);
    fn(advantage_head);
}

void NetworkParams::for_each_layer(const std::function<void(const DenseLayer&)>& fn) const {
    for (const auto& l : trunk) fn(l);
    fn(value_head);
    fn(advantage_head);
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for_each_layer([&](const DenseLayer& l) { n += static_cast<std::size_t>(l.weights.size() + l.bias.size()); });
    return n;
}

std::vector<double> NetworkParams::flatten() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each_layer([&](const DenseLayer& l) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.push_back(l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias(r));
    });
    return out;
}

void NetworkParams::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw ConfigError("network assign: parameter count mismatch");
    std::size_t k = 0;
    for_each_layer([&](DenseLayer& l) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = flat[k++];
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
    });
}

bool NetworkParams::same_shape(const NetworkParams& o) const {
    if (trunk.size() != o.trunk.size()) return false;
    for (std::size_t i = 0; i < trunk.size(); ++i) {
        if (!trunk[i].same_shape(o.trunk[i])) return false;
    }
    return value_head.same_shape(o.value_head) && advantage_head.same_shape(o.advantage_head);
}

void NetworkParams::check_shapes() const {
    Eigen::Index in = trunk.empty() ? value_head.inputs() : trunk.front().inputs();
    auto check = [&](const DenseLayer& l, const std::string& name) {
        if (l.inputs() != in) {
            throw ConfigError("network: " + name + " expects " + std::to_string(l.inputs()) + " inputs, got " +
                              std::to_string(in));
        }
        if (l.bias.size() != l.outputs()) throw ConfigError("network: " + name + " bias size mismatch");
    };
    for (std::size_t i = 0; i < trunk.size(); ++i) {
        check(trunk[i], "trunk[" + std::to_string(i) + "]");
        in = trunk[i].outputs();
    }
    check(value_head, "value_head");
    check(advantage_head, "advantage_head");
    if (value_head.outputs() != 1) throw ConfigError("network: value_head must have one output");
    if (advantage_head.outputs() < 1) throw ConfigError("network: advantage_head has no outputs");
}

bool NetworkParams::all_finite() const {
    bool ok = true;
    for_each_layer([&](const DenseLayer& l) { ok = ok && l.weights.allFinite() && l.bias.allFinite(); });
    return ok;
}

bool NetworkParams::operator==(const NetworkParams& o) const {
    return same_shape(o) && flatten() == o.flatten();
}

ForwardOutput forward(const NetworkParams& params, std::span<const double> s) {
    const Eigen::Map<const Eigen::VectorXd> x(s.data(), static_cast<Eigen::Index>(s.size()));
    for (double v : s) {
        if (!std::isfinite(v)) throw DomainError("forward: non-finite input");
    }
    const auto a = run(params, Eigen::MatrixXd(x));
    return ForwardOutput{a.q.col(0), a.v(0), a.adv.col(0)};
}

Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs) {
    return run(params, inputs).q;
}

LossAndGradients loss_and_gradients(const NetworkParams& params, const Minibatch& batch) {
    const Eigen::Index n = batch.states.cols();
    if (n == 0) throw DomainError("loss_and_gradients: empty minibatch");
    if (static_cast<Eigen::Index>(batch.actions.size()) != n || batch.targets.size() != n) {
        throw ConfigError("loss_and_gradients: minibatch columns, actions and targets differ in length");
    }
    const auto a = run(params, batch.states);
    const auto actions = static_cast<int>(params.action_count());

    // dL/dq is nonzero only at the taken action.
    Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(a.q.rows(), n);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int act = batch.actions[static_cast<std::size_t>(i)];
        if (act < 0 || act >= actions) throw DomainError("loss_and_gradients: action out of range");
        const double err = a.q(act, i) - batch.targets(i);
        loss += err * err;
        dq(act, i) = 2.0 * err / static_cast<double>(n);
    }
    loss /= static_cast<double>(n);

    const Eigen::RowVectorXd dv = dq.colwise().sum();
    Eigen::MatrixXd dadv = dq.rowwise() - dv / static_cast<double>(actions);

    LossAndGradients out;
    out.loss = loss;
    out.grads = params.zeros_like();
    const auto& h = a.post.back();
    out.grads.value_head.weights = dv * h.transpose();
    out.grads.value_head.bias = Eigen::VectorXd::Constant(1, dv.sum());
    out.grads.advantage_head.weights = dadv * h.transpose();
    out.grads.advantage_head.bias = dadv.rowwise().sum();

    Eigen::MatrixXd dh = params.value_head.weights.transpose() * dv + params.advantage_head.weights.transpose() * dadv;
    for (std::size_t k = params.trunk.size(); k-- > 0;) {
        const Eigen::MatrixXd dz = dh.cwiseProduct((a.pre[k].array() > 0.0).cast<double>().matrix());
        out.grads.trunk[k].weights = dz * a.post[k].transpose();
        out.grads.trunk[k].bias = dz.rowwise().sum();
        if (k > 0) dh = params.trunk[k].weights.transpose() * dz;
    }
    return out;
}

OptimizerState OptimizerState::for_params(const NetworkParams& params) {
    OptimizerState s;
    s.m = params.zeros_like();
    s.v = params.zeros_like();
    return s;
}

bool OptimizerState::operator==(const OptimizerState& o) const {
    return learning_rate == o.learning_rate && beta1 == o.beta1 && beta2 == o.beta2 && epsilon == o.epsilon &&
           clip_norm == o.clip_norm && step == o.step && m == o.m && v == o.v;
}

double global_norm(const Gradients& g) {
    double sq = 0.0;
    g.for_each_layer([&](const DenseLayer& l) { sq += l.weights.squaredNorm() + l.bias.squaredNorm(); });
    return std::sqrt(sq);
}

double apply_update(NetworkParams& params, OptimizerState& opt, const Gradients& grads) {
    if (!params.same_shape(grads) || !params.same_shape(opt.m) || !params.same_shape(opt.v)) {
        throw ConfigError("apply_update: parameter, gradient and optimizer shapes differ");
    }
    if (!grads.all_finite()) throw DivergenceError("apply_update: non-finite gradient");
    const double norm = global_norm(grads);
    const double scale = norm > opt.clip_norm ? opt.clip_norm / norm : 1.0;

    opt.step += 1;
    const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
    auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
        const auto gs = (g * scale).eval();
        m = opt.beta1 * m + (1.0 - opt.beta1) * gs;
        v = opt.beta2 * v + (1.0 - opt.beta2) * gs.cwiseProduct(gs);
        p.array() -= opt.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opt.epsilon);
    };
    auto step_layer = [&](DenseLayer& p, DenseLayer& m, DenseLayer& v, const DenseLayer& g) {
        update(p.weights, m.weights, v.weights, g.weights);
        update(p.bias, m.bias, v.bias, g.bias);
    };
    for (std::size_t i = 0; i < params.trunk.size(); ++i) {
        step_layer(params.trunk[i], opt.m.trunk[i], opt.v.trunk[i], grads.trunk[i]);
    }
    step_layer(params.value_head, opt.m.value_head, opt.v.value_head, grads.value_head);
    step_layer(params.advantage_head, opt.m.advantage_head, opt.v.advantage_head, grads.advantage_head);
    return norm;
}

void soft_update(NetworkParams& target, const NetworkParams& local, double rate) {
    if (!target.same_shape(local)) throw ConfigError("soft_update: target and local shapes differ");
    if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("soft_update: rate must lie in [0, 1]");
    zip_layers(target, local, [rate](DenseLayer& t, const DenseLayer& l) {
        // Incremental form keeps target == local a fixed point; rate 1 copies.
        if (rate == 1.0) {
            t = l;
            return;
        }
        t.weights += rate * (l.weights - t.weights);
        t.bias += rate * (l.bias - t.bias);
    });
}

// ---- checkpoints ----

namespace {

using nlohmann::json;

constexpr const char* kFormat = "lplab-dueling-q/1";

json layer_to_json(const DenseLayer& l) {
    json w = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    json b = json::array();
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) b.push_back(l.bias(r));
    return json{{"rows", l.weights.rows()}, {"cols", l.weights.cols()}, {"weights", w}, {"bias", b}};
}

json network_to_json(const NetworkParams& p) {
    json layers = json::array();
    p.for_each_layer([&](const DenseLayer& l) { layers.push_back(layer_to_json(l)); });
    return json{{"trunk_layers", p.trunk.size()}, {"layers", layers}};
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw DecodeError("checkpoint: missing field " + path + "." + key);
    return obj.at(key);
}

std::int64_t int_field(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_number_integer()) throw DecodeError("checkpoint: field " + path + "." + key + " is not an integer");
    return v.get<std::int64_t>();
}

double num_field(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_number()) throw DecodeError("checkpoint: field " + path + "." + key + " is not a number");
    return v.get<double>();
}

std::vector<double> num_array(const json& obj, const std::string& key, const std::string& path, std::size_t n) {
    const auto& v = field(obj, key, path);
    const std::string name = path + "." + key;
    if (!v.is_array()) throw DecodeError("checkpoint: field " + name + " is not an array");
    if (v.size() != n) {
        throw DecodeError("checkpoint: field " + name + " has " + std::to_string(v.size()) + " values, shape needs " +
                          std::to_string(n));
    }
    std::vector<double> out;
    out.reserve(n);
    for (const auto& x : v) {
        if (!x.is_number()) throw DecodeError("checkpoint: field " + name + " holds a non-number");
        out.push_back(x.get<double>());
    }
    return out;
}

DenseLayer layer_from_json(const json& j, const std::string& path) {
    const auto rows = int_field(j, "rows", path);
    const auto cols = int_field(j, "cols", path);
    if (rows <= 0 || cols <= 0) throw DecodeError("checkpoint: field " + path + ".rows/cols must be positive");
    const auto w = num_array(j, "weights", path, static_cast<std::size_t>(rows * cols));
    const auto b = num_array(j, "bias", path, static_cast<std::size_t>(rows));
    DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) l.weights(r, c) = w[k++];
    }
    for (Eigen::Index r = 0; r < rows; ++r) l.bias(r) = b[static_cast<std::size_t>(r)];
    return l;
}

NetworkParams network_from_json(const json& j, const std::string& path) {
    const auto trunk = int_field(j, "trunk_layers", path);
    const auto& layers = field(j, "layers", path);
    if (!layers.is_array() || trunk < 0 || layers.size() != static_cast<std::size_t>(trunk) + 2) {
        throw DecodeError("checkpoint: field " + path + ".layers must hold trunk_layers + 2 layers");
    }
    NetworkParams p;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto l = layer_from_json(layers[i], path + ".layers[" + std::to_string(i) + "]");
        if (i < static_cast<std::size_t>(trunk)) {
            p.trunk.push_back(std::move(l));
        } else if (i == static_cast<std::size_t>(trunk)) {
            p.value_head = std::move(l);
        } else {
            p.advantage_head = std::move(l);
        }
    }
    try {
        p.check_shapes();
    } catch (const ConfigError& e) {
        throw DecodeError("checkpoint: field " + path + ".layers inconsistent: " + e.what());
    }
    return p;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params, const OptimizerState& opt,
                     const CheckpointMeta& meta) {
    if (!params.same_shape(opt.m) || !params.same_shape(opt.v)) {
        throw ConfigError("save_checkpoint: optimizer moments do not match the network");
    }
    const json doc{
        {"format", kFormat},
        {"metadata", {{"seed", meta.seed}, {"config_hash", meta.config_hash}}},
        {"network", network_to_json(params)},
        {"optimizer",
         {{"learning_rate", opt.learning_rate},
          {"beta1", opt.beta1},
          {"beta2", opt.beta2},
          {"epsilon", opt.epsilon},
          {"clip_norm", opt.clip_norm},
          {"step", opt.step},
          {"m", network_to_json(opt.m)},
          {"v", network_to_json(opt.v)}}},
    };
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw ConfigError("save_checkpoint: cannot write " + tmp.string());
        out << doc.dump(1) << '\n';
        if (!out) throw ConfigError("save_checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_hash) {
    std::ifstream in(path);
    if (!in) throw DecodeError("checkpoint: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DecodeError("checkpoint: " + path.string() + " is not valid JSON: " + e.what());
    }
    const auto& format = field(doc, "format", "$");
    if (!format.is_string() || format.get<std::string>() != kFormat) {
        throw DecodeError("checkpoint: field $.format is not " + std::string(kFormat));
    }

    Checkpoint ck;
    const auto& meta = field(doc, "metadata", "$");
    const auto& seed = field(meta, "seed", "$.metadata");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw DecodeError("checkpoint: field $.metadata.seed is not an integer");
    }
    ck.meta.seed = seed.get<std::uint64_t>();
    const auto& hash = field(meta, "config_hash", "$.metadata");
    if (!hash.is_string()) throw DecodeError("checkpoint: field $.metadata.config_hash is not a string");
    ck.meta.config_hash = hash.get<std::string>();

    ck.params = network_from_json(field(doc, "network", "$"), "$.network");

    const auto& o = field(doc, "optimizer", "$");
    ck.optimizer.learning_rate = num_field(o, "learning_rate", "$.optimizer");
    ck.optimizer.beta1 = num_field(o, "beta1", "$.optimizer");
    ck.optimizer.beta2 = num_field(o, "beta2", "$.optimizer");
    ck.optimizer.epsilon = num_field(o, "epsilon", "$.optimizer");
    ck.optimizer.clip_norm = num_field(o, "clip_norm", "$.optimizer");
    ck.optimizer.step = int_field(o, "step", "$.optimizer");
    ck.optimizer.m = network_from_json(field(o, "m", "$.optimizer"), "$.optimizer.m");
    ck.optimizer.v = network_from_json(field(o, "v", "$.optimizer"), "$.optimizer.v");
    if (!ck.params.same_shape(ck.optimizer.m)) throw DecodeError("checkpoint: field $.optimizer.m shape differs from $.network");
    if (!ck.params.same_shape(ck.optimizer.v)) throw DecodeError("checkpoint: field $.optimizer.v shape differs from $.network");

    if (!expected_hash.empty() && expected_hash != ck.meta.config_hash) {
        ck.warnings.push_back("checkpoint config_hash " + ck.meta.config_hash + " differs from current " +
                              expected_hash);
    }
    return ck;
}

}  // namespace lplab::nn
