// Dense dueling Q-network with hand-written backprop, Adam and JSON checkpoints.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lplab::nn {

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out

    Eigen::Index inputs() const { return weights.cols(); }
    Eigen::Index outputs() const { return weights.rows(); }
    bool same_shape(const DenseLayer& o) const {
        return weights.rows() == o.weights.rows() && weights.cols() == o.weights.cols() && bias.size() == o.bias.size();
    }
};

// ReLU trunk followed by a scalar value head and an advantage head,
// combined as q = v + (adv - mean(adv)). No activation on the heads.
struct NetworkParams {
    std::vector<DenseLayer> trunk;
    DenseLayer value_head;
    DenseLayer advantage_head;

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
    static NetworkParams init(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t actions,
                              std::uint64_t seed);
    static NetworkParams zeros(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t actions);
    NetworkParams zeros_like() const;

    std::size_t input_dim() const;
    std::size_t action_count() const;
    std::vector<std::size_t> hidden_sizes() const;

    // Visits trunk layers, then the value head, then the advantage head.
    void for_each_layer(const std::function<void(DenseLayer&)>& fn);
    void for_each_layer(const std::function<void(const DenseLayer&)>& fn) const;

    std::size_t parameter_count() const;
    // Layer by layer: weights row-major, then bias.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    bool same_shape(const NetworkParams& o) const;
    // Throws ConfigError if the layer chain is inconsistent.
    void check_shapes() const;
    bool all_finite() const;
    bool operator==(const NetworkParams& o) const;
};

using Gradients = NetworkParams;

struct ForwardOutput {
    Eigen::VectorXd q;
    double v = 0.0;
    Eigen::VectorXd adv;
};

ForwardOutput forward(const NetworkParams& params, std::span<const double> s);
// Column-per-sample batch forward; returns actions x batch.
Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs);

struct Minibatch {
    Eigen::MatrixXd states;  // input_dim x B
    std::vector<int> actions;
    Eigen::VectorXd targets;
};

struct LossAndGradients {
    double loss = 0.0;
    Gradients grads;
};

// Mean squared error of q(s, a) against the targets.
LossAndGradients loss_and_gradients(const NetworkParams& params, const Minibatch& batch);

struct OptimizerState {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.7;
    std::int64_t step = 0;
    NetworkParams m;
    NetworkParams v;

    static OptimizerState for_params(const NetworkParams& params);
    bool operator==(const OptimizerState& o) const;
};

double global_norm(const Gradients& g);

// Global-norm clip then Adam. Returns the pre-clip norm.
double apply_update(NetworkParams& params, OptimizerState& opt, const Gradients& grads);

void soft_update(NetworkParams& target, const NetworkParams& local, double rate);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct Checkpoint {
    NetworkParams params;
    OptimizerState optimizer;
    CheckpointMeta meta;
    std::vector<std::string> warnings;
};

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params, const OptimizerState& opt,
                     const CheckpointMeta& meta);

// A non-empty expected_hash that differs from the stored one adds a warning
// but still loads.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& expected_hash = {});

}  // namespace lplab::nn
