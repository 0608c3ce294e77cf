#pragma once
// Feedforward function approximator with analytic reverse-mode gradients and
// an Adam update. Hidden layers apply relu or tanh; the output layer is
// linear. Batched variants treat inputs as columns.
//
// Checkpoints: versioned binary container (layer sizes, activation tag,
// parameters in layer order, row-major float64, little-endian); round-trips
// bit-exactly.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "covplan/rng.hpp"

namespace covplan {

enum class Activation : uint8_t { Relu = 0, Tanh = 1 };

struct Mlp {
    std::vector<int> layer_sizes;  // input, hidden..., output
    std::vector<Eigen::MatrixXd> weights;  // per layer, out x in
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::Relu;

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    size_t param_count() const;
};

struct GradBundle {
    std::vector<Eigen::MatrixXd> weight_grads;
    std::vector<Eigen::VectorXd> bias_grads;
    Eigen::MatrixXd input_grads;  // in x batch
};

struct AdamState {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int64_t step_count = 0;
    std::vector<Eigen::MatrixXd> weight_m, weight_v;
    std::vector<Eigen::VectorXd> bias_m, bias_v;
};

// Weights uniform in +-sqrt(6/(fan_in+fan_out)) per layer, biases zero.
Mlp make_mlp(std::vector<int> layer_sizes, Activation activation, Rng& rng);

AdamState make_adam(const Mlp& net, double learning_rate);

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

// Gradients of sum_b upstream_b . output_b w.r.t. all parameters and the
// inputs.
GradBundle backward(const Mlp& net, const Eigen::VectorXd& input, const Eigen::VectorXd& upstream);
GradBundle backward_batch(const Mlp& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& upstreams);

// Bias-corrected Adam step. Throws std::invalid_argument on shape mismatch
// or non-finite gradient entries.
void adam_step(Mlp& net, const GradBundle& grads, AdamState& opt);

void save_mlp(const Mlp& net, std::ostream& out);
Mlp load_mlp(std::istream& in);
void save_adam(const AdamState& opt, std::ostream& out);
AdamState load_adam(std::istream& in);

}  // namespace covplan
