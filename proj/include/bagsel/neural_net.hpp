#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace bagsel {

/// Feed-forward topology: tanh hidden layers, linear output layer.
struct NetworkTopology {
    int n_inputs = 1;
    int n_outputs = 3;
    std::vector<int> hidden_layers;  // width per hidden layer, all >= 1

    int total_params() const;
    void validate() const;
};

/// Weights and biases, layer by layer (hidden layers then output layer).
struct Network {
    NetworkTopology topology;
    std::vector<Eigen::MatrixXd> weights;  // [l]: width_l x fanin_l
    std::vector<Eigen::VectorXd> biases;   // [l]: width_l

    /// Forward pass; rows of x are samples. Returns n x n_outputs.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

    Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd& params);
};

/// Nguyen-Widrow initialization: per hidden layer of width h and fan-in n,
/// every unit's input-weight row has Euclidean norm exactly
/// beta = 0.7 * h^(1/n) and biases are uniform in [-beta, beta]. The linear
/// output layer gets small uniform weights. Deterministic given seed.
Network nguyen_widrow_init(const NetworkTopology& topology, std::uint64_t seed);
double nguyen_widrow_beta(int width, int fan_in);

struct LmConfig {
    double mu0 = 1e-3;
    double mu_factor = 10.0;
    double mu_max = 1e12;
    int max_iters = 150;
    /// Fraction of the training rows carved out for early stopping when no
    /// explicit validation set is given; 0 disables early stopping.
    double val_fraction = 0.15;
    /// Consecutive non-improving validation checks tolerated before halting.
    int patience = 6;
};

struct LmResult {
    Network network;
    /// Training SSE after initialization and after every accepted step;
    /// strictly decreasing by construction.
    std::vector<double> accepted_sse;
    int iterations = 0;
    std::string stop_reason;  // "max_iters", "mu_overflow", "early_stopping"

    double final_mse(std::size_t n_residuals) const {
        return accepted_sse.back() / static_cast<double>(n_residuals);
    }
};

/// Levenberg-Marquardt least-squares training. Inputs are expected pre-mapped
/// to [-1,1] and targets to [0,1]. Each accepted step solves
/// (J^T J + mu I) delta = J^T e and strictly reduces the training SSE; mu is
/// multiplied by mu_factor on rejection and divided on acceptance. When a
/// validation set is active the weights with the best validation SSE are
/// returned.
LmResult train_lm(const NetworkTopology& topology, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const LmConfig& config, std::uint64_t seed,
                  const Eigen::MatrixXd* val_inputs = nullptr,
                  const Eigen::MatrixXd* val_targets = nullptr);

/// One damped Gauss-Newton step: solves (J^T J + mu I) delta = J^T residual.
Eigen::VectorXd lm_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual,
                        double mu);

/// Candidate hidden-layer widths from three closed-form estimates given the
/// input and output unit counts; non-finite and non-positive results are
/// discarded. `rounded` pairs with `raw` element-wise.
struct HiddenNeuronCandidates {
    std::vector<double> raw;
    std::vector<int> rounded;
};
HiddenNeuronCandidates hidden_neuron_candidates(int n_inputs, int n_outputs);

}  // namespace bagsel
