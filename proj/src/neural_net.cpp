#include "bagsel/neural_net.hpp"

#include <cmath>
#include <limits>

#include "bagsel/dataset.hpp"
#include "bagsel/errors.hpp"
#include "bagsel/rng.hpp"

namespace bagsel {

void NetworkTopology::validate() const {
    if (n_inputs < 1 || n_outputs < 1)
        throw ValidationError("network needs at least one input and one output");
    for (int h : hidden_layers)
        if (h < 1) throw ValidationError("hidden layer widths must be >= 1");
}

int NetworkTopology::total_params() const {
    int total = 0;
    int fan_in = n_inputs;
    for (int h : hidden_layers) {
        total += h * (fan_in + 1);
        fan_in = h;
    }
    total += n_outputs * (fan_in + 1);
    return total;
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    const std::size_t n_hidden = topology.hidden_layers.size();
    for (std::size_t l = 0; l < n_hidden; ++l) {
        a = ((a * weights[l].transpose()).rowwise() + biases[l].transpose())
                .array()
                .tanh()
                .matrix();
    }
    return (a * weights[n_hidden].transpose()).rowwise() + biases[n_hidden].transpose();
}

Eigen::VectorXd Network::pack() const {
    Eigen::VectorXd out(topology.total_params());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < weights[l].cols(); ++c) out(at++) = weights[l](r, c);
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) out(at++) = biases[l](r);
    }
    return out;
}

void Network::unpack(const Eigen::VectorXd& params) {
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = params(at++);
        for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l](r) = params(at++);
    }
}

double nguyen_widrow_beta(int width, int fan_in) {
    return 0.7 * std::pow(static_cast<double>(width), 1.0 / static_cast<double>(fan_in));
}

Network nguyen_widrow_init(const NetworkTopology& topology, std::uint64_t seed) {
    topology.validate();
    Network net;
    net.topology = topology;
    Rng rng(mix_seed(seed, seed_tag::kModel));

    int fan_in = topology.n_inputs;
    for (int h : topology.hidden_layers) {
        Eigen::MatrixXd w(h, fan_in);
        Eigen::VectorXd b(h);
        const double beta = nguyen_widrow_beta(h, fan_in);
        for (int u = 0; u < h; ++u) {
            Eigen::VectorXd row(fan_in);
            double norm = 0.0;
            do {
                for (int v = 0; v < fan_in; ++v) row(v) = rng.uniform(-1.0, 1.0);
                norm = row.norm();
            } while (norm == 0.0);
            w.row(u) = (beta / norm) * row.transpose();
            b(u) = rng.uniform(-beta, beta);
        }
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
        fan_in = h;
    }

    Eigen::MatrixXd wo(topology.n_outputs, fan_in);
    Eigen::VectorXd bo(topology.n_outputs);
    for (int u = 0; u < topology.n_outputs; ++u) {
        for (int v = 0; v < fan_in; ++v) wo(u, v) = rng.uniform(-0.5, 0.5);
        bo(u) = rng.uniform(-0.5, 0.5);
    }
    net.weights.push_back(std::move(wo));
    net.biases.push_back(std::move(bo));
    return net;
}

Eigen::VectorXd lm_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual,
                        double mu) {
    Eigen::MatrixXd a = jacobian.transpose() * jacobian;
    a.diagonal().array() += mu;
    return a.ldlt().solve(jacobian.transpose() * residual);
}

namespace {

/// Jacobian of the flattened network outputs w.r.t. the packed parameters.
/// Row ordering matches the flattened residual: sample-major, output unit
/// minor.
Eigen::MatrixXd output_jacobian(const Network& net, const Eigen::MatrixXd& x) {
    const auto& topo = net.topology;
    const std::size_t n_hidden = topo.hidden_layers.size();
    const Eigen::Index n = x.rows();
    const int n_params = topo.total_params();
    Eigen::MatrixXd jac(n * topo.n_outputs, n_params);

    // Parameter offsets per layer, in pack() order.
    std::vector<Eigen::Index> offsets(net.weights.size());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        offsets[l] = at;
        at += net.weights[l].size() + net.biases[l].size();
    }

    // Forward pass keeping each layer's activations.
    std::vector<Eigen::MatrixXd> acts(n_hidden + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        acts[l + 1] = ((acts[l] * net.weights[l].transpose()).rowwise() +
                       net.biases[l].transpose())
                          .array()
                          .tanh()
                          .matrix();
    }

    jac.setZero();
    for (Eigen::Index s = 0; s < n; ++s) {
        for (int k = 0; k < topo.n_outputs; ++k) {
            const Eigen::Index row = s * topo.n_outputs + k;
            // Output layer: d out_k / d W_out[k,:] = a_last, d/d b_out[k] = 1.
            const Eigen::Index out_off = offsets[n_hidden];
            const Eigen::Index fan_out = net.weights[n_hidden].cols();
            jac.block(row, out_off + k * fan_out, 1, fan_out) = acts[n_hidden].row(s);
            jac(row, out_off + net.weights[n_hidden].size() + k) = 1.0;

            // Backpropagate the sensitivity through the tanh layers.
            Eigen::VectorXd sens = net.weights[n_hidden].row(k).transpose();
            for (std::size_t l = n_hidden; l-- > 0;) {
                const Eigen::VectorXd a = acts[l + 1].row(s).transpose();
                sens = sens.cwiseProduct((1.0 - a.array().square()).matrix());
                const Eigen::Index off = offsets[l];
                const Eigen::Index fan_in = net.weights[l].cols();
                for (Eigen::Index u = 0; u < net.weights[l].rows(); ++u) {
                    jac.block(row, off + u * fan_in, 1, fan_in) = sens(u) * acts[l].row(s);
                    jac(row, off + net.weights[l].size() + u) = sens(u);
                }
                if (l > 0) sens = net.weights[l].transpose() * sens;
            }
        }
    }
    return jac;
}

Eigen::VectorXd flat_residual(const Network& net, const Eigen::MatrixXd& x,
                              const Eigen::MatrixXd& t) {
    const Eigen::MatrixXd out = net.forward(x);
    Eigen::MatrixXd diff = t - out;
    // Row-major flatten to match the jacobian row ordering.
    Eigen::VectorXd e(diff.size());
    Eigen::Index at = 0;
    for (Eigen::Index s = 0; s < diff.rows(); ++s)
        for (Eigen::Index k = 0; k < diff.cols(); ++k) e(at++) = diff(s, k);
    return e;
}

}  // namespace

LmResult train_lm(const NetworkTopology& topology, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const LmConfig& config, std::uint64_t seed,
                  const Eigen::MatrixXd* val_inputs, const Eigen::MatrixXd* val_targets) {
    topology.validate();
    if (inputs.rows() != targets.rows())
        throw ValidationError("inputs and targets differ in row count");
    if (inputs.cols() != topology.n_inputs || targets.cols() != topology.n_outputs)
        throw ValidationError("input/target widths do not match the topology");
    if ((val_inputs == nullptr) != (val_targets == nullptr))
        throw ValidationError("validation inputs and targets must be given together");
    if (!(config.mu0 > 0.0) || !(config.mu_factor > 1.0))
        throw ValidationError("mu0 must be positive and mu_factor > 1");

    Eigen::MatrixXd train_x = inputs, train_t = targets;
    Eigen::MatrixXd vx, vt;
    bool has_val = false;
    if (val_inputs) {
        vx = *val_inputs;
        vt = *val_targets;
        has_val = vx.rows() > 0;
    } else if (config.val_fraction > 0.0 && inputs.rows() > 1) {
        const auto n = static_cast<std::size_t>(inputs.rows());
        auto n_val = static_cast<std::size_t>(std::lround(config.val_fraction * n));
        if (n_val >= n) n_val = n - 1;
        if (n_val > 0) {
            Rng rng(mix_seed(seed, seed_tag::kModel, 1));
            const auto perm = rng.permutation(n);
            train_x.resize(static_cast<Eigen::Index>(n - n_val), inputs.cols());
            train_t.resize(static_cast<Eigen::Index>(n - n_val), targets.cols());
            vx.resize(static_cast<Eigen::Index>(n_val), inputs.cols());
            vt.resize(static_cast<Eigen::Index>(n_val), targets.cols());
            for (std::size_t i = 0; i < n - n_val; ++i) {
                train_x.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(perm[i]));
                train_t.row(static_cast<Eigen::Index>(i)) = targets.row(static_cast<Eigen::Index>(perm[i]));
            }
            for (std::size_t i = 0; i < n_val; ++i) {
                vx.row(static_cast<Eigen::Index>(i)) =
                    inputs.row(static_cast<Eigen::Index>(perm[n - n_val + i]));
                vt.row(static_cast<Eigen::Index>(i)) =
                    targets.row(static_cast<Eigen::Index>(perm[n - n_val + i]));
            }
            has_val = true;
        }
    }

    LmResult result;
    result.network = nguyen_widrow_init(topology, seed);
    Network& net = result.network;

    Eigen::VectorXd params = net.pack();
    Eigen::VectorXd e = flat_residual(net, train_x, train_t);
    double sse = e.squaredNorm();
    if (!std::isfinite(sse)) throw TrainingError("non-finite loss at iteration 0");
    result.accepted_sse.push_back(sse);

    double mu = config.mu0;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_params = params;
    int rises = 0;
    result.stop_reason = "max_iters";

    auto val_sse = [&](void) {
        return flat_residual(net, vx, vt).squaredNorm();
    };
    if (has_val) best_val = val_sse();

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        result.iterations = iter;
        const Eigen::MatrixXd jac = output_jacobian(net, train_x);

        bool accepted = false;
        while (!accepted) {
            const Eigen::VectorXd delta = lm_step(jac, e, mu);
            const Eigen::VectorXd candidate = params + delta;
            net.unpack(candidate);
            const Eigen::VectorXd e_cand = flat_residual(net, train_x, train_t);
            const double sse_cand = e_cand.squaredNorm();
            if (std::isfinite(sse_cand) && sse_cand < sse) {
                params = candidate;
                e = e_cand;
                sse = sse_cand;
                mu = std::max(mu / config.mu_factor, 1e-20);
                result.accepted_sse.push_back(sse);
                accepted = true;
            } else {
                mu *= config.mu_factor;
                if (mu > config.mu_max) {
                    net.unpack(params);
                    result.stop_reason = "mu_overflow";
                    if (has_val) net.unpack(best_params);
                    return result;
                }
            }
        }
        if (!std::isfinite(sse))
            throw TrainingError("non-finite loss at iteration " + std::to_string(iter));

        if (has_val) {
            const double v = val_sse();
            if (v < best_val) {
                best_val = v;
                best_params = params;
                rises = 0;
            } else if (++rises > config.patience) {
                result.stop_reason = "early_stopping";
                break;
            }
        }
    }

    if (has_val) net.unpack(best_params);
    return result;
}

HiddenNeuronCandidates hidden_neuron_candidates(int n_inputs, int n_outputs) {
    if (n_inputs < 1 || n_outputs < 1)
        throw ValidationError("unit counts must be >= 1");
    const double ni = n_inputs, no = n_outputs;
    const std::array<double, 3> formulas = {
        (std::sqrt(1.0 + 8.0 * ni) - 1.0) / 2.0,
        std::sqrt(ni * no),
        ni * ni == 8.0 ? std::numeric_limits<double>::infinity()
                       : (4.0 * ni * ni + 3.0) / (ni * ni - 8.0),
    };
    HiddenNeuronCandidates out;
    for (double v : formulas) {
        if (!std::isfinite(v) || v <= 0.0) continue;
        out.raw.push_back(v);
        out.rounded.push_back(round_half_away(v));
    }
    return out;
}

}  // namespace bagsel
