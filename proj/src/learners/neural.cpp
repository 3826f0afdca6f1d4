#include <cmath>

#include "bagsel/neural_net.hpp"
#include "bagsel/rng.hpp"
#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

/// Per-feature linear map of raw marks onto [-1,1] fitted on training data;
/// constant features map to 0.
struct InputMap {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    static InputMap fit(const Eigen::MatrixXd& x) {
        InputMap m;
        m.lo = x.colwise().minCoeff();
        m.hi = x.colwise().maxCoeff();
        return m;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd z(x.rows(), x.cols());
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double span = hi(c) - lo(c);
            if (span == 0.0)
                z.col(c).setZero();
            else
                z.col(c) = ((x.col(c).array() - lo(c)) / span) * 2.0 - 1.0;
        }
        return z;
    }
};

/// Feed-forward network (tanh hidden layers, linear output) trained by
/// Levenberg-Marquardt with Nguyen-Widrow initialization and early stopping.
/// Scores are the raw linear outputs of the three one-hot output units.
class NeuralModel : public ModelImpl {
public:
    NeuralModel(InputMap map, Network net) : map_(std::move(map)), net_(std::move(net)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        return net_.forward(map_.apply(rows));
    }

    nlohmann::json payload() const override {
        nlohmann::json j;
        j["input_lo"] = vec_to_json(map_.lo);
        j["input_hi"] = vec_to_json(map_.hi);
        j["n_inputs"] = net_.topology.n_inputs;
        j["n_outputs"] = net_.topology.n_outputs;
        j["hidden_layers"] = net_.topology.hidden_layers;
        j["params"] = vec_to_json(net_.pack());
        return j;
    }

private:
    InputMap map_;
    Network net_;
};

}  // namespace

ModelPtr train_neural(const HyperParams& p, LearnerKind kind, const Eigen::MatrixXd& x,
                      std::span<const ClassLabel> y, std::uint64_t seed) {
    if (p.nn_neurons_per_layer < 1)
        throw ValidationError("nn_neurons_per_layer must be >= 1");

    NetworkTopology topo;
    topo.n_inputs = static_cast<int>(x.cols());
    topo.n_outputs = kNumClasses;
    topo.hidden_layers.assign(static_cast<std::size_t>(nn_layers_for(kind)),
                              p.nn_neurons_per_layer);

    const InputMap map = InputMap::fit(x);
    const Eigen::MatrixXd inputs = map.apply(x);
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(x.rows(), kNumClasses);
    for (std::size_t i = 0; i < y.size(); ++i)
        targets(static_cast<Eigen::Index>(i), static_cast<int>(y[i])) = 1.0;

    LmConfig config;  // defaults: early stopping with val_fraction 0.15, patience 6
    LmResult fit = train_lm(topo, inputs, targets, config, mix_seed(seed, seed_tag::kModel, 2));
    return std::make_shared<NeuralModel>(map, std::move(fit.network));
}

ModelPtr neural_from_payload(const nlohmann::json& j) {
    InputMap map;
    map.lo = vec_from_json(j.at("input_lo"));
    map.hi = vec_from_json(j.at("input_hi"));

    Network net;
    net.topology.n_inputs = j.at("n_inputs").get<int>();
    net.topology.n_outputs = j.at("n_outputs").get<int>();
    net.topology.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();

    int fan_in = net.topology.n_inputs;
    for (int h : net.topology.hidden_layers) {
        net.weights.emplace_back(h, fan_in);
        net.biases.emplace_back(h);
        fan_in = h;
    }
    net.weights.emplace_back(net.topology.n_outputs, fan_in);
    net.biases.emplace_back(net.topology.n_outputs);
    net.unpack(vec_from_json(j.at("params")));
    return std::make_shared<NeuralModel>(std::move(map), std::move(net));
}

}  // namespace bagsel::detail
