#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bagsel/learners.hpp"
#include "json.hpp"

namespace bagsel::detail {

/// Fitted state behind TrainedModel; one subclass per learner kind.
class ModelImpl {
public:
    virtual ~ModelImpl() = default;
    /// Raw per-class scores (n x 3, columns F/G/W). Higher = more likely.
    virtual Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const = 0;
    virtual nlohmann::json payload() const = 0;
};

using ModelPtr = std::shared_ptr<const ModelImpl>;

ModelPtr train_knn(const HyperParams& p, const Eigen::MatrixXd& x,
                   std::span<const ClassLabel> y, std::uint64_t seed);
ModelPtr train_naive_bayes(const HyperParams& p, const Eigen::MatrixXd& x,
                           std::span<const ClassLabel> y, std::uint64_t seed);
ModelPtr train_logistic(const HyperParams& p, const Eigen::MatrixXd& x,
                        std::span<const ClassLabel> y, std::uint64_t seed);
ModelPtr train_forest(const HyperParams& p, const Eigen::MatrixXd& x,
                      std::span<const ClassLabel> y, std::uint64_t seed);
ModelPtr train_svm(const HyperParams& p, const Eigen::MatrixXd& x, std::span<const ClassLabel> y,
                   std::uint64_t seed);
ModelPtr train_neural(const HyperParams& p, LearnerKind kind, const Eigen::MatrixXd& x,
                      std::span<const ClassLabel> y, std::uint64_t seed);

ModelPtr knn_from_payload(const nlohmann::json& j);
ModelPtr naive_bayes_from_payload(const nlohmann::json& j);
ModelPtr logistic_from_payload(const nlohmann::json& j);
ModelPtr forest_from_payload(const nlohmann::json& j);
ModelPtr svm_from_payload(const nlohmann::json& j);
ModelPtr neural_from_payload(const nlohmann::json& j);

/// Per-feature standardization fitted on training data; zero-variance
/// features get unit scale so they standardize to a constant 0.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sigma;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

// json <-> Eigen helpers shared by the payload (de)serializers.
nlohmann::json vec_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vec_from_json(const nlohmann::json& j);
nlohmann::json mat_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd mat_from_json(const nlohmann::json& j);

std::vector<int> labels_to_ints(std::span<const ClassLabel> y);

}  // namespace bagsel::detail
