#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bagsel/dataset.hpp"
#include "bagsel/metrics.hpp"
#include "json.hpp"

namespace bagsel {

/// The eight base classifier configurations.
enum class LearnerKind : int {
    Knn = 0,
    NaiveBayes = 1,
    LogisticRegression = 2,
    RandomForest = 3,
    SvmRbf = 4,
    Nn1 = 5,
    Nn2 = 6,
    Nn3 = 7,
};

inline constexpr int kNumLearners = 8;
inline constexpr std::array<LearnerKind, 8> kAllLearners = {
    LearnerKind::Knn,        LearnerKind::NaiveBayes, LearnerKind::LogisticRegression,
    LearnerKind::RandomForest, LearnerKind::SvmRbf,   LearnerKind::Nn1,
    LearnerKind::Nn2,        LearnerKind::Nn3,
};

/// Short token used in files and CLI arguments ("knn", "nb", ...).
const char* to_string(LearnerKind kind);
/// Human-facing name used in report tables ("k-NN", "SVM-RBF", ...).
const char* display_name(LearnerKind kind);
LearnerKind learner_from_string(const std::string& s);
/// Hidden layer count for the NN kinds, 0 otherwise.
int nn_layers_for(LearnerKind kind);

/// Union of the tunable knobs; each kind reads only its own fields.
struct HyperParams {
    int knn_k = 5;                  // odd neighbor count
    bool nb_usekernel = false;      // false: Gaussian, true: kernel density
    int rf_mtry = 2;                // features tried per split
    int rf_ntrees = 500;
    double svm_c = 1.0;
    double svm_sigma = 0.1;         // kernel exp(-sigma * ||x - y||^2)
    int nn_neurons_per_layer = 5;
    int nn_layers = 1;

    nlohmann::json to_json() const;
    static HyperParams from_json(const nlohmann::json& j);
    /// Compact "k=7" style summary of the fields the kind reads.
    std::string describe(LearnerKind kind) const;
};

namespace detail {
class ModelImpl;
}

/// A fitted classifier. Immutable after training; scoring is const and safe
/// to call concurrently. Models serialize to versioned JSON for caching
/// between CLI invocations.
class TrainedModel {
public:
    TrainedModel() = default;

    LearnerKind kind() const { return kind_; }
    const HyperParams& params() const { return params_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    bool valid() const { return impl_ != nullptr; }

    /// Raw per-class scores; rows must be in training column order.
    ClassScores score(const Eigen::MatrixXd& rows) const;
    /// Same, checking the feature names against training.
    ClassScores score(const FeatureMatrix& data) const;

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    friend TrainedModel train(LearnerKind, const HyperParams&, const Eigen::MatrixXd&,
                              std::span<const ClassLabel>, std::vector<std::string>,
                              std::uint64_t);
    LearnerKind kind_ = LearnerKind::Knn;
    HyperParams params_;
    std::vector<std::string> feature_names_;
    std::shared_ptr<const detail::ModelImpl> impl_;
};

/// Train one model. Deterministic given seed. Every class must appear in the
/// labels (twice for LR and the NN kinds).
TrainedModel train(LearnerKind kind, const HyperParams& params, const Eigen::MatrixXd& x,
                   std::span<const ClassLabel> y, std::vector<std::string> feature_names,
                   std::uint64_t seed);
TrainedModel train(LearnerKind kind, const HyperParams& params, const FeatureMatrix& data,
                   std::uint64_t seed);

}  // namespace bagsel
