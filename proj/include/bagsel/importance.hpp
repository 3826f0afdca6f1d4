#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bagsel/bagging.hpp"
#include "bagsel/dataset.hpp"
#include "bagsel/learners.hpp"

namespace bagsel {

/// Per-feature averaged importance with a dense 1..n ranking (descending
/// score; ties ordered by feature name).
struct ImportanceRanking {
    std::vector<std::string> feature_names;
    std::vector<double> mean_importance;  // aligned with feature_names
    std::vector<int> rank;                // permutation of 1..n
    std::string method = "permutation-averaged-gini";
};

/// Permutation importance with the averaged-Gini objective:
/// score_j = baseline - mean over repeats of the averaged Gini with column j
/// permuted. Deterministic given seed.
std::vector<double> permutation_importance(const TrainedModel& model, const Eigen::MatrixXd& x,
                                           std::span<const ClassLabel> labels, int n_repeats,
                                           std::uint64_t seed);

/// Scorer-level variant with an injectable permutation source; the library
/// passes seeded shuffles, tests may force e.g. the identity permutation.
using ScoreFn = std::function<ClassScores(const Eigen::MatrixXd&)>;
using PermutationFn = std::function<std::vector<std::size_t>(std::size_t feature, int repeat,
                                                             std::size_t n_rows)>;
std::vector<double> permutation_importance_fn(const ScoreFn& score, const Eigen::MatrixXd& x,
                                              std::span<const ClassLabel> labels, int n_repeats,
                                              const PermutationFn& permutation);

/// Mean of the members' permutation importances, ranked descending.
ImportanceRanking averaged_importance(const BaggedModel& b, const Eigen::MatrixXd& x,
                                      std::span<const ClassLabel> labels,
                                      std::span<const std::string> feature_names, int n_repeats,
                                      std::uint64_t seed);
ImportanceRanking averaged_importance(const BaggedModel& b, const FeatureMatrix& data,
                                      int n_repeats, std::uint64_t seed);

}  // namespace bagsel
