#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bagsel/bagging.hpp"
#include "bagsel/dataset.hpp"
#include "bagsel/metrics.hpp"

namespace bagsel {

/// An ensemble of baggings: a non-empty subset of the eight learner kinds,
/// bit i standing for kind i.
struct EnsembleId {
    std::uint32_t bitmask = 0;

    bool contains(LearnerKind k) const { return bitmask >> static_cast<int>(k) & 1u; }
    int member_count() const;
    std::vector<LearnerKind> members() const;
    std::string name() const;  // "nb+nn2" style

    static EnsembleId of(std::initializer_list<LearnerKind> kinds);
};

/// All non-empty subsets of the available kinds, ascending by bitmask.
std::vector<EnsembleId> enumerate_ensembles(std::span<const LearnerKind> available);

/// One outer split with its prebuilt baggings and the simulated Gini null
/// for its test labels.
struct SplitBaggings {
    int split_index = 0;
    Split split;
    Eigen::MatrixXd test_x;
    std::vector<ClassLabel> test_labels;
    std::map<LearnerKind, BaggedModel> baggings;
    GiniNull null_dist;

    /// Per-kind bagging scores on the test rows, min-max normalized per
    /// class. Call prepare() before evaluating ensembles in parallel.
    std::map<LearnerKind, Eigen::MatrixXd> normalized;
    void prepare();
    const Eigen::MatrixXd& normalized_scores(LearnerKind kind) const;
};

/// Normalize each member bagging's scores per class over the test rows, then
/// average across members. Members must be non-empty baggings.
ClassScores combine_scores(std::span<const BaggedModel* const> members,
                           const Eigen::MatrixXd& test_rows);

struct SplitEval {
    int split_index = 0;
    AveragedGini gini;
    std::array<double, 3> p_class = {1.0, 1.0, 1.0};  // (F, G, W)
    double p_mean = 1.0;
    ClassScores combined;  // normalized scores the evaluation was computed from
};

struct EnsembleEvaluation {
    EnsembleId id;
    std::vector<SplitEval> per_split;
    double mean_averaged_gini = 0.0;
};

/// Evaluate one ensemble on every split: combined scores, averaged Gini and
/// per-class + averaged-Gini p-values against the split's simulated null.
EnsembleEvaluation evaluate_across_splits(EnsembleId id,
                                          std::span<const SplitBaggings> splits);

enum class SelectionMode { Strict, TargetClass };
const char* to_string(SelectionMode m);
SelectionMode selection_mode_from_string(const std::string& s);

struct SelectionReport {
    SelectionMode mode = SelectionMode::Strict;
    double alpha = 0.05;
    std::optional<EnsembleId> winner;
    std::string no_winner_reason;
    /// All evaluations, ranked by descending mean averaged Gini (ties toward
    /// fewer members, then the lower bitmask).
    std::vector<EnsembleEvaluation> ranked;
};

/// Gate candidates by significance (strict: every class on every split;
/// target-class: class W only), then pick the passing candidate with the
/// highest mean averaged Gini.
SelectionReport select_best(std::span<const EnsembleEvaluation> evals, double alpha,
                            SelectionMode mode);

}  // namespace bagsel
