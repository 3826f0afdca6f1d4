#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bagsel/dataset.hpp"
#include "bagsel/learners.hpp"
#include "bagsel/metrics.hpp"

namespace bagsel {

struct BaggingConfig {
    int n_subsplits = 200;
    double sub_train_fraction = 0.7;
    /// Minimum averaged Gini a candidate must reach on its sub-test sample
    /// to be admitted.
    double gini_admission_threshold = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdmissionRecord {
    int subsplit = 0;
    AveragedGini gini;
    bool kept = false;
};

/// A bagging of same-kind models: candidates trained on stratified
/// sub-splits, admitted when their sub-test averaged Gini reaches the
/// threshold. Scores average the admitted members' raw scores class by class.
struct BaggedModel {
    LearnerKind kind = LearnerKind::Knn;
    HyperParams params;
    std::vector<TrainedModel> members;
    /// Sub-split index each member came from, aligned with `members`.
    std::vector<int> member_subsplits;
    /// One record per sub-split, kept or not.
    std::vector<AdmissionRecord> admission_log;

    std::size_t size() const { return members.size(); }
};

/// The stratified sub-split used for candidate `index`; exposed so logged
/// admission Ginis can be re-derived.
Split bagging_subsplit(const BaggingConfig& config, std::span<const ClassLabel> labels,
                       int index);

/// Train n_subsplits candidates and keep those whose averaged Gini on the
/// sub-test sample reaches the threshold. Throws EmptyBaggingError (carrying
/// the best observed Gini) when nothing is admitted.
BaggedModel build_bagging(LearnerKind kind, const HyperParams& params,
                          const FeatureMatrix& train_data, const BaggingConfig& config);

/// Mean of the members' raw score columns, class by class.
ClassScores bagging_score(const BaggedModel& b, const Eigen::MatrixXd& rows);

/// Directory persistence: manifest.json + members/NNN.json +
/// admission_log.csv.
void save_bagging(const std::filesystem::path& dir, const BaggedModel& b,
                  const std::string& config_hash);
BaggedModel load_bagging(const std::filesystem::path& dir);

}  // namespace bagsel
