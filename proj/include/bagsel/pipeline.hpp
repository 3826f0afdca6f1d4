#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bagsel/dataset.hpp"
#include "bagsel/ensemble.hpp"
#include "bagsel/tuning.hpp"

namespace bagsel {

/// The single reproducibility knob set: everything a run needs beyond the
/// features file. Serialized verbatim into every report.
struct RunConfig {
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
    int n_outer_splits = 6;
    int n_subsplits = 200;
    double gini_admission_threshold = 0.5;
    double alpha = 0.05;
    int n_sim = 10000;  // up to 1,000,000
    SelectionMode selection_mode = SelectionMode::Strict;
    ThresholdMethod threshold_method = ThresholdMethod::Youden;
    std::vector<LearnerKind> learners{kAllLearners.begin(), kAllLearners.end()};
    int tuning_splits = 5;
    int grid_variant = 1;  // stock tuning ranges; see default_grid
    int importance_repeats = 10;
    HyperParams base_params;

    void validate() const;
    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_json_file(const std::filesystem::path& path);
    /// Provenance hash of the serialized config.
    std::string hash() const;
};

/// Everything the selection stage produces for one run.
struct PipelineResult {
    RunConfig config;
    std::string features_hash;
    std::string config_hash;  // hash of (config, features_hash)

    std::map<LearnerKind, HyperParams> tuned_params;
    std::map<LearnerKind, GridSearchResult> tuning_tables;
    std::vector<SplitBaggings> splits;
    SelectionReport selection;

    /// Winner diagnostics on the initial split (set when a winner exists).
    ClassScores winner_scores;  // re-normalized combined scores on split 0
    ThresholdSet thresholds;
    std::vector<ClassLabel> predictions;
    ConfusionMatrix confusion;
    ClassReport report_rows_actual;
    ClassReport report_rows_predicted;

    struct BaseEntry {
        std::string name;  // learner token or "ensemble"
        double accuracy = 0.0;
        double mean_averaged_gini = 0.0;
        bool significant = false;
    };
    /// Initial-split accuracy of each single bagging plus the ensemble row.
    std::vector<BaseEntry> base_comparison;
};

/// Stage pieces, reusable by the resumable CLI commands.
std::vector<Split> outer_splits(const FeatureMatrix& features, const RunConfig& config);
std::map<LearnerKind, HyperParams> tune_all(const FeatureMatrix& features,
                                            const RunConfig& config,
                                            std::map<LearnerKind, GridSearchResult>* tables);
BaggingConfig bagging_config_for(const RunConfig& config, int split_index, LearnerKind kind);

/// Full run: tuning, baggings on every outer split, evaluation of every
/// non-empty ensemble, significance-gated selection and winner diagnostics.
/// Prebuilt baggings (from the file-based stages) can be supplied to skip
/// rebuilding; they are keyed by (split index, kind).
PipelineResult run_pipeline(const FeatureMatrix& features, const RunConfig& config,
                            const std::map<LearnerKind, HyperParams>* pretuned = nullptr,
                            std::map<std::pair<int, LearnerKind>, BaggedModel>* prebuilt = nullptr);

/// Write the selection artifacts (selection_report.json, ranked.csv, ROC
/// dumps, base_comparison.csv) under out_dir.
void write_selection_artifacts(const std::filesystem::path& out_dir,
                               const PipelineResult& result);

/// Selected pieces of the selection report rendered as aligned text tables
/// (percent values rounded to one decimal).
std::string render_selection_text(const nlohmann::json& selection_report);

}  // namespace bagsel
