#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bagsel/errors.hpp"

namespace bagsel {

/// Student outcome class. Report layout order is fixed as (F, G, W).
enum class ClassLabel : int { F = 0, G = 1, W = 2 };

inline constexpr int kNumClasses = 3;
inline constexpr std::array<ClassLabel, 3> kClassOrder = {ClassLabel::F, ClassLabel::G,
                                                          ClassLabel::W};

const char* to_string(ClassLabel label);
ClassLabel label_from_string(const std::string& s);

enum class Stage { Stage20, Stage50 };
const char* to_string(Stage stage);
Stage stage_from_string(const std::string& s);

/// Band a final course grade (integer percent) into its class:
/// >= 70 -> G, 51..69 -> F, <= 50 -> W.
ClassLabel label_targets(int final_grade);

/// Round to nearest integer, ties away from zero.
int round_half_away(double x);

/// Labeled feature table. Values are task marks rescaled to integers in
/// [0, 100]; one row per student.
struct FeatureMatrix {
    std::vector<std::string> instance_ids;
    std::vector<std::string> feature_names;
    Eigen::MatrixXd values;  // n_rows x n_features, integral values in [0,100]
    std::vector<ClassLabel> labels;
    Stage stage = Stage::Stage20;

    std::size_t n_rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t n_features() const { return static_cast<std::size_t>(values.cols()); }

    /// Per-class instance counts in (F, G, W) order.
    std::array<std::size_t, 3> label_histogram() const;

    /// Row subset keeping ids/labels aligned; indices must be in range.
    FeatureMatrix subset(std::span<const std::size_t> indices) const;

    /// Validates the type invariants (integral in-range values, aligned
    /// lengths, unique feature names); throws ValidationError on violation.
    void validate() const;
};

/// Column mapping for ingestion, normally loaded from a JSON schema file:
/// {id_column, final_grade_column, stage20_columns[], stage50_columns[],
///  task_max{column -> maximum mark}}.
struct DatasetSchema {
    std::string id_column;
    std::string final_grade_column;
    std::vector<std::string> stage20_columns;
    std::vector<std::string> stage50_columns;
    std::map<std::string, double> task_max;

    const std::vector<std::string>& stage_columns(Stage stage) const;

    static DatasetSchema from_json_file(const std::filesystem::path& path);
    std::string to_json_string() const;
};

/// What ingestion did: row count, label histogram and a preprocessing log
/// (empty-cell replacements, dropped all-empty columns, rounding note).
struct IngestReport {
    std::size_t row_count = 0;
    std::array<std::size_t, 3> label_histogram = {0, 0, 0};
    std::vector<std::string> feature_names;
    std::vector<std::string> log;
};

/// Load a grade CSV through the preprocessing pipeline: empty cells become 0,
/// marks are rescaled from their task maximum to 0..100 and rounded to the
/// nearest integer (ties away from zero), labels come from label_targets.
FeatureMatrix load_dataset(const std::filesystem::path& csv_path, const DatasetSchema& schema,
                           Stage stage, IngestReport* report = nullptr);

struct SplitPlan {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    bool stratified = true;
};

struct Split {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

/// Deterministic stratified partition: per class, round(train_fraction * n_c)
/// instances go to train (clamped so both sides keep at least one). Requires
/// every class to have >= 2 instances.
Split stratified_split(std::span<const ClassLabel> labels, const SplitPlan& plan);
Split stratified_split(const FeatureMatrix& m, const SplitPlan& plan);

struct PcaResult {
    Eigen::MatrixXd projected;                // n_rows x k
    Eigen::VectorXd explained_variance_ratio; // k, non-increasing
    Eigen::MatrixXd components;               // n_features x k, orthonormal columns
    Eigen::VectorXd mean;                     // feature means used for centering
};

/// PCA via eigendecomposition of the covariance of centered (not scaled)
/// features. k must not exceed the feature count.
PcaResult pca_project(const Eigen::MatrixXd& values, int k);
PcaResult pca_project(const FeatureMatrix& m, int k);

/// Synthetic unbalanced grade table shaped like a large single-course dataset
/// (quiz/assignment/midterm columns). Class counts are configurable; the
/// defaults give 486 students with only 8 in class W.
struct SyntheticCounts {
    std::size_t fair = 57;
    std::size_t good = 421;
    std::size_t weak = 8;
};
/// Returns the raw CSV text plus its schema; feed through load_dataset to get
/// a FeatureMatrix. Deterministic given seed.
struct SyntheticCsv {
    std::string csv;
    DatasetSchema schema;
};
SyntheticCsv synthetic_unbalanced_csv(const SyntheticCounts& counts, std::uint64_t seed);

/// Well-separated 3-class Gaussian blobs on the 0..100 integer mark scale;
/// used by tests and desk-scale pipeline runs.
FeatureMatrix synthetic_blobs(std::size_t n_per_class, std::size_t n_features, double noise_sigma,
                              std::uint64_t seed);

/// FeatureMatrix (de)serialization used for the file-based stage boundary.
std::string features_to_json_string(const FeatureMatrix& m, const std::string& config_hash);
FeatureMatrix features_from_json_string(const std::string& text);
FeatureMatrix load_features_file(const std::filesystem::path& path);
void save_features_file(const std::filesystem::path& path, const FeatureMatrix& m,
                        const std::string& config_hash);

}  // namespace bagsel
