#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bagsel/dataset.hpp"
#include "bagsel/learners.hpp"

namespace bagsel {

/// Grid axes for one learner kind. Axis values are stored as doubles
/// (booleans as 0/1); points enumerate row-major with the first-declared
/// axis varying slowest.
struct ParamGrid {
    LearnerKind kind = LearnerKind::Knn;
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    int n_splits = 5;
    std::uint64_t seed = 0;
    HyperParams base;  // values for the fields no axis overrides

    std::size_t n_points() const;
    void validate() const;

    std::string to_json_string() const;
    static ParamGrid from_json_string(const std::string& text);
};

/// The stock tuning ranges per kind. `range_variant` 1 targets a small
/// many-feature dataset (sigma in [0.05,0.25], mtry 2..min(12,d)); variant 2
/// a larger few-feature one (sigma in [0.5,3.5], mtry 2..4). LR has no
/// parameters and gets a single-point grid, as do the fixed-width NN kinds.
ParamGrid default_grid(LearnerKind kind, std::size_t n_features, int range_variant);

struct GridPoint {
    std::vector<std::pair<std::string, double>> axis_values;
    HyperParams params;
    double objective = 0.0;  // mean over splits of the averaged Gini
    bool failed = false;
};

struct GridSearchResult {
    HyperParams best;
    std::size_t best_index = 0;
    std::vector<GridPoint> table;
};

/// Evaluate every grid point over n_splits stratified 70/30 splits of `data`
/// and return the row-major-first maximizer of the mean averaged Gini.
/// A learner failure marks the point failed (objective -inf) and the search
/// continues.
GridSearchResult grid_search(const ParamGrid& grid, const FeatureMatrix& data);

/// Apply one axis value onto a HyperParams field by name; throws
/// ValidationError for unknown axis names.
void apply_axis(HyperParams& params, const std::string& axis, double value);

}  // namespace bagsel
