#include "bagsel/tuning.hpp"

#include <cmath>
#include <limits>

#include "bagsel/metrics.hpp"
#include "bagsel/parallel.hpp"
#include "bagsel/rng.hpp"
#include "json.hpp"

namespace bagsel {

using nlohmann::json;

std::size_t ParamGrid::n_points() const {
    std::size_t n = 1;
    for (const auto& [name, values] : axes) n *= values.size();
    return n;
}

void ParamGrid::validate() const {
    for (const auto& [name, values] : axes) {
        if (values.empty())
            throw ValidationError("grid axis '" + name + "' has no candidate values");
        HyperParams probe = base;
        apply_axis(probe, name, values.front());  // throws on unknown axis
    }
    if (n_splits < 1) throw ValidationError("tuning n_splits must be >= 1");
}

std::string ParamGrid::to_json_string() const {
    json ja = json::object();
    for (const auto& [name, values] : axes) ja[name] = values;
    json j;
    j["kind"] = to_string(kind);
    j["axes"] = std::move(ja);
    j["n_splits"] = n_splits;
    j["seed"] = seed;
    j["base"] = base.to_json();
    return j.dump(2) + "\n";
}

ParamGrid ParamGrid::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("cannot parse grid spec: ") + e.what());
    }
    ParamGrid g;
    g.kind = learner_from_string(j.at("kind").get<std::string>());
    for (const auto& [name, values] : j.at("axes").items())
        g.axes.emplace_back(name, values.get<std::vector<double>>());
    g.n_splits = j.value("n_splits", g.n_splits);
    g.seed = j.value("seed", g.seed);
    if (j.contains("base")) g.base = HyperParams::from_json(j.at("base"));
    g.validate();
    return g;
}

void apply_axis(HyperParams& params, const std::string& axis, double value) {
    if (axis == "k")
        params.knn_k = static_cast<int>(value);
    else if (axis == "usekernel")
        params.nb_usekernel = value != 0.0;
    else if (axis == "mtry")
        params.rf_mtry = static_cast<int>(value);
    else if (axis == "ntrees")
        params.rf_ntrees = static_cast<int>(value);
    else if (axis == "C")
        params.svm_c = value;
    else if (axis == "sigma")
        params.svm_sigma = value;
    else if (axis == "neurons")
        params.nn_neurons_per_layer = static_cast<int>(value);
    else if (axis == "layers")
        params.nn_layers = static_cast<int>(value);
    else
        throw ValidationError("unknown grid axis '" + axis + "'");
}

ParamGrid default_grid(LearnerKind kind, std::size_t n_features, int range_variant) {
    if (range_variant != 1 && range_variant != 2)
        throw ValidationError("grid range variant must be 1 or 2");
    ParamGrid g;
    g.kind = kind;
    switch (kind) {
        case LearnerKind::Knn: {
            std::vector<double> ks;
            for (int k = 5; k <= 43; k += 2) ks.push_back(k);
            g.axes.emplace_back("k", std::move(ks));
            break;
        }
        case LearnerKind::NaiveBayes:
            g.axes.emplace_back("usekernel", std::vector<double>{1.0, 0.0});
            break;
        case LearnerKind::LogisticRegression:
            break;  // no parameters to tune: a single-point grid
        case LearnerKind::RandomForest: {
            const int hi = range_variant == 1
                               ? std::min<int>(12, static_cast<int>(n_features))
                               : std::min<int>(4, static_cast<int>(n_features));
            std::vector<double> mtry;
            for (int m = std::min(2, hi); m <= hi; ++m) mtry.push_back(m);
            g.axes.emplace_back("mtry", std::move(mtry));
            break;
        }
        case LearnerKind::SvmRbf: {
            g.axes.emplace_back("C", std::vector<double>{0.25, 0.5, 1.0});
            const double lo = range_variant == 1 ? 0.05 : 0.5;
            const double hi = range_variant == 1 ? 0.25 : 3.5;
            std::vector<double> sigma;
            for (int i = 0; i < 5; ++i) sigma.push_back(lo + (hi - lo) * i / 4.0);
            g.axes.emplace_back("sigma", std::move(sigma));
            break;
        }
        case LearnerKind::Nn1:
        case LearnerKind::Nn2:
        case LearnerKind::Nn3:
            // width fixed at 5; the layer count is the kind itself
            g.axes.emplace_back("neurons", std::vector<double>{5.0});
            break;
    }
    return g;
}

GridSearchResult grid_search(const ParamGrid& grid, const FeatureMatrix& data) {
    grid.validate();
    const auto histogram = data.label_histogram();
    for (int c = 0; c < kNumClasses; ++c)
        if (histogram[c] == 0)
            throw ValidationError(std::string("tuning data is missing class ") +
                                  to_string(kClassOrder[c]));

    // Expand the points row-major: first axis slowest.
    const std::size_t n_points = grid.n_points();
    std::vector<GridPoint> table(n_points);
    for (std::size_t p = 0; p < n_points; ++p) {
        GridPoint& point = table[p];
        point.params = grid.base;
        std::size_t rest = p;
        std::size_t block = n_points;
        for (const auto& [name, values] : grid.axes) {
            block /= values.size();
            const double v = values[rest / block];
            rest %= block;
            point.axis_values.emplace_back(name, v);
            apply_axis(point.params, name, v);
        }
    }

    // The same splits serve every point, so objectives are comparable.
    std::vector<Split> splits;
    for (int s = 0; s < grid.n_splits; ++s) {
        SplitPlan plan;
        plan.train_fraction = 0.7;
        plan.seed = mix_seed(grid.seed, seed_tag::kTuning, static_cast<std::uint64_t>(s));
        splits.push_back(stratified_split(data, plan));
    }
    std::vector<FeatureMatrix> trains, tests;
    for (const auto& split : splits) {
        trains.push_back(data.subset(split.train_indices));
        tests.push_back(data.subset(split.test_indices));
    }

    parallel_for(n_points, [&](std::size_t p) {
        GridPoint& point = table[p];
        double sum = 0.0;
        try {
            for (int s = 0; s < grid.n_splits; ++s) {
                const std::uint64_t model_seed =
                    mix_seed(grid.seed, seed_tag::kModel, p, static_cast<std::uint64_t>(s));
                const TrainedModel model =
                    train(grid.kind, point.params, trains[static_cast<std::size_t>(s)], model_seed);
                sum += averaged_gini(model.score(tests[static_cast<std::size_t>(s)]),
                                     tests[static_cast<std::size_t>(s)].labels)
                           .mean;
            }
            point.objective = sum / grid.n_splits;
        } catch (const Error&) {
            point.failed = true;
            point.objective = -std::numeric_limits<double>::infinity();
        }
    });

    GridSearchResult result;
    result.table = std::move(table);
    result.best_index = 0;
    for (std::size_t p = 1; p < result.table.size(); ++p) {
        if (result.table[p].objective > result.table[result.best_index].objective)
            result.best_index = p;
    }
    if (result.table[result.best_index].failed)
        throw TrainingError("every grid point failed");
    result.best = result.table[result.best_index].params;
    return result;
}

}  // namespace bagsel
