#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bagsel/dataset.hpp"
#include "bagsel/learners.hpp"
#include "bagsel/metrics.hpp"
#include "bagsel/neural_net.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

std::vector<bagsel::ClassLabel> to_labels(const std::vector<std::string>& labels) {
    std::vector<bagsel::ClassLabel> out;
    out.reserve(labels.size());
    for (const auto& s : labels) out.push_back(bagsel::label_from_string(s));
    return out;
}

std::vector<std::string> from_labels(const std::vector<bagsel::ClassLabel>& labels) {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (auto l : labels) out.emplace_back(bagsel::to_string(l));
    return out;
}

bagsel::ClassScores to_scores(const Eigen::MatrixXd& m, bool normalized) {
    if (m.cols() != 3) throw bagsel::ValidationError("scores must have 3 columns (F, G, W)");
    bagsel::ClassScores s;
    s.scores = m;
    s.normalized = normalized;
    return s;
}

py::dict gini_to_dict(const bagsel::AveragedGini& g) {
    py::dict d;
    d["F"] = g.per_class[0];
    d["G"] = g.per_class[1];
    d["W"] = g.per_class[2];
    d["mean"] = g.mean;
    return d;
}

py::object opt(const std::optional<double>& v) {
    return v ? py::cast(*v) : py::none();
}

py::dict stats_to_dict(const bagsel::ClassStats& s) {
    py::dict d;
    d["precision"] = opt(s.precision);
    d["recall"] = opt(s.recall);
    d["f_measure"] = opt(s.f_measure);
    d["false_positive_rate"] = opt(s.false_positive_rate);
    return d;
}

bagsel::HyperParams params_from_dict(const py::dict& d) {
    bagsel::HyperParams p;
    for (auto item : d) {
        const auto key = item.first.cast<std::string>();
        if (key == "knn_k") p.knn_k = item.second.cast<int>();
        else if (key == "nb_usekernel") p.nb_usekernel = item.second.cast<bool>();
        else if (key == "rf_mtry") p.rf_mtry = item.second.cast<int>();
        else if (key == "rf_ntrees") p.rf_ntrees = item.second.cast<int>();
        else if (key == "svm_c") p.svm_c = item.second.cast<double>();
        else if (key == "svm_sigma") p.svm_sigma = item.second.cast<double>();
        else if (key == "nn_neurons_per_layer") p.nn_neurons_per_layer = item.second.cast<int>();
        else if (key == "nn_layers") p.nn_layers = item.second.cast<int>();
        else throw bagsel::ValidationError("unknown hyper-parameter '" + key + "'");
    }
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "bagging-ensemble model selection core";

    py::register_exception<bagsel::Error>(m, "BagselError");

    m.def(
        "label_targets",
        [](int grade) { return std::string(bagsel::to_string(bagsel::label_targets(grade))); },
        "final_grade"_a, "Band a final grade percent into F, G or W.");

    m.def(
        "gini_index",
        [](const std::vector<double>& scores, const std::vector<int>& positives) {
            return bagsel::gini_index(scores, positives);
        },
        "scores"_a, "positives"_a, "Gini index (2*AUC - 1) of a binary ranking.");

    m.def(
        "averaged_gini",
        [](const Eigen::MatrixXd& scores, const std::vector<std::string>& labels) {
            return gini_to_dict(bagsel::averaged_gini(to_scores(scores, false), to_labels(labels)));
        },
        "scores"_a, "labels"_a, "Per-class one-vs-all Gini and its mean.");

    m.def(
        "optimal_threshold",
        [](const std::vector<double>& scores, const std::vector<int>& positives,
           const std::string& method) {
            return bagsel::optimal_threshold(scores, positives,
                                             bagsel::threshold_method_from_string(method));
        },
        "scores"_a, "positives"_a, "method"_a = "youden");

    m.def(
        "normalize_scores",
        [](const std::vector<double>& scores) { return bagsel::normalize_scores(scores); },
        "scores"_a, "Min-max map to [0,1]; constant input maps to 0.5.");

    m.def(
        "predict_classes",
        [](const Eigen::MatrixXd& scores, double tau_f, double tau_g, double tau_w) {
            bagsel::ThresholdSet taus{tau_f, tau_g, tau_w};
            return from_labels(bagsel::predict_classes(to_scores(scores, true), taus));
        },
        "scores"_a, "tau_f"_a, "tau_g"_a, "tau_w"_a,
        "Thresholded three-class prediction (highest score on ties).");

    m.def(
        "confusion_matrix",
        [](const std::vector<std::string>& actual, const std::vector<std::string>& predicted) {
            const auto m3 = bagsel::confusion_matrix(to_labels(actual), to_labels(predicted));
            std::vector<std::vector<std::int64_t>> out;
            for (const auto& row : m3.counts)
                out.emplace_back(row.begin(), row.end());
            return out;
        },
        "actual"_a, "predicted"_a, "3x3 counts, rows = actual (F, G, W).");

    m.def(
        "classification_report",
        [](const std::vector<std::vector<std::int64_t>>& counts) {
            bagsel::ConfusionMatrix cm;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) cm.counts[r][c] = counts.at(r).at(c);
            const auto rep = bagsel::classification_report(cm);
            py::dict per_class;
            for (int c = 0; c < 3; ++c)
                per_class[bagsel::to_string(bagsel::kClassOrder[c])] =
                    stats_to_dict(rep.per_class[c]);
            py::dict d;
            d["per_class"] = per_class;
            d["macro"] = stats_to_dict(rep.macro);
            d["accuracy"] = rep.accuracy;
            return d;
        },
        "counts"_a);

    m.def(
        "gini_pvalue",
        [](double observed, const std::vector<std::string>& labels, int n_sim,
           std::uint64_t seed) {
            return bagsel::gini_pvalue(observed, to_labels(labels), n_sim, seed);
        },
        "observed"_a, "labels"_a, "n_sim"_a = 10000, "seed"_a = 0);

    m.def(
        "stratified_split",
        [](const std::vector<std::string>& labels, double train_fraction, std::uint64_t seed) {
            bagsel::SplitPlan plan;
            plan.train_fraction = train_fraction;
            plan.seed = seed;
            const auto split = bagsel::stratified_split(
                std::span<const bagsel::ClassLabel>(to_labels(labels)), plan);
            return py::make_tuple(split.train_indices, split.test_indices);
        },
        "labels"_a, "train_fraction"_a = 0.7, "seed"_a = 0);

    m.def(
        "pca_project",
        [](const Eigen::MatrixXd& values, int k) {
            const auto res = bagsel::pca_project(values, k);
            return py::make_tuple(res.projected, res.explained_variance_ratio);
        },
        "values"_a, "k"_a = 2, "Returns (projected points, explained variance ratios).");

    m.def(
        "hidden_neuron_candidates",
        [](int n_inputs, int n_outputs) {
            const auto c = bagsel::hidden_neuron_candidates(n_inputs, n_outputs);
            return py::make_tuple(c.raw, c.rounded);
        },
        "n_inputs"_a, "n_outputs"_a = 3);

    m.def("nguyen_widrow_beta", &bagsel::nguyen_widrow_beta, "width"_a, "fan_in"_a);

    m.def(
        "synthetic_blobs",
        [](std::size_t n_per_class, std::size_t n_features, double noise_sigma,
           std::uint64_t seed) {
            const auto fm = bagsel::synthetic_blobs(n_per_class, n_features, noise_sigma, seed);
            return py::make_tuple(fm.values, from_labels(fm.labels));
        },
        "n_per_class"_a, "n_features"_a = 6, "noise_sigma"_a = 6.0, "seed"_a = 0);

    py::class_<bagsel::TrainedModel>(m, "Model", "A fitted base classifier")
        .def_static(
            "train",
            [](const std::string& kind, const Eigen::MatrixXd& x,
               const std::vector<std::string>& labels, const py::dict& params,
               std::uint64_t seed) {
                std::vector<std::string> names;
                for (Eigen::Index j = 0; j < x.cols(); ++j)
                    names.push_back("x" + std::to_string(j + 1));
                return bagsel::train(bagsel::learner_from_string(kind), params_from_dict(params),
                                     x, to_labels(labels), std::move(names), seed);
            },
            "kind"_a, "x"_a, "labels"_a, "params"_a = py::dict(), "seed"_a = 0)
        .def("score",
             [](const bagsel::TrainedModel& model, const Eigen::MatrixXd& rows) {
                 return model.score(rows).scores;
             })
        .def_property_readonly("kind", [](const bagsel::TrainedModel& model) {
            return std::string(bagsel::to_string(model.kind()));
        });

    m.attr("__version__") = "0.1.0";
}
