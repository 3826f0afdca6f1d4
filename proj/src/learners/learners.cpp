#include "bagsel/learners.hpp"

#include <cmath>
#include <sstream>

#include "model_impl.hpp"

namespace bagsel {

using nlohmann::json;

const char* to_string(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Knn: return "knn";
        case LearnerKind::NaiveBayes: return "nb";
        case LearnerKind::LogisticRegression: return "lr";
        case LearnerKind::RandomForest: return "rf";
        case LearnerKind::SvmRbf: return "svm";
        case LearnerKind::Nn1: return "nn1";
        case LearnerKind::Nn2: return "nn2";
        case LearnerKind::Nn3: return "nn3";
    }
    throw ValidationError("invalid learner kind");
}

const char* display_name(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Knn: return "k-NN";
        case LearnerKind::NaiveBayes: return "NB";
        case LearnerKind::LogisticRegression: return "LR";
        case LearnerKind::RandomForest: return "RF";
        case LearnerKind::SvmRbf: return "SVM-RBF";
        case LearnerKind::Nn1: return "NN1";
        case LearnerKind::Nn2: return "NN2";
        case LearnerKind::Nn3: return "NN3";
    }
    throw ValidationError("invalid learner kind");
}

LearnerKind learner_from_string(const std::string& s) {
    for (LearnerKind k : kAllLearners)
        if (s == to_string(k)) return k;
    throw ValidationError("unknown learner kind '" + s + "'");
}

int nn_layers_for(LearnerKind kind) {
    switch (kind) {
        case LearnerKind::Nn1: return 1;
        case LearnerKind::Nn2: return 2;
        case LearnerKind::Nn3: return 3;
        default: return 0;
    }
}

json HyperParams::to_json() const {
    return json{{"knn_k", knn_k},
                {"nb_usekernel", nb_usekernel},
                {"rf_mtry", rf_mtry},
                {"rf_ntrees", rf_ntrees},
                {"svm_c", svm_c},
                {"svm_sigma", svm_sigma},
                {"nn_neurons_per_layer", nn_neurons_per_layer},
                {"nn_layers", nn_layers}};
}

HyperParams HyperParams::from_json(const json& j) {
    HyperParams p;
    p.knn_k = j.value("knn_k", p.knn_k);
    p.nb_usekernel = j.value("nb_usekernel", p.nb_usekernel);
    p.rf_mtry = j.value("rf_mtry", p.rf_mtry);
    p.rf_ntrees = j.value("rf_ntrees", p.rf_ntrees);
    p.svm_c = j.value("svm_c", p.svm_c);
    p.svm_sigma = j.value("svm_sigma", p.svm_sigma);
    p.nn_neurons_per_layer = j.value("nn_neurons_per_layer", p.nn_neurons_per_layer);
    p.nn_layers = j.value("nn_layers", p.nn_layers);
    return p;
}

std::string HyperParams::describe(LearnerKind kind) const {
    std::ostringstream os;
    switch (kind) {
        case LearnerKind::Knn: os << "k=" << knn_k; break;
        case LearnerKind::NaiveBayes:
            os << "usekernel=" << (nb_usekernel ? "true" : "false");
            break;
        case LearnerKind::LogisticRegression: os << "-"; break;
        case LearnerKind::RandomForest:
            os << "mtry=" << rf_mtry << ",ntrees=" << rf_ntrees;
            break;
        case LearnerKind::SvmRbf: os << "C=" << svm_c << ",sigma=" << svm_sigma; break;
        case LearnerKind::Nn1:
        case LearnerKind::Nn2:
        case LearnerKind::Nn3:
            os << "layers=" << nn_layers_for(kind) << ",neurons=" << nn_neurons_per_layer;
            break;
    }
    return os.str();
}

namespace detail {

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.sigma.resize(x.cols());
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double var = 0.0;
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double d = x(r, c) - s.mean(c);
            var += d * d;
        }
        const double sd = n > 1.0 ? std::sqrt(var / (n - 1.0)) : 0.0;
        s.sigma(c) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() /
           sigma.transpose().array();
}

json Standardizer::to_json() const {
    return json{{"mean", vec_to_json(mean)}, {"sigma", vec_to_json(sigma)}};
}

Standardizer Standardizer::from_json(const json& j) {
    Standardizer s;
    s.mean = vec_from_json(j.at("mean"));
    s.sigma = vec_from_json(j.at("sigma"));
    return s;
}

json vec_to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
    return j;
}

Eigen::VectorXd vec_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    Eigen::Index i = 0;
    for (const auto& e : j) v(i++) = e.get<double>();
    return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(std::move(row));
    }
    // keep the column count recoverable for empty matrices
    return json{{"cols", m.cols()}, {"rows", std::move(j)}};
}

Eigen::MatrixXd mat_from_json(const json& j) {
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto& rows = j.at("rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (const auto& e : row) m(r, c++) = e.get<double>();
        ++r;
    }
    return m;
}

std::vector<int> labels_to_ints(std::span<const ClassLabel> y) {
    std::vector<int> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = static_cast<int>(y[i]);
    return out;
}

}  // namespace detail

namespace {

void validate_for_training(LearnerKind kind, const HyperParams& p, const Eigen::MatrixXd& x,
                           std::span<const ClassLabel> y) {
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw ValidationError("features and labels differ in length");
    if (x.rows() == 0) throw ValidationError("cannot train on an empty dataset");

    const bool needs_two =
        kind == LearnerKind::LogisticRegression || nn_layers_for(kind) > 0;
    std::array<std::size_t, 3> counts = {0, 0, 0};
    for (ClassLabel l : y) ++counts[static_cast<int>(l)];
    for (int c = 0; c < kNumClasses; ++c) {
        const std::size_t need = needs_two ? 2 : 1;
        if (counts[c] < need)
            throw ValidationError(std::string("training data needs >= ") +
                                  std::to_string(need) + " instances of class " +
                                  to_string(kClassOrder[c]) + " for " + to_string(kind));
    }

    if (kind == LearnerKind::Knn) {
        if (p.knn_k < 1 || p.knn_k % 2 == 0)
            throw ValidationError("knn_k must be an odd integer >= 1");
    }
}

}  // namespace

ClassScores TrainedModel::score(const Eigen::MatrixXd& rows) const {
    if (!impl_) throw ValidationError("model is not trained");
    if (rows.cols() != static_cast<Eigen::Index>(feature_names_.size()))
        throw SchemaError("scoring rows have " + std::to_string(rows.cols()) +
                          " columns, model was trained on " +
                          std::to_string(feature_names_.size()));
    ClassScores out;
    out.scores = impl_->raw_scores(rows);
    out.normalized = false;
    if (!out.scores.allFinite())
        throw TrainingError(std::string("model ") + to_string(kind_) +
                            " produced a non-finite score");
    return out;
}

ClassScores TrainedModel::score(const FeatureMatrix& data) const {
    if (data.feature_names != feature_names_)
        throw SchemaError("feature columns differ from the training column order");
    return score(data.values);
}

json TrainedModel::to_json() const {
    if (!impl_) throw ValidationError("model is not trained");
    json j;
    j["format"] = "bagsel-model";
    j["version"] = 1;
    j["kind"] = to_string(kind_);
    j["params"] = params_.to_json();
    j["feature_names"] = feature_names_;
    j["payload"] = impl_->payload();
    return j;
}

TrainedModel TrainedModel::from_json(const json& j) {
    if (j.value("format", "") != "bagsel-model" || j.value("version", 0) != 1)
        throw ValidationError("not a version-1 bagsel model file");
    TrainedModel m;
    m.kind_ = learner_from_string(j.at("kind").get<std::string>());
    m.params_ = HyperParams::from_json(j.at("params"));
    m.feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
    const auto& payload = j.at("payload");
    switch (m.kind_) {
        case LearnerKind::Knn: m.impl_ = detail::knn_from_payload(payload); break;
        case LearnerKind::NaiveBayes: m.impl_ = detail::naive_bayes_from_payload(payload); break;
        case LearnerKind::LogisticRegression:
            m.impl_ = detail::logistic_from_payload(payload);
            break;
        case LearnerKind::RandomForest: m.impl_ = detail::forest_from_payload(payload); break;
        case LearnerKind::SvmRbf: m.impl_ = detail::svm_from_payload(payload); break;
        case LearnerKind::Nn1:
        case LearnerKind::Nn2:
        case LearnerKind::Nn3: m.impl_ = detail::neural_from_payload(payload); break;
    }
    return m;
}

TrainedModel train(LearnerKind kind, const HyperParams& params, const Eigen::MatrixXd& x,
                   std::span<const ClassLabel> y, std::vector<std::string> feature_names,
                   std::uint64_t seed) {
    validate_for_training(kind, params, x, y);
    TrainedModel m;
    m.kind_ = kind;
    m.params_ = params;
    m.params_.nn_layers = nn_layers_for(kind) > 0 ? nn_layers_for(kind) : params.nn_layers;
    m.feature_names_ = std::move(feature_names);
    switch (kind) {
        case LearnerKind::Knn: m.impl_ = detail::train_knn(params, x, y, seed); break;
        case LearnerKind::NaiveBayes:
            m.impl_ = detail::train_naive_bayes(params, x, y, seed);
            break;
        case LearnerKind::LogisticRegression:
            m.impl_ = detail::train_logistic(params, x, y, seed);
            break;
        case LearnerKind::RandomForest: m.impl_ = detail::train_forest(params, x, y, seed); break;
        case LearnerKind::SvmRbf: m.impl_ = detail::train_svm(params, x, y, seed); break;
        case LearnerKind::Nn1:
        case LearnerKind::Nn2:
        case LearnerKind::Nn3:
            m.impl_ = detail::train_neural(params, kind, x, y, seed);
            break;
    }
    return m;
}

TrainedModel train(LearnerKind kind, const HyperParams& params, const FeatureMatrix& data,
                   std::uint64_t seed) {
    return train(kind, params, data.values, data.labels, data.feature_names, seed);
}

}  // namespace bagsel
