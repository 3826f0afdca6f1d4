#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bagsel/dataset.hpp"

namespace bagsel {

/// Per-instance class scores, columns in (F, G, W) order.
struct ClassScores {
    Eigen::MatrixXd scores;  // n x 3
    bool normalized = false;

    std::size_t n_rows() const { return static_cast<std::size_t>(scores.rows()); }
    Eigen::VectorXd column(ClassLabel c) const { return scores.col(static_cast<int>(c)); }
};

/// Empirical ROC curve. The points trace the score distribution from the
/// highest threshold (0,0) down to the lowest (1,1); tied scores collapse
/// into a single step so the trapezoidal area gives ties half credit.
struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // predict positive when score >= threshold
};

struct RocCurve {
    std::vector<RocPoint> points;

    static RocCurve from_scores(std::span<const double> scores, std::span<const int> positives);
    double auc() const;  // trapezoidal integration
};

/// Gini index = 2*AUC - 1 of the one-vs-all ranking. Requires at least one
/// positive and one negative.
double gini_index(std::span<const double> scores, std::span<const int> positives);
double gini_index(std::span<const double> scores, std::span<const ClassLabel> labels,
                  ClassLabel positive_class);

/// One-vs-all Gini per class plus their unweighted mean.
struct AveragedGini {
    std::array<double, 3> per_class = {0.0, 0.0, 0.0};  // (F, G, W)
    double mean = 0.0;

    static AveragedGini from_per_class(const std::array<double, 3>& g);
    double by(ClassLabel c) const { return per_class[static_cast<int>(c)]; }
};

AveragedGini averaged_gini(const ClassScores& scores, std::span<const ClassLabel> labels);

enum class ThresholdMethod { Youden, ClosestTopLeft };
const char* to_string(ThresholdMethod m);
ThresholdMethod threshold_method_from_string(const std::string& s);

/// Pick the best classification threshold among the attained score values.
/// Youden maximizes sensitivity + specificity - 1; ClosestTopLeft minimizes
/// the distance to the ROC corner (0,1). Ties resolve to the higher threshold.
double optimal_threshold(std::span<const double> scores, std::span<const int> positives,
                         ThresholdMethod method);

/// Min-max map to [0,1]; a constant column maps to all 0.5.
std::vector<double> normalize_scores(std::span<const double> scores);
Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores);
/// Column-wise normalization of a score triple.
ClassScores normalize_scores(const ClassScores& scores);

struct ThresholdSet {
    double tau_f = 0.0;
    double tau_g = 0.0;
    double tau_w = 0.0;

    double by(ClassLabel c) const {
        switch (c) {
            case ClassLabel::F: return tau_f;
            case ClassLabel::G: return tau_g;
            case ClassLabel::W: return tau_w;
        }
        throw ValidationError("invalid class label");
    }
};

/// Three-step rule: flag each class whose normalized score reaches its
/// threshold; exactly one flag decides the class, otherwise the highest
/// score wins (ties broken toward W, then F, then G).
std::vector<ClassLabel> predict_classes(const ClassScores& scores, const ThresholdSet& taus);

/// 3x3 contingency counts; rows = actual class, columns = predicted, both in
/// (F, G, W) order.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 3>, 3> counts = {{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}};

    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t row_sum(int r) const;
    std::int64_t col_sum(int c) const;
    ConfusionMatrix transposed() const;
};

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> actual,
                                 std::span<const ClassLabel> predicted);

/// Per-class precision/recall/F/FPR; a field is absent when its denominator
/// is zero.
struct ClassStats {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f_measure;
    std::optional<double> false_positive_rate;
};

struct ClassReport {
    std::array<ClassStats, 3> per_class;  // (F, G, W)
    ClassStats macro;                     // mean of the defined per-class values
    double accuracy = 0.0;
};

ClassReport classification_report(const ConfusionMatrix& m);

/// Simulated null distribution of the (per-class and averaged) Gini for a
/// fixed label vector: each simulation draws three independent standard
/// normal score vectors. Built once and queried many times; a p-value is
/// (1 + #{simulated >= observed}) / (1 + n_sim).
class GiniNull {
public:
    static GiniNull simulate(std::span<const ClassLabel> labels, int n_sim, std::uint64_t seed);

    double pvalue_mean(double observed) const;
    double pvalue_class(ClassLabel c, double observed) const;
    int n_sim() const { return n_sim_; }

private:
    int n_sim_ = 0;
    std::array<std::vector<double>, 3> class_sorted_;
    std::vector<double> mean_sorted_;
};

/// p-value of an observed averaged Gini under the random-scores null.
/// n_sim must be at least 100.
double gini_pvalue(double observed, std::span<const ClassLabel> labels, int n_sim,
                   std::uint64_t seed);

}  // namespace bagsel
