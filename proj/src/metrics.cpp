#include "bagsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bagsel/parallel.hpp"
#include "bagsel/rng.hpp"

namespace bagsel {

namespace {

void check_binary_labels(std::span<const int> positives) {
    std::int64_t pos = 0;
    for (int p : positives) pos += (p != 0);
    if (pos == 0 || pos == static_cast<std::int64_t>(positives.size()))
        throw UndefinedMetricError("ranking metric needs at least one positive and one negative");
}

std::vector<std::size_t> order_by_score_desc(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

}  // namespace

RocCurve RocCurve::from_scores(std::span<const double> scores, std::span<const int> positives) {
    if (scores.size() != positives.size())
        throw ValidationError("scores and labels differ in length");
    if (scores.empty()) throw UndefinedMetricError("cannot build a ROC curve from no scores");
    check_binary_labels(positives);
    for (double s : scores)
        if (!std::isfinite(s)) throw ValidationError("scores must be finite");

    double n_pos = 0, n_neg = 0;
    for (int p : positives) (p != 0 ? n_pos : n_neg) += 1.0;

    const auto order = order_by_score_desc(scores);

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double threshold = scores[order[i]];
        // all instances tied at this score move across together
        while (i < order.size() && scores[order[i]] == threshold) {
            (positives[order[i]] != 0 ? tp : fp) += 1.0;
            ++i;
        }
        curve.points.push_back({fp / n_neg, tp / n_pos, threshold});
    }
    return curve;
}

double RocCurve::auc() const {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0;
    }
    return area;
}

double gini_index(std::span<const double> scores, std::span<const int> positives) {
    return 2.0 * RocCurve::from_scores(scores, positives).auc() - 1.0;
}

double gini_index(std::span<const double> scores, std::span<const ClassLabel> labels,
                  ClassLabel positive_class) {
    std::vector<int> positives(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) positives[i] = labels[i] == positive_class;
    return gini_index(scores, positives);
}

AveragedGini AveragedGini::from_per_class(const std::array<double, 3>& g) {
    AveragedGini out;
    out.per_class = g;
    out.mean = (g[0] + g[1] + g[2]) / 3.0;
    return out;
}

AveragedGini averaged_gini(const ClassScores& scores, std::span<const ClassLabel> labels) {
    if (scores.n_rows() != labels.size())
        throw ValidationError("scores and labels differ in length");
    std::array<std::size_t, 3> counts = {0, 0, 0};
    for (ClassLabel l : labels) ++counts[static_cast<int>(l)];
    for (int c = 0; c < kNumClasses; ++c)
        if (counts[c] == 0)
            throw UndefinedMetricError(std::string("class ") + to_string(kClassOrder[c]) +
                                       " is absent; its one-vs-all Gini is undefined");

    std::array<double, 3> g;
    for (int c = 0; c < kNumClasses; ++c) {
        const Eigen::VectorXd col = scores.scores.col(c);
        g[c] = gini_index(std::span<const double>(col.data(), col.size()), labels,
                          kClassOrder[c]);
    }
    return AveragedGini::from_per_class(g);
}

const char* to_string(ThresholdMethod m) {
    return m == ThresholdMethod::Youden ? "youden" : "closest-top-left";
}

ThresholdMethod threshold_method_from_string(const std::string& s) {
    if (s == "youden") return ThresholdMethod::Youden;
    if (s == "closest-top-left") return ThresholdMethod::ClosestTopLeft;
    throw ValidationError("unknown threshold method '" + s + "'");
}

double optimal_threshold(std::span<const double> scores, std::span<const int> positives,
                         ThresholdMethod method) {
    const RocCurve curve = RocCurve::from_scores(scores, positives);
    double best_value = -std::numeric_limits<double>::infinity();
    double best_threshold = curve.points.back().threshold;
    // Skip the synthetic (0,0) point: candidates are the attained scores,
    // swept from the highest down so ties keep the higher threshold.
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        double value;
        if (method == ThresholdMethod::Youden) {
            value = p.tpr - p.fpr;  // sensitivity + specificity - 1
        } else {
            value = -(p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr));
        }
        if (value > best_value) {
            best_value = value;
            best_threshold = p.threshold;
        }
    }
    return best_threshold;
}

std::vector<double> normalize_scores(std::span<const double> scores) {
    std::vector<double> out(scores.size());
    if (scores.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
    return out;
}

Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores) {
    const auto v = normalize_scores(std::span<const double>(scores.data(),
                                                            static_cast<std::size_t>(scores.size())));
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

ClassScores normalize_scores(const ClassScores& scores) {
    ClassScores out;
    out.scores.resize(scores.scores.rows(), scores.scores.cols());
    for (int c = 0; c < kNumClasses; ++c)
        out.scores.col(c) = normalize_scores(Eigen::VectorXd(scores.scores.col(c)));
    out.normalized = true;
    return out;
}

std::vector<ClassLabel> predict_classes(const ClassScores& scores, const ThresholdSet& taus) {
    std::vector<ClassLabel> out;
    out.reserve(scores.n_rows());
    for (Eigen::Index i = 0; i < scores.scores.rows(); ++i) {
        int flags = 0;
        ClassLabel flagged = ClassLabel::F;
        for (ClassLabel c : kClassOrder) {
            if (scores.scores(i, static_cast<int>(c)) >= taus.by(c)) {
                ++flags;
                flagged = c;
            }
        }
        if (flags == 1) {
            out.push_back(flagged);
            continue;
        }
        // No flag or several: highest score wins; ties prefer W, then F, then G.
        ClassLabel best = ClassLabel::W;
        double best_score = scores.scores(i, static_cast<int>(ClassLabel::W));
        for (ClassLabel c : {ClassLabel::F, ClassLabel::G}) {
            const double s = scores.scores(i, static_cast<int>(c));
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        out.push_back(best);
    }
    return out;
}

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
        for (std::int64_t v : row) t += v;
    return t;
}

std::int64_t ConfusionMatrix::trace() const {
    return counts[0][0] + counts[1][1] + counts[2][2];
}

std::int64_t ConfusionMatrix::row_sum(int r) const {
    return counts[r][0] + counts[r][1] + counts[r][2];
}

std::int64_t ConfusionMatrix::col_sum(int c) const {
    return counts[0][c] + counts[1][c] + counts[2][c];
}

ConfusionMatrix ConfusionMatrix::transposed() const {
    ConfusionMatrix t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.counts[c][r] = counts[r][c];
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const ClassLabel> actual,
                                 std::span<const ClassLabel> predicted) {
    if (actual.size() != predicted.size())
        throw ValidationError("actual and predicted label vectors differ in length");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < actual.size(); ++i)
        ++m.counts[static_cast<int>(actual[i])][static_cast<int>(predicted[i])];
    return m;
}

ClassReport classification_report(const ConfusionMatrix& m) {
    const std::int64_t total = m.total();
    if (total <= 0) throw ValidationError("classification report needs a non-empty matrix");

    ClassReport report;
    for (int c = 0; c < kNumClasses; ++c) {
        ClassStats& s = report.per_class[c];
        const std::int64_t tp = m.counts[c][c];
        const std::int64_t col = m.col_sum(c);
        const std::int64_t row = m.row_sum(c);
        if (col > 0) s.precision = static_cast<double>(tp) / static_cast<double>(col);
        if (row > 0) s.recall = static_cast<double>(tp) / static_cast<double>(row);
        if (s.precision && s.recall && (*s.precision + *s.recall) > 0.0)
            s.f_measure = 2.0 * *s.precision * *s.recall / (*s.precision + *s.recall);
        if (total - row > 0)
            s.false_positive_rate =
                static_cast<double>(col - tp) / static_cast<double>(total - row);
    }

    auto macro_of = [&](auto field) -> std::optional<double> {
        double sum = 0.0;
        int n = 0;
        for (const auto& s : report.per_class) {
            if (const auto& v = s.*field) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / n;
    };
    report.macro.precision = macro_of(&ClassStats::precision);
    report.macro.recall = macro_of(&ClassStats::recall);
    report.macro.f_measure = macro_of(&ClassStats::f_measure);
    report.macro.false_positive_rate = macro_of(&ClassStats::false_positive_rate);
    report.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
    return report;
}

GiniNull GiniNull::simulate(std::span<const ClassLabel> labels, int n_sim, std::uint64_t seed) {
    if (n_sim < 100) throw ValidationError("n_sim must be at least 100");
    std::array<std::size_t, 3> counts = {0, 0, 0};
    for (ClassLabel l : labels) ++counts[static_cast<int>(l)];
    for (int c = 0; c < kNumClasses; ++c)
        if (counts[c] == 0)
            throw UndefinedMetricError(std::string("class ") + to_string(kClassOrder[c]) +
                                       " is absent; the Gini null is undefined");

    const std::size_t n = labels.size();
    std::array<std::vector<int>, 3> positives;
    for (int c = 0; c < kNumClasses; ++c) {
        positives[c].resize(n);
        for (std::size_t i = 0; i < n; ++i) positives[c][i] = labels[i] == kClassOrder[c];
    }

    GiniNull null;
    null.n_sim_ = n_sim;
    for (auto& v : null.class_sorted_) v.resize(static_cast<std::size_t>(n_sim));
    null.mean_sorted_.resize(static_cast<std::size_t>(n_sim));

    // One substream per simulation index: the result is independent of how
    // simulations are partitioned across workers.
    parallel_for(static_cast<std::size_t>(n_sim), [&](std::size_t s) {
        Rng rng(mix_seed(seed, seed_tag::kPvalue, s));
        std::vector<double> scores(n);
        double mean = 0.0;
        for (int c = 0; c < kNumClasses; ++c) {
            for (std::size_t i = 0; i < n; ++i) scores[i] = rng.normal();
            const double g = gini_index(scores, positives[c]);
            null.class_sorted_[c][s] = g;
            mean += g;
        }
        null.mean_sorted_[s] = mean / 3.0;
    });

    for (auto& v : null.class_sorted_) std::sort(v.begin(), v.end());
    std::sort(null.mean_sorted_.begin(), null.mean_sorted_.end());
    return null;
}

namespace {
double pvalue_from_sorted(const std::vector<double>& sorted, double observed) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), observed);
    const auto ge = static_cast<double>(sorted.end() - it);
    return (1.0 + ge) / (1.0 + static_cast<double>(sorted.size()));
}
}  // namespace

double GiniNull::pvalue_mean(double observed) const {
    return pvalue_from_sorted(mean_sorted_, observed);
}

double GiniNull::pvalue_class(ClassLabel c, double observed) const {
    return pvalue_from_sorted(class_sorted_[static_cast<int>(c)], observed);
}

double gini_pvalue(double observed, std::span<const ClassLabel> labels, int n_sim,
                   std::uint64_t seed) {
    return GiniNull::simulate(labels, n_sim, seed).pvalue_mean(observed);
}

}  // namespace bagsel
