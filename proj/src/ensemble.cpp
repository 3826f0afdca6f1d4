#include "bagsel/ensemble.hpp"

#include <algorithm>
#include <bit>

namespace bagsel {

int EnsembleId::member_count() const { return std::popcount(bitmask); }

std::vector<LearnerKind> EnsembleId::members() const {
    std::vector<LearnerKind> out;
    for (LearnerKind k : kAllLearners)
        if (contains(k)) out.push_back(k);
    return out;
}

std::string EnsembleId::name() const {
    std::string out;
    for (LearnerKind k : members()) {
        if (!out.empty()) out += '+';
        out += to_string(k);
    }
    return out;
}

EnsembleId EnsembleId::of(std::initializer_list<LearnerKind> kinds) {
    EnsembleId id;
    for (LearnerKind k : kinds) id.bitmask |= 1u << static_cast<int>(k);
    return id;
}

std::vector<EnsembleId> enumerate_ensembles(std::span<const LearnerKind> available) {
    if (available.empty()) throw ValidationError("no learner kinds available to enumerate");
    std::uint32_t available_mask = 0;
    for (LearnerKind k : available) available_mask |= 1u << static_cast<int>(k);

    std::vector<EnsembleId> out;
    for (std::uint32_t mask = 1; mask < (1u << kNumLearners); ++mask) {
        if ((mask & ~available_mask) == 0) out.push_back({mask});
    }
    return out;
}

void SplitBaggings::prepare() {
    normalized.clear();
    for (const auto& [kind, bagging] : baggings) {
        const ClassScores raw = bagging_score(bagging, test_x);
        normalized[kind] = normalize_scores(raw).scores;
    }
}

const Eigen::MatrixXd& SplitBaggings::normalized_scores(LearnerKind kind) const {
    const auto it = normalized.find(kind);
    if (it == normalized.end())
        throw DependencyError("no bagging for (split " + std::to_string(split_index) +
                              ", kind " + to_string(kind) + ")");
    return it->second;
}

ClassScores combine_scores(std::span<const BaggedModel* const> members,
                           const Eigen::MatrixXd& test_rows) {
    if (members.empty()) throw ValidationError("ensemble needs at least one member bagging");
    ClassScores out;
    out.scores = Eigen::MatrixXd::Zero(test_rows.rows(), kNumClasses);
    for (const BaggedModel* member : members) {
        if (member == nullptr || member->members.empty())
            throw ValidationError("ensemble member bagging is empty");
        out.scores += normalize_scores(bagging_score(*member, test_rows)).scores;
    }
    out.scores /= static_cast<double>(members.size());
    out.normalized = true;
    return out;
}

EnsembleEvaluation evaluate_across_splits(EnsembleId id,
                                          std::span<const SplitBaggings> splits) {
    if (id.bitmask == 0) throw ValidationError("ensemble must be non-empty");
    if (splits.empty()) throw ValidationError("no splits to evaluate on");

    EnsembleEvaluation eval;
    eval.id = id;
    double sum = 0.0;
    for (const auto& split : splits) {
        const auto kinds = id.members();
        for (LearnerKind k : kinds) {
            if (!split.baggings.contains(k))
                throw DependencyError("no bagging for (split " +
                                      std::to_string(split.split_index) + ", kind " +
                                      to_string(k) + ")");
        }

        SplitEval se;
        se.split_index = split.split_index;
        se.combined.scores = Eigen::MatrixXd::Zero(split.test_x.rows(), kNumClasses);
        if (!split.normalized.empty()) {
            for (LearnerKind k : kinds) se.combined.scores += split.normalized_scores(k);
            se.combined.scores /= static_cast<double>(kinds.size());
        } else {
            std::vector<const BaggedModel*> members;
            for (LearnerKind k : kinds) members.push_back(&split.baggings.at(k));
            se.combined = combine_scores(members, split.test_x);
        }
        se.combined.normalized = true;

        se.gini = averaged_gini(se.combined, split.test_labels);
        for (int c = 0; c < kNumClasses; ++c)
            se.p_class[static_cast<std::size_t>(c)] =
                split.null_dist.pvalue_class(kClassOrder[c], se.gini.per_class[c]);
        se.p_mean = split.null_dist.pvalue_mean(se.gini.mean);

        sum += se.gini.mean;
        eval.per_split.push_back(std::move(se));
    }
    eval.mean_averaged_gini = sum / static_cast<double>(eval.per_split.size());
    return eval;
}

const char* to_string(SelectionMode m) {
    return m == SelectionMode::Strict ? "strict" : "target-class";
}

SelectionMode selection_mode_from_string(const std::string& s) {
    if (s == "strict") return SelectionMode::Strict;
    if (s == "target-class") return SelectionMode::TargetClass;
    throw ValidationError("unknown selection mode '" + s + "'");
}

namespace {

bool passes_gate(const EnsembleEvaluation& eval, double alpha, SelectionMode mode) {
    for (const auto& se : eval.per_split) {
        if (mode == SelectionMode::Strict) {
            for (double p : se.p_class)
                if (p > alpha) return false;
        } else {
            if (se.p_class[static_cast<int>(ClassLabel::W)] > alpha) return false;
        }
    }
    return true;
}

bool ranks_before(const EnsembleEvaluation& a, const EnsembleEvaluation& b) {
    if (a.mean_averaged_gini != b.mean_averaged_gini)
        return a.mean_averaged_gini > b.mean_averaged_gini;
    if (a.id.member_count() != b.id.member_count())
        return a.id.member_count() < b.id.member_count();
    return a.id.bitmask < b.id.bitmask;
}

}  // namespace

SelectionReport select_best(std::span<const EnsembleEvaluation> evals, double alpha,
                            SelectionMode mode) {
    if (evals.empty()) throw ValidationError("no evaluations to select from");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("alpha must lie in [0,1]");

    SelectionReport report;
    report.mode = mode;
    report.alpha = alpha;
    report.ranked.assign(evals.begin(), evals.end());
    std::sort(report.ranked.begin(), report.ranked.end(), ranks_before);

    for (const auto& eval : report.ranked) {
        if (passes_gate(eval, alpha, mode)) {
            report.winner = eval.id;
            break;
        }
    }
    if (!report.winner) {
        report.no_winner_reason = std::string("no ensemble was statistically significant (") +
                                  to_string(mode) + " gate, alpha " + std::to_string(alpha) +
                                  ")";
    }
    return report;
}

}  // namespace bagsel
