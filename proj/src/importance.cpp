#include "bagsel/importance.hpp"

#include <algorithm>
#include <numeric>

#include "bagsel/metrics.hpp"
#include "bagsel/rng.hpp"

namespace bagsel {

std::vector<double> permutation_importance_fn(const ScoreFn& score, const Eigen::MatrixXd& x,
                                              std::span<const ClassLabel> labels, int n_repeats,
                                              const PermutationFn& permutation) {
    if (n_repeats < 1) throw ValidationError("n_repeats must be >= 1");
    const double baseline = averaged_gini(score(x), labels).mean;

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> out(static_cast<std::size_t>(x.cols()));
    Eigen::MatrixXd permuted = x;
    for (std::size_t f = 0; f < out.size(); ++f) {
        double sum = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            const std::vector<std::size_t> perm = permutation(f, rep, n);
            if (perm.size() != n) throw ValidationError("permutation has wrong length");
            for (std::size_t i = 0; i < n; ++i)
                permuted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
                    x(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(f));
            sum += averaged_gini(score(permuted), labels).mean;
        }
        permuted.col(static_cast<Eigen::Index>(f)) = x.col(static_cast<Eigen::Index>(f));
        out[f] = baseline - sum / n_repeats;
    }
    return out;
}

std::vector<double> permutation_importance(const TrainedModel& model, const Eigen::MatrixXd& x,
                                           std::span<const ClassLabel> labels, int n_repeats,
                                           std::uint64_t seed) {
    return permutation_importance_fn(
        [&](const Eigen::MatrixXd& rows) { return model.score(rows); }, x, labels, n_repeats,
        [seed](std::size_t feature, int repeat, std::size_t n) {
            Rng rng(mix_seed(seed, seed_tag::kImportance, feature,
                             static_cast<std::uint64_t>(repeat)));
            return rng.permutation(n);
        });
}

ImportanceRanking averaged_importance(const BaggedModel& b, const Eigen::MatrixXd& x,
                                      std::span<const ClassLabel> labels,
                                      std::span<const std::string> feature_names, int n_repeats,
                                      std::uint64_t seed) {
    if (b.members.empty()) throw ValidationError("bagging has no members");
    if (feature_names.size() != static_cast<std::size_t>(x.cols()))
        throw ValidationError("feature_names length does not match column count");

    std::vector<double> sums(static_cast<std::size_t>(x.cols()), 0.0);
    for (std::size_t m = 0; m < b.members.size(); ++m) {
        const auto scores = permutation_importance(b.members[m], x, labels, n_repeats,
                                                   mix_seed(seed, seed_tag::kImportance, m));
        for (std::size_t f = 0; f < sums.size(); ++f) sums[f] += scores[f];
    }

    ImportanceRanking ranking;
    ranking.feature_names.assign(feature_names.begin(), feature_names.end());
    ranking.mean_importance.resize(sums.size());
    for (std::size_t f = 0; f < sums.size(); ++f)
        ranking.mean_importance[f] = sums[f] / static_cast<double>(b.members.size());

    // Dense ranks: descending score, ties by feature name.
    std::vector<std::size_t> order(sums.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (ranking.mean_importance[a] != ranking.mean_importance[c])
            return ranking.mean_importance[a] > ranking.mean_importance[c];
        return ranking.feature_names[a] < ranking.feature_names[c];
    });
    ranking.rank.resize(sums.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        ranking.rank[order[pos]] = static_cast<int>(pos + 1);
    return ranking;
}

ImportanceRanking averaged_importance(const BaggedModel& b, const FeatureMatrix& data,
                                      int n_repeats, std::uint64_t seed) {
    return averaged_importance(b, data.values, data.labels, data.feature_names, n_repeats, seed);
}

}  // namespace bagsel
