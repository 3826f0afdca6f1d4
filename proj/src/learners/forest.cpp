#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "bagsel/rng.hpp"
#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0; // go left when value < threshold
    int left = -1;
    int right = -1;
    int leaf_class = -1;
};

using Tree = std::vector<TreeNode>;

double gini_impurity(const std::array<double, 3>& counts, double n) {
    double g = 1.0;
    for (double c : counts) g -= (c / n) * (c / n);
    return g;
}

int majority_class(const std::array<double, 3>& counts) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (counts[c] > counts[best]) best = c;
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& y, int mtry, Rng& rng)
        : x_(x), y_(y), mtry_(mtry), rng_(rng) {}

    Tree build(std::vector<Eigen::Index> rows) {
        tree_.clear();
        grow(std::move(rows));
        return std::move(tree_);
    }

private:
    int grow(std::vector<Eigen::Index> rows) {
        std::array<double, 3> counts = {0, 0, 0};
        for (Eigen::Index r : rows) counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(r)])] += 1.0;
        const double n = static_cast<double>(rows.size());

        const int node = static_cast<int>(tree_.size());
        tree_.emplace_back();

        const bool pure = counts[0] == n || counts[1] == n || counts[2] == n;
        if (pure || rows.size() < 2) {
            tree_[static_cast<std::size_t>(node)].leaf_class = majority_class(counts);
            return node;
        }

        // Draw mtry candidate features without replacement.
        std::vector<int> features(static_cast<std::size_t>(x_.cols()));
        std::iota(features.begin(), features.end(), 0);
        const int m = std::min<int>(mtry_, static_cast<int>(features.size()));
        for (int i = 0; i < m; ++i) {
            const auto j = i + static_cast<int>(rng_.below(features.size() - static_cast<std::size_t>(i)));
            std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<std::pair<double, Eigen::Index>> vals(rows.size());

        for (int fi = 0; fi < m; ++fi) {
            const int f = features[static_cast<std::size_t>(fi)];
            for (std::size_t i = 0; i < rows.size(); ++i)
                vals[i] = {x_(rows[i], f), rows[i]};
            std::sort(vals.begin(), vals.end());

            std::array<double, 3> left = {0, 0, 0};
            std::array<double, 3> right = counts;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                const int cls = y_[static_cast<std::size_t>(vals[i].second)];
                left[static_cast<std::size_t>(cls)] += 1.0;
                right[static_cast<std::size_t>(cls)] -= 1.0;
                if (vals[i].first == vals[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                const double score =
                    (nl * gini_impurity(left, nl) + nr * gini_impurity(right, nr)) / n;
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = (vals[i].first + vals[i + 1].first) / 2.0;
                }
            }
        }

        if (best_feature < 0) {
            // All candidate features constant on this node.
            tree_[static_cast<std::size_t>(node)].leaf_class = majority_class(counts);
            return node;
        }

        std::vector<Eigen::Index> left_rows, right_rows;
        for (Eigen::Index r : rows)
            (x_(r, best_feature) < best_threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        const int left = grow(std::move(left_rows));
        const int right = grow(std::move(right_rows));
        tree_[static_cast<std::size_t>(node)].feature = best_feature;
        tree_[static_cast<std::size_t>(node)].threshold = best_threshold;
        tree_[static_cast<std::size_t>(node)].left = left;
        tree_[static_cast<std::size_t>(node)].right = right;
        return node;
    }

    const Eigen::MatrixXd& x_;
    const std::vector<int>& y_;
    int mtry_;
    Rng& rng_;
    Tree tree_;
};

int tree_predict(const Tree& tree, const Eigen::RowVectorXd& x) {
    int node = 0;
    while (tree[static_cast<std::size_t>(node)].leaf_class < 0) {
        const auto& nd = tree[static_cast<std::size_t>(node)];
        node = x(nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    return tree[static_cast<std::size_t>(node)].leaf_class;
}

/// Bootstrap-aggregated CART trees with Gini-impurity splits; scores are the
/// per-class vote fractions across trees.
class ForestModel : public ModelImpl {
public:
    explicit ForestModel(std::vector<Tree> trees) : trees_(std::move(trees)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.rows(), kNumClasses);
        for (Eigen::Index r = 0; r < rows.rows(); ++r) {
            for (const auto& tree : trees_)
                out(r, tree_predict(tree, rows.row(r))) += 1.0;
            out.row(r) /= static_cast<double>(trees_.size());
        }
        return out;
    }

    nlohmann::json payload() const override {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json jn = nlohmann::json::array();
            for (const auto& nd : tree)
                jn.push_back({nd.feature, nd.threshold, nd.left, nd.right, nd.leaf_class});
            jt.push_back(std::move(jn));
        }
        return {{"trees", std::move(jt)}};
    }

private:
    std::vector<Tree> trees_;
};

}  // namespace

ModelPtr train_forest(const HyperParams& p, const Eigen::MatrixXd& x,
                      std::span<const ClassLabel> y, std::uint64_t seed) {
    if (p.rf_mtry < 1 || p.rf_mtry > x.cols())
        throw ValidationError("rf_mtry must lie in [1, feature count]");
    if (p.rf_ntrees < 1) throw ValidationError("rf_ntrees must be >= 1");

    const std::vector<int> yi = labels_to_ints(y);
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<Tree> trees(static_cast<std::size_t>(p.rf_ntrees));
    for (std::size_t t = 0; t < trees.size(); ++t) {
        Rng rng(mix_seed(seed, seed_tag::kModel, t));
        std::vector<Eigen::Index> rows(n);
        for (std::size_t i = 0; i < n; ++i)
            rows[i] = static_cast<Eigen::Index>(rng.below(n));
        TreeBuilder builder(x, yi, p.rf_mtry, rng);
        trees[t] = builder.build(std::move(rows));
    }
    return std::make_shared<ForestModel>(std::move(trees));
}

ModelPtr forest_from_payload(const nlohmann::json& j) {
    std::vector<Tree> trees;
    for (const auto& jt : j.at("trees")) {
        Tree tree;
        for (const auto& jn : jt) {
            TreeNode nd;
            nd.feature = jn.at(0).get<int>();
            nd.threshold = jn.at(1).get<double>();
            nd.left = jn.at(2).get<int>();
            nd.right = jn.at(3).get<int>();
            nd.leaf_class = jn.at(4).get<int>();
            tree.push_back(nd);
        }
        trees.push_back(std::move(tree));
    }
    return std::make_shared<ForestModel>(std::move(trees));
}

}  // namespace bagsel::detail
