#include <algorithm>
#include <numeric>

#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

/// k-nearest-neighbor scorer: Euclidean distance on standardized features,
/// scores are the neighbor class fractions. Distance ties break toward the
/// lower training-instance index.
class KnnModel : public ModelImpl {
public:
    KnnModel(int k, Standardizer std, Eigen::MatrixXd train_z, std::vector<int> labels)
        : k_(k), std_(std::move(std)), train_z_(std::move(train_z)), labels_(std::move(labels)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        const Eigen::MatrixXd z = std_.apply(rows);
        const auto n_train = static_cast<std::size_t>(train_z_.rows());
        const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), n_train);

        Eigen::MatrixXd out(z.rows(), kNumClasses);
        std::vector<std::size_t> order(n_train);
        std::vector<double> dist(n_train);
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            for (std::size_t i = 0; i < n_train; ++i)
                dist[i] = (train_z_.row(static_cast<Eigen::Index>(i)) - z.row(r)).squaredNorm();
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                              [&](std::size_t a, std::size_t b) {
                                  if (dist[a] != dist[b]) return dist[a] < dist[b];
                                  return a < b;
                              });
            double votes[kNumClasses] = {0, 0, 0};
            for (std::size_t i = 0; i < k; ++i) votes[labels_[order[i]]] += 1.0;
            for (int c = 0; c < kNumClasses; ++c)
                out(r, c) = votes[c] / static_cast<double>(k);
        }
        return out;
    }

    nlohmann::json payload() const override {
        nlohmann::json j;
        j["k"] = k_;
        j["standardizer"] = std_.to_json();
        j["train_z"] = mat_to_json(train_z_);
        j["labels"] = labels_;
        return j;
    }

private:
    int k_;
    Standardizer std_;
    Eigen::MatrixXd train_z_;
    std::vector<int> labels_;
};

}  // namespace

ModelPtr train_knn(const HyperParams& p, const Eigen::MatrixXd& x, std::span<const ClassLabel> y,
                   std::uint64_t /*seed*/) {
    const Standardizer std = Standardizer::fit(x);
    return std::make_shared<KnnModel>(p.knn_k, std, std.apply(x), labels_to_ints(y));
}

ModelPtr knn_from_payload(const nlohmann::json& j) {
    return std::make_shared<KnnModel>(j.at("k").get<int>(),
                                      Standardizer::from_json(j.at("standardizer")),
                                      mat_from_json(j.at("train_z")),
                                      j.at("labels").get<std::vector<int>>());
}

}  // namespace bagsel::detail
