#include <algorithm>
#include <cmath>

#include "model_impl.hpp"

namespace bagsel::detail {

namespace {

constexpr double kSmoTol = 1e-3;
constexpr double kAlphaEps = 1e-12;
constexpr int kMaxEpochs = 200;

double rbf(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b, double sigma) {
    return std::exp(-sigma * (a - b).squaredNorm());
}

/// One binary soft-margin SVM trained by sequential minimal optimization.
struct BinarySvm {
    Eigen::MatrixXd support;  // standardized rows
    Eigen::VectorXd coeff;    // alpha_i * y_i
    double bias = 0.0;
    double sigma = 0.1;

    double decision(const Eigen::RowVectorXd& z) const {
        double f = bias;
        for (Eigen::Index i = 0; i < support.rows(); ++i)
            f += coeff(i) * rbf(support.row(i), z, sigma);
        return f;
    }
};

/// SMO with deterministic second-choice selection (largest |E_i - E_j|,
/// ties toward the lower index).
BinarySvm smo_train(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double c, double sigma) {
    const Eigen::Index n = z.rows();
    Eigen::MatrixXd kernel(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            kernel(i, j) = kernel(j, i) = rbf(z.row(i), z.row(j), sigma);

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    double b = 0.0;
    Eigen::VectorXd err = -y;  // f(x_i) - y_i with all-zero alphas

    auto take_step = [&](Eigen::Index i, Eigen::Index j) -> bool {
        if (i == j) return false;
        const double ai_old = alpha(i), aj_old = alpha(j);
        double lo, hi;
        if (y(i) != y(j)) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }
        if (lo >= hi) return false;
        const double eta = 2.0 * kernel(i, j) - kernel(i, i) - kernel(j, j);
        if (eta >= 0.0) return false;
        double aj = aj_old - y(j) * (err(i) - err(j)) / eta;
        aj = std::clamp(aj, lo, hi);
        if (std::abs(aj - aj_old) < 1e-7 * (aj + aj_old + 1e-7)) return false;
        const double ai = ai_old + y(i) * y(j) * (aj_old - aj);

        const double b1 = b - err(i) - y(i) * (ai - ai_old) * kernel(i, i) -
                          y(j) * (aj - aj_old) * kernel(i, j);
        const double b2 = b - err(j) - y(i) * (ai - ai_old) * kernel(i, j) -
                          y(j) * (aj - aj_old) * kernel(j, j);
        double b_new;
        if (ai > 0.0 && ai < c)
            b_new = b1;
        else if (aj > 0.0 && aj < c)
            b_new = b2;
        else
            b_new = (b1 + b2) / 2.0;

        err += y(i) * (ai - ai_old) * kernel.col(i) + y(j) * (aj - aj_old) * kernel.col(j);
        err.array() += b_new - b;
        alpha(i) = ai;
        alpha(j) = aj;
        b = b_new;
        return true;
    };

    for (int epoch = 0; epoch < kMaxEpochs; ++epoch) {
        int changed = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = err(i) * y(i);
            if (!((r < -kSmoTol && alpha(i) < c) || (r > kSmoTol && alpha(i) > 0.0))) continue;
            Eigen::Index j_best = -1;
            double gap_best = -1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                const double gap = std::abs(err(i) - err(j));
                if (gap > gap_best) {
                    gap_best = gap;
                    j_best = j;
                }
            }
            if (j_best >= 0 && take_step(i, j_best)) {
                ++changed;
                continue;
            }
            // Fall back to scanning every partner.
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i && j != j_best && take_step(i, j)) {
                    ++changed;
                    break;
                }
            }
        }
        if (changed == 0) break;
    }

    BinarySvm model;
    model.sigma = sigma;
    model.bias = b;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i)
        if (alpha(i) > kAlphaEps) sv.push_back(i);
    model.support.resize(static_cast<Eigen::Index>(sv.size()), z.cols());
    model.coeff.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        model.support.row(static_cast<Eigen::Index>(k)) = z.row(sv[k]);
        model.coeff(static_cast<Eigen::Index>(k)) = alpha(sv[k]) * y(sv[k]);
    }
    return model;
}

/// RBF-kernel SVM, one-vs-one over the three class pairs; scores aggregate
/// the signed pairwise decision values per class. Rankings feed the Gini
/// metric directly, so no probability calibration is applied.
class SvmModel : public ModelImpl {
public:
    // pair order: (F,G), (F,W), (G,W); first class is the +1 side
    static constexpr std::array<std::array<int, 2>, 3> kPairs = {{{0, 1}, {0, 2}, {1, 2}}};

    SvmModel(Standardizer std, std::array<BinarySvm, 3> pairs)
        : std_(std::move(std)), pairs_(std::move(pairs)) {}

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& rows) const override {
        const Eigen::MatrixXd z = std_.apply(rows);
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows.rows(), kNumClasses);
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            for (std::size_t p = 0; p < kPairs.size(); ++p) {
                const double f = pairs_[p].decision(z.row(r));
                out(r, kPairs[p][0]) += f;
                out(r, kPairs[p][1]) -= f;
            }
        }
        return out;
    }

    nlohmann::json payload() const override {
        nlohmann::json jp = nlohmann::json::array();
        for (const auto& p : pairs_) {
            jp.push_back({{"support", mat_to_json(p.support)},
                          {"coeff", vec_to_json(p.coeff)},
                          {"bias", p.bias},
                          {"sigma", p.sigma}});
        }
        return {{"standardizer", std_.to_json()}, {"pairs", std::move(jp)}};
    }

private:
    Standardizer std_;
    std::array<BinarySvm, 3> pairs_;
};

}  // namespace

ModelPtr train_svm(const HyperParams& p, const Eigen::MatrixXd& x, std::span<const ClassLabel> y,
                   std::uint64_t /*seed*/) {
    if (!(p.svm_c > 0.0) || !(p.svm_sigma > 0.0))
        throw ValidationError("svm_c and svm_sigma must be positive");

    const Standardizer std_ = Standardizer::fit(x);
    const Eigen::MatrixXd z = std_.apply(x);

    std::array<BinarySvm, 3> pairs;
    for (std::size_t pi = 0; pi < SvmModel::kPairs.size(); ++pi) {
        const int pos = SvmModel::kPairs[pi][0];
        const int neg = SvmModel::kPairs[pi][1];
        std::vector<Eigen::Index> rows;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const int c = static_cast<int>(y[i]);
            if (c == pos || c == neg) rows.push_back(static_cast<Eigen::Index>(i));
        }
        Eigen::MatrixXd zp(static_cast<Eigen::Index>(rows.size()), z.cols());
        Eigen::VectorXd yp(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            zp.row(static_cast<Eigen::Index>(i)) = z.row(rows[i]);
            yp(static_cast<Eigen::Index>(i)) = static_cast<int>(y[rows[i]]) == pos ? 1.0 : -1.0;
        }
        pairs[pi] = smo_train(zp, yp, p.svm_c, p.svm_sigma);
    }
    return std::make_shared<SvmModel>(std_, std::move(pairs));
}

ModelPtr svm_from_payload(const nlohmann::json& j) {
    std::array<BinarySvm, 3> pairs;
    std::size_t i = 0;
    for (const auto& jp : j.at("pairs")) {
        pairs[i].support = mat_from_json(jp.at("support"));
        pairs[i].coeff = vec_from_json(jp.at("coeff"));
        pairs[i].bias = jp.at("bias").get<double>();
        pairs[i].sigma = jp.at("sigma").get<double>();
        ++i;
    }
    return std::make_shared<SvmModel>(Standardizer::from_json(j.at("standardizer")),
                                      std::move(pairs));
}

}  // namespace bagsel::detail
